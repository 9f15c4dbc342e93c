#include <CLI11.hpp>
#include <boost/property_tree/ini_parser.hpp>
#include <cmath>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "romkit/errors.hpp"
#include "romkit/pipeline.hpp"

namespace {

constexpr int kConfigError = 2;
constexpr int kStageFailure = 3;

struct Options {
  std::string config;
  std::string root;
  bool quiet = false;
  std::vector<double> mu;
  double dt = 0.0;
  double t_final = 0.0;
  std::string out;
  bool no_reference = false;
};

romkit::RunConfig load_config(const Options& o) {
  romkit::RunConfig c = o.config.empty() ? romkit::RunConfig{} : romkit::RunConfig::load(o.config);
  if (o.dt > 0.0) c.online.dt = o.dt;
  if (o.t_final > 0.0) c.online.t_final = o.t_final;
  if (o.dt > 0.0 || o.t_final > 0.0) {
    const double spacing = c.fom.dt * c.fom.snapshot_every;
    const double ratio = spacing / c.online.dt;
    if (std::abs(ratio - std::round(ratio)) < 1e-9 && ratio >= 1.0) c.online.save_every = static_cast<int>(std::lround(ratio));
  }
  c.validate();
  return c;
}

std::optional<std::filesystem::path> root_override(const Options& o) {
  if (o.root.empty()) return std::nullopt;
  return std::filesystem::path(o.root);
}

void print_stages(const std::vector<romkit::StageStatus>& stages) {
  for (const auto& s : stages)
    std::cout << romkit::to_string(s.stage) << (s.cached ? " cached " : " ran ") << s.output_hash.substr(0, 12) << " "
              << s.seconds << " s\n";
}

void print_report(const romkit::OnlineResult& r) {
  std::cout << "rom seconds " << r.rom_seconds << ", saved states " << r.trajectory.states.size()
            << (r.extrapolated ? ", extrapolated" : "") << "\n";
  if (!r.report) return;
  for (const auto& f : r.report->fields) {
    const auto& s = r.report->statistics.at(f);
    if (s) std::cout << f << " error min " << s->min << " % avg " << s->average << " % max " << s->max << " %\n";
    else std::cout << f << " error undefined\n";
  }
  if (const auto s = r.report->speedup_factor()) std::cout << "speedup " << *s << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Reduced-order modelling of a heated tee-junction flow: offline stages and online queries"};
  app.require_subcommand(1);
  Options o;
  app.add_option("-c,--config", o.config, "run configuration file (sectioned key = value)");
  app.add_option("-r,--root", o.root, "artifact root (default: $ROMKIT_CACHE, then output.root)");
  app.add_flag("-q,--quiet", o.quiet, "no progress output");

  std::vector<std::pair<CLI::App*, romkit::Stage>> stage_commands;
  for (auto [name, stage, help] :
       {std::tuple{"generate", romkit::Stage::Generate, "run the full-order model at every training parameter"},
        std::tuple{"lift", romkit::Stage::Lift, "compute the lifting functions"},
        std::tuple{"pod", romkit::Stage::Pod, "homogenize snapshots and compute the POD bases and supremizers"},
        std::tuple{"project", romkit::Stage::Project, "assemble the reduced operators"},
        std::tuple{"train-rbf", romkit::Stage::TrainRbf, "fit the eddy-viscosity coefficient interpolant"}})
    stage_commands.emplace_back(app.add_subcommand(name, std::string(help) + " (and any stale earlier stage)"), stage);

  auto add_query = [&](CLI::App* cmd) {
    cmd->add_option("--mu", o.mu, "inlet velocities U_m U_b")->expected(2)->required();
    cmd->add_option("--dt", o.dt, "online time step (s)");
    cmd->add_option("--T", o.t_final, "final time (s)");
    cmd->add_option("--out", o.out, "output directory")->required();
  };
  CLI::App* solve = app.add_subcommand("solve", "online solve and reconstruction at one parameter");
  add_query(solve);
  CLI::App* eval = app.add_subcommand("eval", "online solve compared against a full-order reference run");
  add_query(eval);
  eval->add_flag("--no-reference", o.no_reference, "skip the reference run");
  CLI::App* pipeline = app.add_subcommand("pipeline", "all offline stages, then every test parameter");
  CLI::App* show = app.add_subcommand("config", "print the effective configuration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }

  try {
    romkit::set_verbose(!o.quiet);
    const romkit::RunConfig config = load_config(o);
    const std::filesystem::path root = romkit::resolve_root(config, root_override(o));
    if (show->parsed()) {
      std::cout << "# artifact root: " << root.string() << "\n";
      boost::property_tree::write_ini(std::cout, config.to_manifest().tree());
      return 0;
    }
    for (const auto& [cmd, stage] : stage_commands)
      if (cmd->parsed()) {
        print_stages(romkit::run_offline(config, root, stage));
        return 0;
      }
    if (pipeline->parsed()) {
      const auto result = romkit::run_pipeline(config, root);
      print_stages(result.stages);
      for (std::size_t k = 0; k < result.online.size(); ++k) {
        std::cout << "[" << config.test_labels[k] << "] ";
        print_report(result.online[k]);
      }
      std::cout << "summary: " << (root / "summary.csv").string() << "\n";
      return 0;
    }
    const bool reference = eval->parsed() && !o.no_reference;
    const romkit::OfflineModel model = romkit::load_offline(root);
    const auto result = romkit::run_online(config, model, root, o.mu, {reference, o.out});
    print_report(result);
    return 0;
  } catch (const romkit::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const romkit::StageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kStageFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kStageFailure;
  }
}
