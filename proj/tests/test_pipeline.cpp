#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>

#include "doctest.h"
#include "romkit/errors.hpp"
#include "romkit/pipeline.hpp"
#include "romkit/core/field_io.hpp"

using namespace romkit;
namespace fs = std::filesystem;

namespace {

RunConfig tiny_config() {
  RunConfig c;
  TeeGeometry& g = c.fom.geometry;
  g.main_nx = 16;
  g.main_ny = 8;
  g.branch_nx = 4;
  g.branch_ny = 6;
  g.branch_offset = 6;
  g.cell_size = 1.0 / 8.0;
  c.fom.t_final = 0.5;
  c.online.t_final = 0.5;
  c.training = {{0.535, 0.715}, {0.58, 0.76}, {0.625, 0.805}};
  c.testing = {{0.59, 0.77}};
  c.test_labels = {"D"};
  c.velocity = Truncation::fixed(4);
  c.pressure = Truncation::fixed(3);
  c.temperature = Truncation::fixed(4);
  c.eddy = Truncation::fixed(3);
  return c;
}

fs::path fresh_root(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("romkit_pipeline_" + name);
  fs::remove_all(p);
  return p;
}

Manifest parse(const std::string& text) {
  const fs::path p = fs::temp_directory_path() / "romkit_pipeline_config.ini";
  std::ofstream(p) << text;
  return Manifest::read(p);
}

const StageStatus& status_of(const std::vector<StageStatus>& all, Stage s) {
  for (const auto& st : all)
    if (st.stage == s) return st;
  throw std::runtime_error("stage missing");
}

}  // namespace

TEST_CASE("default run configuration") {
  set_verbose(false);
  const RunConfig c;
  REQUIRE(c.training.size() == 10);
  for (int k = 0; k < 10; ++k) {
    CHECK(c.training[k][0] == doctest::Approx(0.535 + 0.01 * k));
    CHECK(c.training[k][1] == doctest::Approx(0.715 + 0.01 * k));
  }
  REQUIRE(c.testing.size() == 4);
  CHECK(c.testing[3] == Parameter{0.59, 0.77});
  CHECK(c.test_labels.back() == "D");
  CHECK(c.velocity.rank == 6);
  CHECK(c.pressure.rank == 10);
  CHECK(c.temperature.rank == 11);
  CHECK(c.eddy.rank == 10);
  CHECK(c.supremizers);
  CHECK(c.fom.n_steps() / c.fom.snapshot_every == 30);
  CHECK_NOTHROW(c.validate());
  for (const auto& mu : c.testing) CHECK_FALSE(c.outside_training_range(mu));
  CHECK(c.outside_training_range({0.7, 0.9}));
  CHECK(c.outside_training_range({0.55, 0.70}));
}

TEST_CASE("configuration file round trip and validation") {
  set_verbose(false);
  RunConfig c = tiny_config();
  c.pod_method = "nested";
  c.velocity = Truncation::energy(0.999);
  c.rbf_spread = "stable";
  c.online.scalar_thermal_diffusivity = true;
  const fs::path p = fs::temp_directory_path() / "romkit_roundtrip.ini";
  c.save(p);
  const RunConfig back = RunConfig::load(p);
  std::ostringstream a, b;
  boost::property_tree::write_ini(a, c.to_manifest().tree());
  boost::property_tree::write_ini(b, back.to_manifest().tree());
  CHECK(a.str() == b.str());
  CHECK(back.velocity.rank == 0);
  CHECK(back.velocity.threshold == 0.999);
  CHECK(back.training == c.training);

  const RunConfig partial = RunConfig::from_manifest(parse("[pod]\npressure_modes = 7\n[fom]\nnu = 0.02\n"));
  CHECK(partial.pressure.rank == 7);
  CHECK(partial.velocity.rank == 6);
  CHECK(partial.online_config().nu == 0.02);
  CHECK(partial.online.dt == partial.fom.dt);

  const RunConfig energy = RunConfig::from_manifest(parse("[pod]\ntemperature_modes = 0\ntemperature_energy = 0.99\n"));
  CHECK(energy.temperature.rank == 0);
  CHECK(energy.temperature.threshold == 0.99);

  const RunConfig tests = RunConfig::from_manifest(parse("[parameters]\ntesting = 0.56 0.74, 0.6 0.78\n"));
  CHECK(tests.test_labels == std::vector<std::string>{"test_0", "test_1"});

  for (const char* bad : {"[pod]\nvelocty_modes = 3\n", "[pod]\nmethod = fancy\n", "[fom]\nnu = -1\n",
                          "[parameters]\ntraining = 0.5\n", "[parameters]\ntraining = \n",
                          "[parameters]\ntraining = 0.5 0.7, 0.5 0.7\n", "[pod]\nvelocity_modes = 0\n",
                          "[rbf]\nspread = -2\n", "[rbf]\nregularization = lots\n", "[online]\ndt = 0\n",
                          "[parameters]\ntesting = 0.5 0.7\ntest_labels = A B\n", "[probes]\nout = 5 5 6 6\n",
                          "[fom]\neddy_viscosity = maybe\n", "[pod]\nlift_method = magic\n", "loose = 1\n"})
    CHECK_THROWS_AS(RunConfig::from_manifest(parse(bad)), ConfigError);
  CHECK_THROWS_AS(RunConfig::load(fs::temp_directory_path() / "romkit_no_such_file.ini"), ConfigError);
}

TEST_CASE("artifact root resolution") {
  RunConfig c;
  c.output_root = "from_config";
  ::unsetenv("ROMKIT_CACHE");
  CHECK(resolve_root(c, std::nullopt) == fs::path("from_config"));
  ::setenv("ROMKIT_CACHE", "/tmp/from_env", 1);
  CHECK(resolve_root(c, std::nullopt) == fs::path("/tmp/from_env"));
  CHECK(resolve_root(c, fs::path("explicit")) == fs::path("explicit"));
  ::unsetenv("ROMKIT_CACHE");
}

TEST_CASE("offline stages: layout, caching and stage isolation") {
  set_verbose(false);
  const RunConfig c = tiny_config();
  const fs::path root = fresh_root("offline");
  const auto first = run_offline(c, root);
  REQUIRE(first.size() == 5);
  for (const auto& s : first) CHECK_FALSE(s.cached);

  SUBCASE("snapshot layout") {
    const SnapshotData data = read_snapshots(root / "snapshots");
    CHECK(data.velocity.n_snapshots() == 3 * 5);
    CHECK(data.mu == c.training);
    CHECK(data.times.back() == doctest::Approx(0.5));
    for (const char* f : {"U", "p", "T", "nut"}) CHECK(fs::exists(root / "snapshots" / "mu_2" / "t_4" / (std::string(f) + ".romf")));
    CHECK(fs::exists(root / "manifest.txt"));
    CHECK(fs::exists(root / "stages" / "pod.sha256"));
  }

  SUBCASE("rerun reuses every stage") {
    const auto again = run_offline(c, root);
    for (std::size_t i = 0; i < again.size(); ++i) {
      CHECK(again[i].cached);
      CHECK(again[i].output_hash == first[i].output_hash);
    }
  }

  SUBCASE("a deleted stage is regenerated with identical content") {
    fs::remove_all(root / "bases");
    const auto again = run_offline(c, root);
    CHECK(status_of(again, Stage::Generate).cached);
    CHECK(status_of(again, Stage::Lift).cached);
    CHECK_FALSE(status_of(again, Stage::Pod).cached);
    CHECK(status_of(again, Stage::Pod).output_hash == status_of(first, Stage::Pod).output_hash);
    CHECK(status_of(again, Stage::Project).cached);
    CHECK(status_of(again, Stage::TrainRbf).cached);
  }

  SUBCASE("a corrupted artifact invalidates its stage") {
    std::ofstream(root / "operators" / "initial.txt", std::ios::app) << "\n";
    const auto again = run_offline(c, root);
    CHECK_FALSE(status_of(again, Stage::Project).cached);
    CHECK(status_of(again, Stage::TrainRbf).cached);
  }

  SUBCASE("changing a setting reruns only the affected stages") {
    RunConfig d = c;
    d.rbf_regularization = "1e-8";
    const auto again = run_offline(d, root);
    CHECK(status_of(again, Stage::Pod).cached);
    CHECK(status_of(again, Stage::Project).cached);
    CHECK_FALSE(status_of(again, Stage::TrainRbf).cached);
    d.pressure = Truncation::fixed(2);
    const auto third = run_offline(d, root);
    CHECK(status_of(third, Stage::Generate).cached);
    CHECK_FALSE(status_of(third, Stage::Pod).cached);
    CHECK_FALSE(status_of(third, Stage::Project).cached);
  }

  SUBCASE("partial runs stop at the requested stage") {
    const fs::path other = fresh_root("partial");
    const auto part = run_offline(c, other, Stage::Lift);
    CHECK(part.size() == 2);
    CHECK_FALSE(fs::exists(other / "bases"));
    CHECK_THROWS_AS(load_offline(other), StageError);
    fs::remove_all(other);
  }
}

TEST_CASE("homogenized training snapshots vanish on the inlets") {
  set_verbose(false);
  const RunConfig c = tiny_config();
  const fs::path root = fresh_root("homog");
  run_offline(c, root, Stage::Pod);
  const SnapshotData data = read_snapshots(root / "snapshots");
  const auto lifts_u = tee_velocity_lifts(data.mesh);
  const auto lifts_t = tee_temperature_lifts(data.mesh);
  double worst = 0.0;
  for (int col = 0; col < data.velocity.n_snapshots(); ++col) {
    const Parameter& mu = data.mu[static_cast<std::size_t>(col / 5)];
    worst = std::max(worst, boundary_residual(data.velocity.snapshot(col), tee_velocity_bc(*data.mesh, mu[0], mu[1]),
                                              lifts_u, {mu[0], mu[1]}));
    worst = std::max(worst, boundary_residual(data.temperature.snapshot(col),
                                              tee_temperature_bc(*data.mesh, c.fom.theta_main, c.fom.theta_branch), lifts_t,
                                              {c.fom.theta_main, c.fom.theta_branch}));
  }
  CHECK(worst < 1e-8);
  fs::remove_all(root);
}

TEST_CASE("single-parameter nested and standard POD span the same space") {
  set_verbose(false);
  RunConfig c = tiny_config();
  c.training = {{0.58, 0.76}};
  c.velocity = Truncation::fixed(3);
  c.pressure = Truncation::fixed(2);
  c.temperature = Truncation::fixed(2);
  c.eddy = Truncation::fixed(2);
  const fs::path root_s = fresh_root("single_standard");
  run_offline(c, root_s, Stage::Pod);
  c.pod_method = "nested";
  const fs::path root_n = fresh_root("single_nested");
  fs::create_directories(root_n);
  fs::copy(root_s / "snapshots", root_n / "snapshots", fs::copy_options::recursive);
  run_offline(c, root_n, Stage::Pod);
  const MeshPtr mesh = read_mesh(root_s / "bases" / "mesh.txt");
  for (const auto& [name, comps] : {std::pair{"U", 2}, std::pair{"p", 1}, std::pair{"T", 1}}) {
    const PODBasis a = read_basis(root_s / "bases" / name, mesh);
    const PODBasis b = read_basis(root_n / "bases" / name, mesh);
    REQUIRE(a.rank() == b.rank());
    CHECK(max_principal_angle(a.modes, b.modes, dof_weights(*mesh, comps)) < 1e-8);
  }
  fs::remove_all(root_s);
  fs::remove_all(root_n);
}

TEST_CASE("online stage") {
  set_verbose(false);
  const RunConfig c = tiny_config();
  const fs::path root = fresh_root("online");
  run_offline(c, root);
  const OfflineModel model = load_offline(root);

  SUBCASE("precomputed initial coefficients equal the projected initial state") {
    for (const Parameter& mu : {Parameter{0.59, 0.77}, Parameter{0.3, 1.1}}) {
      const FlowProblem prob = tee_problem(c.fom, mu);
      const ReducedState direct = initial_conditions(model.bases, model.rbf, mu, prob.u0, Field(model.mesh, 1),
                                                     prob.theta0, c.online_config().temperature_lift_values);
      const ReducedState fast = initial_state(model.initial_velocity, model.ops, model.rbf, mu);
      CHECK((direct.a - fast.a).cwiseAbs().maxCoeff() < 1e-12 * std::max(1.0, direct.a.cwiseAbs().maxCoeff()));
      CHECK(direct.c.cwiseAbs().maxCoeff() < 1e-10);
      CHECK((direct.l - fast.l).norm() == 0.0);
    }
  }

  SUBCASE("interior test point with a reference run") {
    const fs::path out = root / "online" / "D";
    const OnlineResult r = run_online(c, model, root, {0.59, 0.77}, {true, out});
    REQUIRE(r.report);
    CHECK_FALSE(r.extrapolated);
    CHECK(r.trajectory.states.size() == 5);
    CHECK(r.trajectory.max_constraint_residual < 1e-9);
    for (const char* f : {"coefficients.csv", "errors_U.csv", "errors_p.csv", "errors_T.csv", "errors_nut.csv", "stats.csv",
                          "energy.csv", "timing.csv", "probe_outlet_section.csv", "manifest.txt"})
      CHECK(fs::exists(out / f));
    CHECK(fs::exists(out / "fields" / "t_4" / "U.romf"));
    CHECK(r.report->statistics.at("U")->average < 10.0);
    CHECK(r.report->statistics.at("T")->average < 2.0);
    CHECK(Manifest::read(out / "manifest.txt").get("online.extrapolated") == "false");

    const OnlineResult again = run_online(c, model, root, {0.59, 0.77}, {true, root / "online" / "D2"});
    CHECK(again.report->fom_seconds == r.report->fom_seconds);  // cached reference
    CHECK(again.trajectory.states.back().a == r.trajectory.states.back().a);
  }

  SUBCASE("a parameter outside the training range is flagged") {
    const fs::path out = root / "online" / "far";
    const OnlineResult r = run_online(c, model, root, {0.66, 0.85}, {false, out});
    CHECK(r.extrapolated);
    CHECK_FALSE(r.report);
    const Manifest m = Manifest::read(out / "manifest.txt");
    CHECK(m.get("online.extrapolated") == "true");
    CHECK(m.has("online.warning"));
  }

  SUBCASE("pipeline summary") {
    const PipelineResult p = run_pipeline(c, root);
    for (const auto& s : p.stages) CHECK(s.cached);
    REQUIRE(p.online.size() == 1);
    std::ifstream in(root / "summary.csv");
    std::string header, row;
    std::getline(in, header);
    std::getline(in, row);
    CHECK(header.rfind("label,U_m,U_b,extrapolated", 0) == 0);
    CHECK(row.rfind("D,0.59,0.77,false", 0) == 0);
  }
  fs::remove_all(root);
}
