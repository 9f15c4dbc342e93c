#include "romkit/pipeline.hpp"

#include <algorithm>
#include <boost/property_tree/ini_parser.hpp>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "romkit/core/field_io.hpp"
#include "romkit/errors.hpp"
#include "romkit/util/hash.hpp"

namespace romkit {

namespace fs = std::filesystem;

namespace {

bool g_verbose = true;

template <class... Args>
void log(const Args&... args) {
  if (!g_verbose) return;
  std::ostringstream line;
  line << "[romkit] ";
  (line << ... << args);
  std::clog << line.str() << std::endl;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  return s.substr(b, s.find_last_not_of(" \t") - b + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
  std::vector<std::string> out;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, sep))
    if (!trim(item).empty()) out.push_back(trim(item));
  return out;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "yes" || text == "on" || text == "1") return true;
  if (text == "false" || text == "no" || text == "off" || text == "0") return false;
  throw ConfigError("key '" + key + "' is not a boolean: '" + text + "'");
}

std::vector<Parameter> parse_parameter_list(const std::string& key, const std::string& text) {
  std::vector<Parameter> out;
  for (const auto& item : split(text, ',')) {
    const auto v = parse_doubles(item);
    if (v.size() != 2) throw ConfigError("key '" + key + "': every parameter needs two values (U_m U_b)");
    out.push_back(v);
  }
  return out;
}

std::string format_parameter_list(const std::vector<Parameter>& list) {
  std::string out;
  for (std::size_t k = 0; k < list.size(); ++k) {
    if (k) out += ", ";
    for (std::size_t i = 0; i < list[k].size(); ++i) out += (i ? " " : "") + format_double(list[k][i]);
  }
  return out;
}

std::string format_parameter(const Parameter& mu) { return format_parameter_list({mu}); }

Truncation parse_truncation(const Manifest& m, const std::string& field, Truncation fallback) {
  const std::string mk = "pod." + field + "_modes";
  const std::string ek = "pod." + field + "_energy";
  const int modes = m.get_int(mk, -1);
  const double energy = m.get_double(ek, -1.0);
  if (modes > 0) return Truncation::fixed(modes);
  if (energy >= 0.0 || modes == 0) {
    if (!(energy > 0.0 && energy <= 1.0))
      throw ConfigError("'" + ek + "' must lie in (0, 1] when '" + mk + "' is 0");
    return Truncation::energy(energy);
  }
  if (modes < -1) throw ConfigError("'" + mk + "' must be nonnegative");
  return fallback;
}

std::string canonical_text(const Manifest& m) {
  std::ostringstream out;
  boost::property_tree::write_ini(out, m.tree());
  return out.str();
}

const std::set<std::string>& known_keys() {
  static const std::set<std::string> keys{
      "mesh.main_nx", "mesh.main_ny", "mesh.branch_nx", "mesh.branch_ny", "mesh.branch_offset", "mesh.cell_size",
      "fom.nu", "fom.alpha", "fom.prandtl_t", "fom.smagorinsky", "fom.eddy_viscosity", "fom.theta_main",
      "fom.theta_branch", "fom.dt", "fom.t_final", "fom.snapshot_every", "fom.momentum_scheme", "fom.thermal_scheme",
      "parameters.training", "parameters.testing", "parameters.test_labels",
      "pod.method", "pod.local_threshold", "pod.velocity_modes", "pod.velocity_energy", "pod.pressure_modes",
      "pod.pressure_energy", "pod.temperature_modes", "pod.temperature_energy", "pod.eddy_modes", "pod.eddy_energy",
      "pod.supremizers", "pod.lift_method",
      "rbf.spread", "rbf.regularization",
      "online.dt", "online.t_final", "online.save_every", "online.newton_tol", "online.max_newton",
      "online.scalar_thermal_diffusivity", "online.fields_every",
      "eval.kinetic_weight", "eval.thermal_weight",
      "output.root"};
  return keys;
}

}  // namespace

void set_verbose(bool verbose) { g_verbose = verbose; }

std::vector<Parameter> default_training_parameters() {
  std::vector<Parameter> out;
  for (int k = 0; k < 10; ++k) out.push_back({0.535 + 0.01 * k, 0.715 + 0.01 * k});
  return out;
}

std::vector<Parameter> default_test_parameters() { return {{0.55, 0.73}, {0.57, 0.75}, {0.58, 0.76}, {0.59, 0.77}}; }

// ---------------------------------------------------------------- config

RunConfig RunConfig::from_manifest(const Manifest& m) {
  for (const auto& [section, node] : m.tree()) {
    if (node.empty() && !node.data().empty()) throw ConfigError("key '" + section + "' must belong to a section");
    if (section == "probes") continue;
    for (const auto& [key, value] : node) {
      (void)value;
      if (!known_keys().count(section + "." + key)) throw ConfigError("unknown configuration key '" + section + "." + key + "'");
    }
  }

  RunConfig c;
  TeeGeometry& g = c.fom.geometry;
  g.main_nx = m.get_int("mesh.main_nx", g.main_nx);
  g.main_ny = m.get_int("mesh.main_ny", g.main_ny);
  g.branch_nx = m.get_int("mesh.branch_nx", g.branch_nx);
  g.branch_ny = m.get_int("mesh.branch_ny", g.branch_ny);
  g.branch_offset = m.get_int("mesh.branch_offset", g.branch_offset);
  g.cell_size = m.get_double("mesh.cell_size", g.cell_size);

  FOMConfig& f = c.fom;
  f.nu = m.get_double("fom.nu", f.nu);
  f.alpha = m.get_double("fom.alpha", f.alpha);
  f.prandtl_t = m.get_double("fom.prandtl_t", f.prandtl_t);
  f.smagorinsky = m.get_double("fom.smagorinsky", f.smagorinsky);
  if (auto v = m.find("fom.eddy_viscosity")) f.eddy_viscosity = parse_bool("fom.eddy_viscosity", *v);
  f.theta_main = m.get_double("fom.theta_main", f.theta_main);
  f.theta_branch = m.get_double("fom.theta_branch", f.theta_branch);
  f.dt = m.get_double("fom.dt", f.dt);
  f.t_final = m.get_double("fom.t_final", f.t_final);
  f.snapshot_every = m.get_int("fom.snapshot_every", f.snapshot_every);
  if (auto v = m.find("fom.momentum_scheme")) f.momentum_scheme = parse_scheme(*v);
  if (auto v = m.find("fom.thermal_scheme")) f.thermal_scheme = parse_scheme(*v);

  if (auto v = m.find("parameters.training")) c.training = parse_parameter_list("parameters.training", *v);
  if (auto v = m.find("parameters.testing")) {
    c.testing = parse_parameter_list("parameters.testing", *v);
    c.test_labels.clear();
    for (std::size_t k = 0; k < c.testing.size(); ++k) c.test_labels.push_back("test_" + std::to_string(k));
  }
  if (auto v = m.find("parameters.test_labels")) c.test_labels = split(*v, ' ');

  c.pod_method = m.get("pod.method", c.pod_method);
  c.local_threshold = m.get_double("pod.local_threshold", c.local_threshold);
  c.velocity = parse_truncation(m, "velocity", c.velocity);
  c.pressure = parse_truncation(m, "pressure", c.pressure);
  c.temperature = parse_truncation(m, "temperature", c.temperature);
  c.eddy = parse_truncation(m, "eddy", c.eddy);
  if (auto v = m.find("pod.supremizers")) c.supremizers = parse_bool("pod.supremizers", *v);
  if (auto v = m.find("pod.lift_method")) c.lift_method = parse_lift_method(*v);

  c.rbf_spread = m.get("rbf.spread", c.rbf_spread);
  c.rbf_regularization = m.get("rbf.regularization", c.rbf_regularization);

  c.online.dt = m.get_double("online.dt", c.fom.dt);
  c.online.t_final = m.get_double("online.t_final", c.fom.t_final);
  c.online.save_every = m.get_int("online.save_every", c.fom.snapshot_every);
  c.online.newton_tol = m.get_double("online.newton_tol", c.online.newton_tol);
  c.online.max_newton = m.get_int("online.max_newton", c.online.max_newton);
  if (auto v = m.find("online.scalar_thermal_diffusivity"))
    c.online.scalar_thermal_diffusivity = parse_bool("online.scalar_thermal_diffusivity", *v);
  c.fields_every = m.get_int("online.fields_every", c.fields_every);

  c.energy.kinetic = m.get_double("eval.kinetic_weight", c.energy.kinetic);
  c.energy.thermal = m.get_double("eval.thermal_weight", c.energy.thermal);

  if (m.tree().get_child_optional("probes")) {
    c.probes.clear();
    for (const auto& name : m.keys("probes")) {
      const auto v = m.get_list("probes." + name);
      if (v.size() < 2 || v.size() % 2) throw ConfigError("probe '" + name + "' needs x y pairs");
      ProbeLine line{name, {}};
      for (std::size_t i = 0; i < v.size(); i += 2) line.points.push_back({v[i], v[i + 1]});
      c.probes.push_back(line);
    }
  }
  c.output_root = m.get("output.root", c.output_root.string());
  c.validate();
  return c;
}

RunConfig RunConfig::load(const fs::path& path) {
  if (!fs::exists(path)) throw ConfigError("configuration file not found: " + path.string());
  return from_manifest(Manifest::read(path));
}

Manifest RunConfig::to_manifest() const {
  Manifest m;
  const TeeGeometry& g = fom.geometry;
  m.set("mesh.main_nx", g.main_nx);
  m.set("mesh.main_ny", g.main_ny);
  m.set("mesh.branch_nx", g.branch_nx);
  m.set("mesh.branch_ny", g.branch_ny);
  m.set("mesh.branch_offset", g.branch_offset);
  m.set("mesh.cell_size", g.cell_size);
  m.set("fom.nu", fom.nu);
  m.set("fom.alpha", fom.alpha);
  m.set("fom.prandtl_t", fom.prandtl_t);
  m.set("fom.smagorinsky", fom.smagorinsky);
  m.set("fom.eddy_viscosity", fom.eddy_viscosity ? "true" : "false");
  m.set("fom.theta_main", fom.theta_main);
  m.set("fom.theta_branch", fom.theta_branch);
  m.set("fom.dt", fom.dt);
  m.set("fom.t_final", fom.t_final);
  m.set("fom.snapshot_every", fom.snapshot_every);
  m.set("fom.momentum_scheme", std::string(to_string(fom.momentum_scheme)));
  m.set("fom.thermal_scheme", std::string(to_string(fom.thermal_scheme)));
  m.set("parameters.training", format_parameter_list(training));
  m.set("parameters.testing", format_parameter_list(testing));
  std::string labels;
  for (const auto& l : test_labels) labels += (labels.empty() ? "" : " ") + l;
  m.set("parameters.test_labels", labels);
  m.set("pod.method", pod_method);
  m.set("pod.local_threshold", local_threshold);
  for (const auto& [name, t] : {std::pair{"velocity", velocity}, std::pair{"pressure", pressure},
                                std::pair{"temperature", temperature}, std::pair{"eddy", eddy}}) {
    m.set(std::string("pod.") + name + "_modes", t.rank);
    if (t.rank == 0) m.set(std::string("pod.") + name + "_energy", t.threshold);
  }
  m.set("pod.supremizers", supremizers ? "true" : "false");
  m.set("pod.lift_method", to_string(lift_method));
  m.set("rbf.spread", rbf_spread);
  m.set("rbf.regularization", rbf_regularization);
  m.set("online.dt", online.dt);
  m.set("online.t_final", online.t_final);
  m.set("online.save_every", online.save_every);
  m.set("online.newton_tol", online.newton_tol);
  m.set("online.max_newton", online.max_newton);
  m.set("online.scalar_thermal_diffusivity", online.scalar_thermal_diffusivity ? "true" : "false");
  m.set("online.fields_every", fields_every);
  m.set("eval.kinetic_weight", energy.kinetic);
  m.set("eval.thermal_weight", energy.thermal);
  for (const auto& p : probes) {
    std::vector<double> v;
    for (const auto& q : p.points) {
      v.push_back(q.x);
      v.push_back(q.y);
    }
    m.set("probes." + p.name, v);
  }
  m.set("output.root", output_root.string());
  return m;
}

void RunConfig::save(const fs::path& path) const { to_manifest().write(path); }

void RunConfig::validate() const {
  fom.validate();
  const TeeGeometry& g = fom.geometry;
  if (g.main_nx <= 0 || g.main_ny <= 0 || g.branch_nx <= 0 || g.branch_ny <= 0 || !(g.cell_size > 0.0))
    throw ConfigError("mesh sizes must be positive");
  if (g.branch_offset < 0 || g.branch_offset + g.branch_nx > g.main_nx)
    throw ConfigError("the branch must lie within the main channel");
  if (fom.n_steps() % fom.snapshot_every != 0)
    throw ConfigError("fom.t_final must be a whole number of snapshot intervals");
  if (training.empty()) throw ConfigError("the training parameter list is empty");
  std::set<Parameter> seen;
  for (const auto& mu : training) {
    if (!seen.insert(mu).second) throw ConfigError("duplicate training parameter " + format_parameter(mu));
    if (!(mu[0] > 0.0) || !(mu[1] > 0.0)) throw ConfigError("inlet velocities must be positive");
  }
  if (test_labels.size() != testing.size()) throw ConfigError("one label per test parameter required");
  std::set<std::string> labels(test_labels.begin(), test_labels.end());
  if (labels.size() != test_labels.size()) throw ConfigError("test labels must be unique");
  for (const auto& l : test_labels)
    if (l.find_first_of("/\\ .") != std::string::npos) throw ConfigError("test label '" + l + "' is not a plain name");
  if (pod_method != "standard" && pod_method != "nested")
    throw ConfigError("pod.method must be standard or nested, got '" + pod_method + "'");
  if (!(local_threshold > 0.0 && local_threshold <= 1.0)) throw ConfigError("pod.local_threshold must lie in (0, 1]");
  if (rbf_spread != "median" && rbf_spread != "stable") {
    const auto v = parse_doubles(rbf_spread);
    if (v.size() != 1 || !(v[0] > 0.0)) throw ConfigError("rbf.spread must be median, stable or a positive number");
  }
  if (rbf_regularization != "auto") {
    const auto v = parse_doubles(rbf_regularization);
    if (v.size() != 1 || !(v[0] >= 0.0)) throw ConfigError("rbf.regularization must be auto or a nonnegative number");
  }
  online_config().validate();
  if (fields_every < 0) throw ConfigError("online.fields_every must be nonnegative");
  if (!(energy.kinetic >= 0.0) || !(energy.thermal >= 0.0) || energy.kinetic + energy.thermal == 0.0)
    throw ConfigError("energy weights must be nonnegative and not both zero");
  const Mesh mesh(tee_spec(g));
  for (const auto& p : probes) {
    if (p.points.empty()) throw ConfigError("probe '" + p.name + "' has no points");
    for (const auto& q : p.points)
      if (mesh.locate(q) < 0) throw ConfigError("probe '" + p.name + "' leaves the domain");
  }
}

OnlineConfig RunConfig::online_config() const {
  OnlineConfig c = online;
  c.nu = fom.nu;
  c.alpha = fom.alpha;
  c.prandtl_t = fom.prandtl_t;
  c.temperature_lift_values = {fom.theta_main, fom.theta_branch};
  return c;
}

bool RunConfig::outside_training_range(const Parameter& mu) const {
  for (std::size_t i = 0; i < mu.size(); ++i) {
    double lo = training.front()[i], hi = lo;
    for (const auto& t : training) {
      lo = std::min(lo, t[i]);
      hi = std::max(hi, t[i]);
    }
    if (mu[i] < lo - 1e-12 || mu[i] > hi + 1e-12) return true;
  }
  return false;
}

fs::path resolve_root(const RunConfig& config, const std::optional<fs::path>& override_root) {
  if (override_root) return *override_root;
  if (const char* env = std::getenv("ROMKIT_CACHE"); env && *env) return env;
  return config.output_root;
}

// ---------------------------------------------------------------- stages

std::string to_string(Stage stage) {
  switch (stage) {
    case Stage::Generate: return "generate";
    case Stage::Lift: return "lift";
    case Stage::Pod: return "pod";
    case Stage::Project: return "project";
    case Stage::TrainRbf: return "train-rbf";
  }
  return "?";
}

Stage parse_stage(const std::string& name) {
  for (Stage s : {Stage::Generate, Stage::Lift, Stage::Pod, Stage::Project, Stage::TrainRbf})
    if (to_string(s) == name) return s;
  throw ConfigError("unknown stage '" + name + "'");
}

std::string stage_directory(Stage stage) {
  switch (stage) {
    case Stage::Generate: return "snapshots";
    case Stage::Lift: return "lifts";
    case Stage::Pod: return "bases";
    case Stage::Project: return "operators";
    case Stage::TrainRbf: return "rbf";
  }
  return "?";
}

// ---------------------------------------------------------------- snapshots

void write_snapshots(const fs::path& dir, const std::vector<std::vector<SnapshotRecord>>& runs) {
  if (runs.empty() || runs.front().empty()) throw DataError("write_snapshots: no records");
  fs::create_directories(dir);
  const MeshPtr mesh = runs.front().front().u.mesh_ptr();
  write_mesh(dir / "mesh.txt", *mesh);
  Manifest m;
  m.set("snapshots.n_parameters", static_cast<int>(runs.size()));
  m.set("snapshots.n_times", static_cast<int>(runs.front().size()));
  std::vector<double> times;
  for (const auto& r : runs.front()) times.push_back(r.t);
  m.set("snapshots.times", times);
  m.set("snapshots.fields", "U p T nut");
  for (std::size_t k = 0; k < runs.size(); ++k) {
    if (runs[k].size() != times.size()) throw DimensionError("write_snapshots: runs differ in length");
    m.set("parameters.mu_" + std::to_string(k), runs[k].front().mu);
    for (std::size_t j = 0; j < runs[k].size(); ++j) {
      const SnapshotRecord& r = runs[k][j];
      const fs::path d = dir / ("mu_" + std::to_string(k)) / ("t_" + std::to_string(j));
      fs::create_directories(d);
      write_field(d / "U.romf", r.u);
      write_field(d / "p.romf", r.p);
      write_field(d / "T.romf", r.theta);
      write_field(d / "nut.romf", r.nut);
    }
  }
  m.write(dir / "manifest.txt");
}

SnapshotData read_snapshots(const fs::path& dir) {
  const Manifest m = Manifest::read(dir / "manifest.txt");
  SnapshotData data;
  data.mesh = read_mesh(dir / "mesh.txt");
  const int np = m.get_int("snapshots.n_parameters");
  data.times = m.get_list("snapshots.times");
  const int nt = static_cast<int>(data.times.size());
  if (np <= 0 || nt <= 0 || nt != m.get_int("snapshots.n_times")) throw DataError("snapshots manifest is inconsistent");
  for (int k = 0; k < np; ++k) data.mu.push_back(m.get_list("parameters.mu_" + std::to_string(k)));
  const int n = data.mesh->n_cells();
  auto init = [&](SnapshotSet& s, const std::string& kind, int comps) {
    s.kind = kind;
    s.mesh = data.mesh;
    s.components = comps;
    s.mu = data.mu;
    s.times = data.times;
    s.matrix.resize(static_cast<Eigen::Index>(n) * comps, np * nt);
  };
  init(data.velocity, "U", 2);
  init(data.pressure, "p", 1);
  init(data.temperature, "T", 1);
  init(data.eddy, "nut", 1);
  for (int k = 0; k < np; ++k)
    for (int j = 0; j < nt; ++j) {
      const fs::path d = dir / ("mu_" + std::to_string(k)) / ("t_" + std::to_string(j));
      const int col = data.velocity.column(k, j);
      data.velocity.matrix.col(col) = read_field(d / "U.romf", data.mesh).values();
      data.pressure.matrix.col(col) = read_field(d / "p.romf", data.mesh).values();
      data.temperature.matrix.col(col) = read_field(d / "T.romf", data.mesh).values();
      data.eddy.matrix.col(col) = read_field(d / "nut.romf", data.mesh).values();
    }
  for (SnapshotSet* s : {&data.velocity, &data.pressure, &data.temperature, &data.eddy}) s->validate();
  return data;
}

namespace {

// ---------------------------------------------------------------- lifts

struct LiftData {
  std::vector<LiftingFunction> velocity;
  std::vector<LiftingFunction> temperature;
};

void write_lift(const fs::path& dir, Manifest& m, const std::string& name, const LiftingFunction& lift) {
  write_field(dir / (name + ".romf"), lift.field);
  m.set(name + ".patch", lift.patch);
  m.set(name + ".direction", std::vector<double>{lift.direction[0], lift.direction[1]});
  std::string patches;
  for (const auto& bc : lift.bc.all()) {
    m.set(name + ".bc_" + bc.patch, to_string(bc.kind) + " " + format_double(bc.value[0]) + " " + format_double(bc.value[1]));
    patches += (patches.empty() ? "" : " ") + bc.patch;
  }
  m.set(name + ".patches", patches);
}

LiftingFunction read_lift(const fs::path& dir, const Manifest& m, const std::string& name, const MeshPtr& mesh) {
  LiftingFunction lift;
  lift.patch = m.get(name + ".patch");
  const auto d = m.get_list(name + ".direction");
  if (d.size() != 2) throw DataError("lifts.txt: bad direction for " + name);
  lift.direction = {d[0], d[1]};
  lift.field = read_field(dir / (name + ".romf"), mesh);
  std::vector<BoundaryCondition> list;
  for (const auto& patch : split(m.get(name + ".patches"), ' ')) {
    std::istringstream in(m.get(name + ".bc_" + patch));
    std::string kind, vx, vy;
    in >> kind >> vx >> vy;
    list.push_back({patch, parse_bc_kind(kind), {parse_doubles(vx).at(0), parse_doubles(vy).at(0)}});
  }
  lift.bc = BoundaryConditions(*mesh, list);
  return lift;
}

LiftData read_lifts(const fs::path& dir, const MeshPtr& mesh) {
  const Manifest m = Manifest::read(dir / "lifts.txt");
  LiftData out;
  for (int i = 0; i < m.get_int("lifts.velocity"); ++i)
    out.velocity.push_back(read_lift(dir, m, "U_" + std::to_string(i), mesh));
  for (int i = 0; i < m.get_int("lifts.temperature"); ++i)
    out.temperature.push_back(read_lift(dir, m, "T_" + std::to_string(i), mesh));
  return out;
}

Eigen::MatrixXd velocity_coefficients(const SnapshotSet& s) {
  Eigen::MatrixXd c(2, s.n_snapshots());
  for (int k = 0; k < static_cast<int>(s.mu.size()); ++k)
    for (int j = 0; j < static_cast<int>(s.times.size()); ++j) c.col(s.column(k, j)) << s.mu[k][0], s.mu[k][1];
  return c;
}

Eigen::MatrixXd temperature_coefficients(const RunConfig& config, int n) {
  Eigen::MatrixXd c(2, n);
  c.row(0).setConstant(config.fom.theta_main);
  c.row(1).setConstant(config.fom.theta_branch);
  return c;
}

// Snapshot-average lifts: every patch shares the mean snapshot, scaled so that
// sum_p mean(u_D,p) zeta_p reproduces it.
std::vector<LiftingFunction> average_lifts(const SnapshotSet& s, const BoundaryConditions& mean_bc,
                                           const std::vector<LiftingFunction>& templates, const Eigen::MatrixXd& coeff) {
  std::vector<LiftingFunction> out;
  const double n = static_cast<double>(templates.size());
  for (std::size_t p = 0; p < templates.size(); ++p)
    out.push_back(average_control_function(s, mean_bc, templates[p].patch, templates[p].direction,
                                           n * coeff.row(static_cast<Eigen::Index>(p)).transpose()));
  return out;
}

void run_lift_stage(const RunConfig& config, const fs::path& root, const fs::path& dir) {
  const MeshPtr mesh = std::make_shared<const Mesh>(tee_spec(config.fom.geometry));
  LiftData lifts{tee_velocity_lifts(mesh), tee_temperature_lifts(mesh)};
  if (config.lift_method == LiftMethod::SnapshotAverage) {
    const SnapshotData data = read_snapshots(root / stage_directory(Stage::Generate));
    const Eigen::MatrixXd cu = velocity_coefficients(data.velocity);
    const Eigen::MatrixXd ct = temperature_coefficients(config, data.temperature.n_snapshots());
    lifts.velocity = average_lifts(data.velocity, tee_velocity_bc(*mesh, cu.row(0).mean(), cu.row(1).mean()),
                                   lifts.velocity, cu);
    lifts.temperature = average_lifts(data.temperature,
                                      tee_temperature_bc(*mesh, config.fom.theta_main, config.fom.theta_branch),
                                      lifts.temperature, ct);
  }
  fs::create_directories(dir);
  write_mesh(dir / "mesh.txt", *mesh);
  Manifest m;
  m.set("lifts.method", to_string(config.lift_method));
  m.set("lifts.velocity", static_cast<int>(lifts.velocity.size()));
  m.set("lifts.temperature", static_cast<int>(lifts.temperature.size()));
  m.set("coefficients.velocity", "U_m U_b of each parameter");
  m.set("coefficients.temperature", std::vector<double>{config.fom.theta_main, config.fom.theta_branch});
  for (std::size_t i = 0; i < lifts.velocity.size(); ++i) write_lift(dir, m, "U_" + std::to_string(i), lifts.velocity[i]);
  for (std::size_t i = 0; i < lifts.temperature.size(); ++i)
    write_lift(dir, m, "T_" + std::to_string(i), lifts.temperature[i]);
  m.write(dir / "lifts.txt");
}

// ---------------------------------------------------------------- bases

PODBasis field_pod(const RunConfig& config, const SnapshotSet& s, const Truncation& t) {
  if (config.pod_method == "nested") {
    std::vector<SnapshotSet> local;
    for (int k = 0; k < static_cast<int>(s.mu.size()); ++k) local.push_back(s.local(k));
    return nested_pod(local, config.local_threshold, t);
  }
  return standard_pod(s, t);
}

bool uses_eddy_modes(const RunConfig& config) { return config.fom.eddy_viscosity; }

void run_pod_stage(const RunConfig& config, const fs::path& root, const fs::path& dir) {
  const SnapshotData data = read_snapshots(root / stage_directory(Stage::Generate));
  const LiftData lifts = read_lifts(root / stage_directory(Stage::Lift), data.mesh);
  const SnapshotSet u = homogenize(data.velocity, lifts.velocity, velocity_coefficients(data.velocity));
  const SnapshotSet th =
      homogenize(data.temperature, lifts.temperature, temperature_coefficients(config, data.temperature.n_snapshots()));
  fs::create_directories(dir);
  write_mesh(dir / "mesh.txt", *data.mesh);
  Manifest m;
  m.set("bases.method", config.pod_method);
  auto build = [&](const std::string& name, const SnapshotSet& s, const Truncation& t) {
    const auto t0 = std::chrono::steady_clock::now();
    PODBasis b = field_pod(config, s, t);
    const double seconds = seconds_since(t0);
    b.kind = name;
    write_basis(dir / name, b);
    m.set(name + ".rank", b.rank());
    m.set(name + ".reconstruction_error", reconstruction_error(s, b));
    log("pod: ", name, " rank ", b.rank(), " (", seconds, " s)");
    return b;
  };
  const PODBasis bu = build("U", u, config.velocity);
  const PODBasis bp = build("p", data.pressure, config.pressure);
  build("T", th, config.temperature);
  if (uses_eddy_modes(config)) build("nut", data.eddy, config.eddy);
  if (config.supremizers) {
    PODBasis sup;
    sup.kind = "sup";
    sup.mesh = data.mesh;
    sup.components = 2;
    sup.modes = supremizer_enrichment(data.mesh, bp.modes, bu.modes, tee_velocity_bc(*data.mesh, 0.0, 0.0),
                                      tee_pressure_bc(*data.mesh));
    write_basis(dir / "sup", sup);
    m.set("sup.rank", sup.rank());
    log("pod: ", sup.rank(), " supremizers");
  }
  m.write(dir / "bases.txt");
}

BasisSet read_basis_set(const fs::path& root) {
  const fs::path dir = root / stage_directory(Stage::Pod);
  BasisSet b;
  b.mesh = read_mesh(dir / "mesh.txt");
  const LiftData lifts = read_lifts(root / stage_directory(Stage::Lift), b.mesh);
  b.velocity_lifts = lifts.velocity;
  b.temperature_lifts = lifts.temperature;
  const Eigen::MatrixXd phi = read_basis(dir / "U", b.mesh).modes;
  Eigen::MatrixXd sup(phi.rows(), 0);
  if (fs::exists(dir / "sup" / "basis.txt")) sup = read_basis(dir / "sup", b.mesh).modes;
  b.velocity.resize(phi.rows(), phi.cols() + sup.cols());
  b.velocity << phi, sup;
  b.n_supremizers = static_cast<int>(sup.cols());
  b.pressure = read_basis(dir / "p", b.mesh).modes;
  b.temperature = read_basis(dir / "T", b.mesh).modes;
  b.eddy = fs::exists(dir / "nut" / "basis.txt") ? read_basis(dir / "nut", b.mesh).modes
                                                 : Eigen::MatrixXd(b.mesh->n_cells(), 0);
  b.u_bc = tee_velocity_bc(*b.mesh, 0.0, 0.0);
  b.p_bc = tee_pressure_bc(*b.mesh);
  b.theta_bc = tee_temperature_bc(*b.mesh, 0.0, 0.0);
  return b;
}

// ---------------------------------------------------------------- operators

void write_matrix_text(Manifest& m, const std::string& name, const Eigen::MatrixXd& a) {
  m.set(name + ".rows", static_cast<int>(a.rows()));
  m.set(name + ".cols", static_cast<int>(a.cols()));
  m.set(name + ".values", std::vector<double>(a.data(), a.data() + a.size()));
}

Eigen::MatrixXd read_matrix_text(const Manifest& m, const std::string& name) {
  const int rows = m.get_int(name + ".rows");
  const int cols = m.get_int(name + ".cols");
  const auto v = m.has(name + ".values") ? m.get_list(name + ".values") : std::vector<double>{};
  if (static_cast<long>(v.size()) != static_cast<long>(rows) * cols) throw DataError("matrix '" + name + "' has the wrong size");
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), rows, cols);
}

void run_project_stage(const fs::path& root, const fs::path& dir) {
  const BasisSet b = read_basis_set(root);
  const ReducedOperators ops = assemble_operators(b);
  write_operators(dir, ops);
  Manifest m;
  write_matrix_text(m, "initial_velocity", initial_velocity_map(b));
  m.write(dir / "initial.txt");
  log("project: n_u ", ops.n_u, " (", ops.n_sup, " supremizers), n_p ", ops.n_p, ", n_t ", ops.n_t, ", n_nu ", ops.n_nu);
}

// ---------------------------------------------------------------- rbf

Eigen::MatrixXd rbf_points(const SnapshotSet& s) {
  const int d = static_cast<int>(s.mu.front().size());
  Eigen::MatrixXd x(d + 1, s.n_snapshots());
  for (int k = 0; k < static_cast<int>(s.mu.size()); ++k)
    for (int j = 0; j < static_cast<int>(s.times.size()); ++j) {
      const int col = s.column(k, j);
      for (int i = 0; i < d; ++i) x(i, col) = s.mu[k][static_cast<std::size_t>(i)];
      x(d, col) = s.times[static_cast<std::size_t>(j)];
    }
  return x;
}

void run_rbf_stage(const RunConfig& config, const fs::path& root, const fs::path& dir) {
  fs::create_directories(dir);
  Manifest m;
  if (!uses_eddy_modes(config)) {
    m.set("rbf.outputs", 0);
    m.write(dir / "settings.txt");
    return;
  }
  const SnapshotData data = read_snapshots(root / stage_directory(Stage::Generate));
  const MeshPtr& mesh = data.mesh;
  const Eigen::MatrixXd xi = read_basis(root / stage_directory(Stage::Pod) / "nut", mesh).modes;
  const Eigen::MatrixXd l = project_snapshots(data.eddy.matrix, xi, dof_weights(*mesh, 1));
  const Eigen::MatrixXd x = rbf_points(data.eddy);
  const Eigen::MatrixXd centers = Normalization::fit(x).apply(x);
  double gamma = 0.0;
  if (config.rbf_spread == "median") gamma = choose_spread(centers);
  else if (config.rbf_spread == "stable") gamma = stable_spread(centers, choose_spread(centers));
  else gamma = parse_doubles(config.rbf_spread).at(0);
  const double lambda = config.rbf_regularization == "auto" ? default_regularization(kernel_matrix(centers, gamma))
                                                             : parse_doubles(config.rbf_regularization).at(0);
  const RBFInterpolant rbf = train_rbf(x, l, gamma, lambda);
  write_rbf(dir, rbf);
  m.set("rbf.outputs", rbf.n_outputs());
  m.set("rbf.spread", config.rbf_spread);
  m.set("rbf.gamma", gamma);
  m.set("rbf.lambda", lambda);
  m.set("rbf.condition", rbf.condition);
  m.set("rbf.residual", rbf.residual);
  m.write(dir / "settings.txt");
  log("train-rbf: ", rbf.n_centers(), " centers, gamma ", gamma, ", lambda ", lambda, ", condition ", rbf.condition);
}

// ---------------------------------------------------------------- generate

void run_generate_stage(const RunConfig& config, const fs::path& dir, std::vector<double>& fom_seconds) {
  std::vector<std::vector<SnapshotRecord>> runs;
  for (std::size_t k = 0; k < config.training.size(); ++k) {
    const auto t0 = std::chrono::steady_clock::now();
    runs.push_back(run_fom(config.fom, config.training[k]));
    fom_seconds.push_back(seconds_since(t0));
    log("generate: mu_", k, " = (", format_parameter(config.training[k]), ") ", runs.back().size(), " snapshots in ",
        fom_seconds.back(), " s");
  }
  write_snapshots(dir, runs);
}

// ---------------------------------------------------------------- stage records

struct StageRecord {
  std::string input_hash;
  std::string output_hash;
};

fs::path record_path(const fs::path& root, Stage s) { return root / "stages" / (to_string(s) + ".txt"); }

std::optional<StageRecord> read_record(const fs::path& root, Stage s) {
  if (!fs::exists(record_path(root, s))) return std::nullopt;
  try {
    const Manifest m = Manifest::read(record_path(root, s));
    return StageRecord{m.get("stage.input_hash"), m.get("stage.output_hash")};
  } catch (const Error&) {
    return std::nullopt;
  }
}

void write_file_digests(const fs::path& dir, const fs::path& out) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::ofstream f(out);
  for (const auto& p : files) f << sha256_file(p) << "  " << fs::relative(p, dir.parent_path()).generic_string() << "\n";
  if (!f) throw DataError("cannot write " + out.string());
}

std::string stage_input(const RunConfig& config, Stage s, const std::map<Stage, std::string>& outputs) {
  const Manifest m = config.to_manifest();
  Manifest key;
  key.set("romkit.version", kRomkitVersion);
  key.set("romkit.stage", to_string(s));
  auto copy = [&](const std::string& section) {
    for (const auto& k : m.keys(section)) key.set(section + "." + k, m.get(section + "." + k));
  };
  auto upstream = [&](Stage u) { key.set("upstream." + to_string(u), outputs.at(u)); };
  switch (s) {
    case Stage::Generate:
      copy("mesh");
      copy("fom");
      key.set("parameters.training", m.get("parameters.training"));
      break;
    case Stage::Lift:
      copy("mesh");
      key.set("fom.theta_main", m.get("fom.theta_main"));
      key.set("fom.theta_branch", m.get("fom.theta_branch"));
      key.set("pod.lift_method", m.get("pod.lift_method"));
      if (config.lift_method == LiftMethod::SnapshotAverage) upstream(Stage::Generate);
      break;
    case Stage::Pod:
      copy("pod");
      key.set("fom.theta_main", m.get("fom.theta_main"));
      key.set("fom.theta_branch", m.get("fom.theta_branch"));
      key.set("fom.eddy_viscosity", m.get("fom.eddy_viscosity"));
      upstream(Stage::Generate);
      upstream(Stage::Lift);
      break;
    case Stage::Project:
      upstream(Stage::Lift);
      upstream(Stage::Pod);
      break;
    case Stage::TrainRbf:
      copy("rbf");
      key.set("fom.eddy_viscosity", m.get("fom.eddy_viscosity"));
      upstream(Stage::Generate);
      upstream(Stage::Pod);
      break;
  }
  return sha256_hex(canonical_text(key));
}

void write_root_manifest(const RunConfig& config, const fs::path& root, const std::vector<StageStatus>& statuses) {
  Manifest m;
  if (fs::exists(root / "manifest.txt")) {
    try {
      m = Manifest::read(root / "manifest.txt");
    } catch (const Error&) {
    }
  }
  m.set("run.version", kRomkitVersion);
  m.set("run.config_hash", sha256_hex(canonical_text(config.to_manifest())));
  for (const auto& s : statuses) {
    const std::string sec = "stage_" + stage_directory(s.stage);
    m.set(sec + ".input_hash", s.input_hash);
    m.set(sec + ".output_hash", s.output_hash);
    m.set(sec + ".cached", s.cached ? "true" : "false");
    m.set(sec + ".seconds", s.seconds);
  }
  m.write(root / "manifest.txt");
}

}  // namespace

std::vector<StageStatus> run_offline(const RunConfig& config, const fs::path& root, Stage last) {
  config.validate();
  fs::create_directories(root / "stages");
  config.save(root / "run.ini");
  std::vector<StageStatus> statuses;
  std::map<Stage, std::string> outputs;
  for (Stage s : {Stage::Generate, Stage::Lift, Stage::Pod, Stage::Project, Stage::TrainRbf}) {
    StageStatus st;
    st.stage = s;
    const fs::path dir = root / stage_directory(s);
    try {
      st.input_hash = stage_input(config, s, outputs);
      const auto record = read_record(root, s);
      if (record && record->input_hash == st.input_hash && fs::is_directory(dir) && sha256_tree(dir) == record->output_hash) {
        st.cached = true;
        st.output_hash = record->output_hash;
        log(to_string(s), ": cached");
      } else {
        log(to_string(s), ": running");
        fs::remove_all(dir);
        fs::remove(record_path(root, s));
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<double> fom_seconds;
        switch (s) {
          case Stage::Generate: run_generate_stage(config, dir, fom_seconds); break;
          case Stage::Lift: run_lift_stage(config, root, dir); break;
          case Stage::Pod: run_pod_stage(config, root, dir); break;
          case Stage::Project: run_project_stage(root, dir); break;
          case Stage::TrainRbf: run_rbf_stage(config, root, dir); break;
        }
        st.seconds = seconds_since(t0);
        st.output_hash = sha256_tree(dir);
        Manifest rec;
        rec.set("stage.name", to_string(s));
        rec.set("stage.input_hash", st.input_hash);
        rec.set("stage.output_hash", st.output_hash);
        rec.set("stage.seconds", st.seconds);
        if (!fom_seconds.empty()) rec.set("stage.fom_seconds", fom_seconds);
        write_file_digests(dir, root / "stages" / (to_string(s) + ".sha256"));
        rec.write(record_path(root, s));
        log(to_string(s), ": done in ", st.seconds, " s");
      }
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      write_root_manifest(config, root, statuses);
      throw StageError(to_string(s), e.what());
    }
    outputs[s] = st.output_hash;
    statuses.push_back(st);
    if (s == last) break;
  }
  write_root_manifest(config, root, statuses);
  return statuses;
}

// ---------------------------------------------------------------- online

Eigen::MatrixXd initial_velocity_map(const BasisSet& bases) {
  const Eigen::VectorXd w = dof_weights(*bases.mesh, 2);
  Eigen::MatrixXd a(bases.n_u(), static_cast<Eigen::Index>(bases.velocity_lifts.size()));
  for (std::size_t i = 0; i < bases.velocity_lifts.size(); ++i) {
    const LiftingFunction& lift = bases.velocity_lifts[i];
    const Field u0 = solenoidal_projection(lift.field, lift.bc, bases.p_bc);
    a.col(static_cast<Eigen::Index>(i)) = bases.velocity.transpose() * (w.asDiagonal() * (u0.values() - lift.field.values()));
  }
  return a;
}

ReducedState initial_state(const Eigen::MatrixXd& velocity_map, const ReducedOperators& ops, const RBFInterpolant& rbf,
                           const Parameter& mu) {
  if (static_cast<Eigen::Index>(mu.size()) < velocity_map.cols() || velocity_map.rows() != ops.n_u)
    throw DimensionError("initial_state: map does not match the operators or mu");
  ReducedState s;
  s.a = velocity_map * Eigen::Map<const Eigen::VectorXd>(mu.data(), velocity_map.cols());
  s.b = Eigen::VectorXd::Zero(ops.n_p);
  s.c = Eigen::VectorXd::Zero(ops.n_t);
  if (ops.n_nu > 0) {
    Eigen::VectorXd x(static_cast<Eigen::Index>(mu.size()) + 1);
    for (std::size_t i = 0; i < mu.size(); ++i) x[static_cast<Eigen::Index>(i)] = mu[i];
    x[x.size() - 1] = 0.0;
    s.l = rbf.evaluate(x);
  } else {
    s.l = Eigen::VectorXd(0);
  }
  return s;
}

OfflineModel load_offline(const fs::path& root) {
  const std::vector<std::string> required{"lifts/lifts.txt", "bases/mesh.txt", "bases/U/basis.txt", "bases/p/basis.txt",
                                          "bases/T/basis.txt", "operators/operators.rombin", "operators/initial.txt",
                                          "rbf/settings.txt"};
  std::vector<std::string> missing;
  for (const auto& f : required)
    if (!fs::exists(root / f)) missing.push_back((root / f).string());
  if (missing.empty() && !fs::exists(root / "rbf" / "rbf.bin") && Manifest::read(root / "rbf" / "settings.txt").get_int("rbf.outputs") > 0)
    missing.push_back((root / "rbf" / "rbf.bin").string());
  if (!missing.empty()) {
    std::string list;
    for (const auto& f : missing) list += (list.empty() ? "" : ", ") + f;
    throw StageError("online", "offline artifacts missing (run the offline stages first): " + list);
  }
  OfflineModel model;
  model.bases = read_basis_set(root);
  model.mesh = model.bases.mesh;
  model.ops = read_operators(root / "operators");
  if (fs::exists(root / "rbf" / "rbf.bin")) model.rbf = read_rbf(root / "rbf");
  model.initial_velocity = read_matrix_text(Manifest::read(root / "operators" / "initial.txt"), "initial_velocity");
  if (model.ops.n_u != model.bases.n_u() || model.ops.n_p != model.bases.n_p() || model.ops.n_t != model.bases.n_t() ||
      model.ops.n_nu != model.bases.n_nu() || model.ops.n_nu != model.rbf.n_outputs())
    throw StageError("online", "offline artifacts are inconsistent; rerun the offline stages");
  return model;
}

namespace {

std::string reference_key(const RunConfig& config, const Parameter& mu) {
  const Manifest m = config.to_manifest();
  Manifest key;
  key.set("romkit.version", kRomkitVersion);
  for (const std::string section : {"mesh", "fom"})
    for (const auto& k : m.keys(section)) key.set(section + "." + k, m.get(section + "." + k));
  key.set("mu.value", mu);
  return sha256_hex(canonical_text(key)).substr(0, 16);
}

void write_state_fields(const fs::path& d, const Field& u, const Field& p, const Field& theta, const Field& nut) {
  fs::create_directories(d);
  write_field(d / "U.romf", u);
  write_field(d / "p.romf", p);
  write_field(d / "T.romf", theta);
  write_field(d / "nut.romf", nut);
}

void write_probes(const RunConfig& config, const fs::path& out, const ReconstructedFields& rom,
                  const ReconstructedFields* fom) {
  for (const auto& probe : config.probes) {
    const auto ru = line_probe(rom.u, probe.points);
    const auto rt = line_probe(rom.theta, probe.points);
    std::vector<ProbeSample> fu, ft;
    if (fom) {
      fu = line_probe(fom->u, probe.points);
      ft = line_probe(fom->theta, probe.points);
    }
    std::ofstream f(out / ("probe_" + probe.name + ".csv"));
    f.precision(12);
    f << "# t = " << rom.t << "\ns,x,y,rom_ux,rom_uy,rom_T";
    if (fom) f << ",fom_ux,fom_uy,fom_T";
    f << "\n";
    for (std::size_t i = 0; i < ru.size(); ++i) {
      f << ru[i].s << "," << ru[i].point.x << "," << ru[i].point.y << "," << ru[i].values[0] << "," << ru[i].values[1]
        << "," << rt[i].values[0];
      if (fom) f << "," << fu[i].values[0] << "," << fu[i].values[1] << "," << ft[i].values[0];
      f << "\n";
    }
    if (!f) throw DataError("cannot write probe " + probe.name);
  }
}

}  // namespace

ReferenceRun reference_run(const RunConfig& config, const fs::path& root, const Parameter& mu) {
  const std::string key = reference_key(config, mu);
  const fs::path dir = root / "reference" / key;
  const MeshPtr mesh = std::make_shared<const Mesh>(tee_spec(config.fom.geometry));
  ReferenceRun run;
  if (fs::exists(dir / "manifest.txt")) {
    const Manifest m = Manifest::read(dir / "manifest.txt");
    if (m.get("reference.key") == key) {
      run.wall_seconds = m.get_double("reference.wall_seconds");
      const auto times = m.get_list("reference.times");
      for (std::size_t j = 0; j < times.size(); ++j) {
        const fs::path d = dir / ("t_" + std::to_string(j));
        run.records.push_back({mu, times[j], read_field(d / "U.romf", mesh), read_field(d / "p.romf", mesh),
                               read_field(d / "T.romf", mesh), read_field(d / "nut.romf", mesh)});
      }
      log("reference (", format_parameter(mu), "): cached");
      return run;
    }
  }
  log("reference (", format_parameter(mu), "): running the full-order model");
  fs::remove_all(dir);
  const auto t0 = std::chrono::steady_clock::now();
  run.records = run_fom(config.fom, mu);
  run.wall_seconds = seconds_since(t0);
  std::vector<double> times;
  for (std::size_t j = 0; j < run.records.size(); ++j) {
    const SnapshotRecord& r = run.records[j];
    write_state_fields(dir / ("t_" + std::to_string(j)), r.u, r.p, r.theta, r.nut);
    times.push_back(r.t);
  }
  Manifest m;
  m.set("reference.key", key);
  m.set("reference.mu", mu);
  m.set("reference.times", times);
  m.set("reference.wall_seconds", run.wall_seconds);
  m.write(dir / "manifest.txt");
  log("reference (", format_parameter(mu), "): ", run.wall_seconds, " s");
  return run;
}

OnlineResult run_online(const RunConfig& config, const OfflineModel& model, const fs::path& root, const Parameter& mu,
                        const OnlineOptions& options) {
  if (mu.size() != 2) throw ConfigError("online: mu needs two values (U_m U_b)");
  if (options.out.empty()) throw ConfigError("online: no output directory");
  OnlineResult result;
  const OnlineConfig oc = config.online_config();
  const auto t0 = std::chrono::steady_clock::now();
  const ReducedModel rom(model.ops, model.rbf, oc);
  const ReducedState init = initial_state(model.initial_velocity, model.ops, model.rbf, mu);
  ReducedTrajectory partial;
  try {
    result.trajectory = rom.solve(mu, init, &partial);
  } catch (const StepError& e) {
    fs::create_directories(options.out);
    write_coefficients_csv(options.out / "coefficients_partial.csv", partial);
    throw StageError("solve", e.what());
  }
  for (const auto& s : result.trajectory.states)
    result.fields.push_back(reconstruct(s, model.bases, mu, oc.temperature_lift_values));
  result.rom_seconds = seconds_since(t0);
  result.extrapolated = result.trajectory.extrapolated || config.outside_training_range(mu);
  if (result.extrapolated)
    log("warning: mu = (", format_parameter(mu), ") lies outside the training range; the result is an extrapolation");

  fs::create_directories(options.out);
  write_coefficients_csv(options.out / "coefficients.csv", result.trajectory);
  if (config.fields_every > 0)
    for (std::size_t j = 0; j < result.fields.size(); j += static_cast<std::size_t>(config.fields_every)) {
      const auto& f = result.fields[j];
      write_state_fields(options.out / "fields" / ("t_" + std::to_string(j)), f.u, f.p, f.theta, f.nut);
    }

  std::optional<ReconstructedFields> fom_final;
  if (options.reference) {
    const ReferenceRun ref = reference_run(config, root, mu);
    std::vector<ReconstructedFields> fom, red;
    for (const auto& f : result.fields)
      for (const auto& r : ref.records)
        if (std::abs(r.t - f.t) < 1e-9) {
          fom.push_back({r.t, r.u, r.p, r.theta, r.nut});
          red.push_back(f);
          break;
        }
    if (fom.empty()) throw StageError("eval", "the reference run shares no saved time with the online run");
    ErrorReport report = compare(fom, red, config.energy);
    report.fom_seconds = ref.wall_seconds;
    report.rom_seconds = result.rom_seconds;
    report.write(options.out);
    result.report = report;
    fom_final = fom.back();
    write_probes(config, options.out, red.back(), &*fom_final);
  } else if (!result.fields.empty()) {
    write_probes(config, options.out, result.fields.back(), nullptr);
  }

  Manifest m;
  m.set("online.mu", mu);
  m.set("online.dt", oc.dt);
  m.set("online.t_final", oc.t_final);
  m.set("online.steps", oc.n_steps());
  m.set("online.saved_states", static_cast<int>(result.trajectory.states.size()));
  m.set("online.rom_seconds", result.rom_seconds);
  m.set("online.solve_seconds", result.trajectory.wall_seconds);
  m.set("online.max_constraint_residual", result.trajectory.max_constraint_residual);
  m.set("online.extrapolated", result.extrapolated ? "true" : "false");
  m.set("online.time_extrapolated", result.trajectory.time_extrapolated ? "true" : "false");
  if (result.extrapolated) m.set("online.warning", "mu outside the training range");
  m.set("online.reference", options.reference ? "true" : "false");
  m.set("online.offline_config_hash", sha256_hex(canonical_text(config.to_manifest())));
  m.write(options.out / "manifest.txt");
  return result;
}

PipelineResult run_pipeline(const RunConfig& config, const fs::path& root) {
  PipelineResult result;
  result.stages = run_offline(config, root);
  const OfflineModel model = load_offline(root);
  std::ofstream summary;
  std::ostringstream rows;
  rows.precision(10);
  rows << "label,U_m,U_b,extrapolated,U_avg,U_max,p_avg,p_max,T_avg,T_max,nut_avg,nut_max,energy_max,fom_seconds,"
          "rom_seconds,speedup\n";
  for (std::size_t k = 0; k < config.testing.size(); ++k) {
    const Parameter& mu = config.testing[k];
    OnlineResult r;
    try {
      r = run_online(config, model, root, mu, {true, root / "online" / config.test_labels[k]});
    } catch (const StageError&) {
      throw;
    } catch (const std::exception& e) {
      throw StageError("online", e.what());
    }
    const ErrorReport& rep = *r.report;
    rows << config.test_labels[k] << "," << mu[0] << "," << mu[1] << "," << (r.extrapolated ? "true" : "false");
    for (const char* f : {"U", "p", "T", "nut"}) {
      const auto it = rep.statistics.find(f);
      if (it != rep.statistics.end() && it->second) rows << "," << it->second->average << "," << it->second->max;
      else rows << ",undefined,undefined";
    }
    double emax = 0.0;
    for (double e : rep.energy_error) emax = std::max(emax, e);
    rows << "," << emax << "," << rep.fom_seconds << "," << rep.rom_seconds << ",";
    if (const auto s = rep.speedup_factor()) rows << *s;
    else rows << "undefined";
    rows << "\n";
    log("online ", config.test_labels[k], ": U avg ", rep.statistics.at("U")->average, " %, T avg ",
        rep.statistics.at("T")->average, " %, rom ", rep.rom_seconds, " s");
    result.online.push_back(std::move(r));
  }
  summary.open(root / "summary.csv");
  summary << rows.str();
  if (!summary) throw StageError("online", "cannot write summary.csv");
  return result;
}

}  // namespace romkit
