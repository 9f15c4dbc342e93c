#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "romkit/eval.hpp"
#include "romkit/fom.hpp"
#include "romkit/galerkin.hpp"
#include "romkit/lifting.hpp"
#include "romkit/pod.hpp"
#include "romkit/rbf.hpp"
#include "romkit/rom.hpp"
#include "romkit/util/manifest.hpp"

namespace romkit {

inline constexpr const char* kRomkitVersion = "0.1.0";

struct ProbeLine {
  std::string name;
  std::vector<Vec2> points;
};

/// Training grid (0.535 + 0.01k, 0.715 + 0.01k), k = 0..9.
std::vector<Parameter> default_training_parameters();
/// A = (0.55, 0.73), B = (0.57, 0.75), C = (0.58, 0.76), D = (0.59, 0.77).
std::vector<Parameter> default_test_parameters();

/// Everything one study needs. Loaded from a sectioned key = value file;
/// absent keys keep their defaults, unknown keys are rejected.
struct RunConfig {
  FOMConfig fom;
  std::vector<Parameter> training = default_training_parameters();
  std::vector<Parameter> testing = default_test_parameters();
  std::vector<std::string> test_labels{"A", "B", "C", "D"};

  std::string pod_method = "standard";  // standard | nested
  double local_threshold = 0.9999;      // nested POD, per-parameter energy
  Truncation velocity = Truncation::fixed(6);
  Truncation pressure = Truncation::fixed(10);
  Truncation temperature = Truncation::fixed(11);
  Truncation eddy = Truncation::fixed(10);
  bool supremizers = true;
  LiftMethod lift_method = LiftMethod::DiffusionSolve;

  std::string rbf_spread = "median";        // median | stable | <number>
  std::string rbf_regularization = "auto";  // auto | <number>

  /// Online time grid and solver settings. The physical constants and the
  /// temperature lift values are taken from `fom` (see online_config()).
  OnlineConfig online;
  int fields_every = 1;  // write reconstructed fields every n-th saved state, 0 = never
  EnergyWeights energy;
  std::vector<ProbeLine> probes{{"outlet_section", {{1.75, 1.0 / 64.0}, {1.75, 1.0 - 1.0 / 64.0}}}};

  std::filesystem::path output_root = "romkit_out";

  static RunConfig load(const std::filesystem::path& path);
  static RunConfig from_manifest(const Manifest& m);
  Manifest to_manifest() const;
  void save(const std::filesystem::path& path) const;

  /// Throws ConfigError.
  void validate() const;
  OnlineConfig online_config() const;
  /// True when mu lies outside the per-coordinate training range.
  bool outside_training_range(const Parameter& mu) const;
};

/// Cache root: the explicit override, else $ROMKIT_CACHE, else config.output_root.
std::filesystem::path resolve_root(const RunConfig& config, const std::optional<std::filesystem::path>& override_root);

enum class Stage { Generate, Lift, Pod, Project, TrainRbf };
std::string to_string(Stage stage);
Stage parse_stage(const std::string& name);
/// Output directory of a stage relative to the root.
std::string stage_directory(Stage stage);

struct StageStatus {
  Stage stage = Stage::Generate;
  bool cached = false;
  double seconds = 0.0;
  std::string input_hash;
  std::string output_hash;
};

/// Runs the offline stages up to and including `last`. A stage is reused when
/// its recorded input hash matches and its output tree is unchanged; otherwise
/// its directory is rebuilt. Every stage records its hashes in
/// stages/<stage>.txt and per-file digests in stages/<stage>.sha256, and the
/// root manifest.txt summarizes the run. Failures are rethrown as StageError.
std::vector<StageStatus> run_offline(const RunConfig& config, const std::filesystem::path& root,
                                     Stage last = Stage::TrainRbf);

/// Progress lines on stderr (on by default).
void set_verbose(bool verbose);

/// snapshots/mu_<k>/t_<j>/{U,p,T,nut}.romf plus snapshots/manifest.txt and mesh.txt.
void write_snapshots(const std::filesystem::path& dir, const std::vector<std::vector<SnapshotRecord>>& runs);

struct SnapshotData {
  MeshPtr mesh;
  std::vector<Parameter> mu;
  std::vector<double> times;
  SnapshotSet velocity, pressure, temperature, eddy;
};

SnapshotData read_snapshots(const std::filesystem::path& dir);

/// The initial velocity is linear in mu, so its coefficients are a0 = A mu with
/// column i of A the projection of solenoidal_projection(zeta_i) - zeta_i.
/// The initial temperature is the lift combination itself, so c0 = 0.
Eigen::MatrixXd initial_velocity_map(const BasisSet& bases);

/// a0 = A mu, b0 = 0, c0 = 0, l0 = l(mu, 0).
ReducedState initial_state(const Eigen::MatrixXd& velocity_map, const ReducedOperators& ops,
                           const RBFInterpolant& rbf, const Parameter& mu);

struct OfflineModel {
  MeshPtr mesh;
  BasisSet bases;
  ReducedOperators ops;
  RBFInterpolant rbf;
  Eigen::MatrixXd initial_velocity;
};

/// Loads the artifacts of a completed offline run. Throws StageError naming
/// every absent file.
OfflineModel load_offline(const std::filesystem::path& root);

struct ReferenceRun {
  std::vector<SnapshotRecord> records;
  double wall_seconds = 0.0;
};

/// FOM run at mu, cached under reference/ by a hash of the FOM settings and mu.
ReferenceRun reference_run(const RunConfig& config, const std::filesystem::path& root, const Parameter& mu);

struct OnlineOptions {
  bool reference = true;
  std::filesystem::path out;
};

struct OnlineResult {
  ReducedTrajectory trajectory;
  std::vector<ReconstructedFields> fields;
  double rom_seconds = 0.0;  // initial state, integration and reconstruction
  std::optional<ErrorReport> report;
  bool extrapolated = false;
};

/// Solve, reconstruct and (optionally) compare against a reference FOM run.
/// Writes coefficients.csv, fields/t_<j>/*.romf, the eval CSVs and a manifest
/// to options.out.
OnlineResult run_online(const RunConfig& config, const OfflineModel& model, const std::filesystem::path& root,
                        const Parameter& mu, const OnlineOptions& options);

/// Offline stages followed by the online stage at every test parameter;
/// online results go to online/<label>/ and a summary to summary.csv.
struct PipelineResult {
  std::vector<StageStatus> stages;
  std::vector<OnlineResult> online;
};

PipelineResult run_pipeline(const RunConfig& config, const std::filesystem::path& root);

}  // namespace romkit
