#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "romkit/core/boundary.hpp"
#include "romkit/core/field.hpp"
#include "romkit/core/mesh.hpp"
#include "romkit/core/operators.hpp"
#include "romkit/lifting.hpp"
#include "romkit/pod.hpp"

namespace romkit {

struct FOMConfig {
  TeeGeometry geometry;
  double nu = 0.01;
  double alpha = 0.025;
  double prandtl_t = 0.85;
  double smagorinsky = 0.15;
  bool eddy_viscosity = true;
  double theta_main = 292.15;
  double theta_branch = 309.5;
  double dt = 2.5e-3;
  double t_final = 3.0;
  int snapshot_every = 40;
  ConvectionScheme momentum_scheme = ConvectionScheme::Central;
  ConvectionScheme thermal_scheme = ConvectionScheme::Central;

  /// Throws ConfigError on non-positive constants or T < dt.
  void validate() const;
  int n_steps() const;
};

struct SnapshotRecord {
  Parameter mu;  // (U_m, U_b)
  double t = 0.0;
  Field u;
  Field p;
  Field theta;
  Field nut;
};

/// Boundary data of the tee problem. Velocity: inflow (U_m, 0) on the main
/// inlet and (0, -U_b) on the branch inlet, no-slip walls, zero-gradient
/// outlet. Pressure: zero-gradient except a zero reference at the outlet.
/// Temperature: fixed on both inlets, zero-gradient elsewhere.
BoundaryConditions tee_velocity_bc(const Mesh& mesh, double u_main, double u_branch);
BoundaryConditions tee_pressure_bc(const Mesh& mesh);
BoundaryConditions tee_temperature_bc(const Mesh& mesh, double theta_main, double theta_branch);

/// Unit control functions for the two inlets (main first, then branch).
std::vector<LiftingFunction> tee_velocity_lifts(const MeshPtr& mesh);
std::vector<LiftingFunction> tee_temperature_lifts(const MeshPtr& mesh);

/// A flow problem: mesh, boundary data and initial state.
struct FlowProblem {
  MeshPtr mesh;
  BoundaryConditions u_bc;
  BoundaryConditions p_bc;
  BoundaryConditions theta_bc;
  Field u0;
  Field theta0;  // empty mesh pointer means no temperature equation
  bool has_temperature() const { return static_cast<bool>(theta0.mesh_ptr()); }
};

/// Tee problem for mu = (U_m, U_b). The initial velocity is the solenoidal
/// projection of U_m zeta_m + U_b zeta_b; theta0 = theta_m chi_m + theta_b chi_b.
/// u - G phi with D G phi = D u: the discrete solenoidal part of u with the
/// same boundary data (phi pinned at cell 0 when p_bc has no Dirichlet patch).
Field solenoidal_projection(const Field& u, const BoundaryConditions& u_bc, const BoundaryConditions& p_bc);

FlowProblem tee_problem(const FOMConfig& config, const Parameter& mu);

/// Lid-driven cavity on the unit square with lid speed `lid`, fluid at rest.
FlowProblem cavity_problem(int n, double lid);

/// nu_t = (C_s h)^2 sqrt(2 S:S), S the symmetric velocity gradient, h = sqrt(dx dy).
Field eddy_viscosity_model(const Field& u, const BoundaryConditions& u_bc, double smagorinsky = 0.15);

/// nu_t / Pr_t pointwise; throws ConfigError when Pr_t <= 0.
Field turbulent_diffusivity(const Field& nut, double prandtl_t);

/// Incremental projection solver on a collocated grid.
///
/// Each step: explicit convection and turbulent stresses, implicit laminar
/// diffusion, a pressure increment from D G dp = D(u*)/dt, the velocity
/// correction, the eddy-viscosity update from the new velocity, and finally an
/// implicit temperature step with the new velocity and eddy viscosity.
class FlowSolver {
 public:
  FlowSolver(FlowProblem problem, const FOMConfig& config);
  ~FlowSolver();
  FlowSolver(const FlowSolver&) = delete;
  FlowSolver& operator=(const FlowSolver&) = delete;

  void step();
  int step_index() const { return step_; }
  double time() const { return step_ * config_.dt; }

  const Field& velocity() const { return u_; }
  const Field& pressure() const { return p_; }
  const Field& temperature() const { return theta_; }
  const Field& eddy_viscosity() const { return nut_; }
  const FlowProblem& problem() const { return problem_; }

  /// max |div u| after the last correction.
  double divergence_norm() const;

 private:
  struct Impl;
  FlowProblem problem_;
  FOMConfig config_;
  std::unique_ptr<Impl> impl_;
  Field u_, p_, theta_, nut_;
  int step_ = 0;
  double reference_norm_ = 0.0;
};

using StepObserver = std::function<void(const FlowSolver&)>;

/// Runs the tee problem for mu and returns the snapshots at every
/// `snapshot_every`-th step (t = dt*snapshot_every, ..., T).
std::vector<SnapshotRecord> run_fom(const FOMConfig& config, const Parameter& mu,
                                    const StepObserver& observer = nullptr);

/// Gathers one field of a list of runs into a global snapshot set.
/// `runs[k]` holds the records of parameter k, all with the same time grid.
SnapshotSet collect_snapshots(const std::vector<std::vector<SnapshotRecord>>& runs, const std::string& kind);

/// Exact finite-rank data: column (k, j) = sum_i a_i(mu_k, t_j) phi_i with
/// orthonormal smooth shapes phi_i. With `time_constant` the coefficients do
/// not depend on t.
struct ManufacturedData {
  SnapshotSet snapshots;
  Eigen::MatrixXd shapes;  // N_h x mode_count, orthonormal
};

ManufacturedData manufactured_snapshots(const MeshPtr& mesh, const std::vector<Parameter>& mu,
                                        const std::vector<double>& times, int mode_count, int components = 1,
                                        bool time_constant = false);

}  // namespace romkit
