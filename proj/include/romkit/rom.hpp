#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <vector>

#include "romkit/galerkin.hpp"
#include "romkit/pod.hpp"
#include "romkit/rbf.hpp"

namespace romkit {

struct OnlineConfig {
  double nu = 0.01;
  double alpha = 0.025;
  double prandtl_t = 0.85;
  double dt = 0.0025;
  double t_final = 3.0;
  int save_every = 40;
  double newton_tol = 1e-10;
  int max_newton = 50;
  /// Replace the pointwise turbulent diffusivity by alpha + mean(nu_t)/Pr_t.
  bool scalar_thermal_diffusivity = false;
  /// Values multiplying the temperature lifts (inlet temperatures).
  std::vector<double> temperature_lift_values{292.15, 309.5};

  void validate() const;
  int n_steps() const;
};

struct ReducedState {
  Eigen::VectorXd a;  // velocity modes, then supremizers
  Eigen::VectorXd b;
  Eigen::VectorXd c;
  Eigen::VectorXd l;
  double t = 0.0;
  int newton_iterations = 0;
};

struct ReducedTrajectory {
  Parameter mu;
  ReducedState initial;
  std::vector<ReducedState> states;  // every save_every steps, t > 0
  bool extrapolated = false;         // mu outside the interpolant's parameter ranges
  bool time_extrapolated = false;    // [t0, t_final] not inside the sampled time range
  double wall_seconds = 0.0;
  std::vector<double> step_seconds;
  double max_constraint_residual = 0.0;  // max over steps of |R a^|

  std::vector<double> times() const;
};

/// Coefficients of the initial fields: a and c by projecting the homogenized
/// velocity and temperature, b by projecting the pressure, l from the
/// interpolant at t = 0. Throws DimensionError for fields on another mesh.
ReducedState initial_conditions(const BasisSet& bases, const RBFInterpolant& rbf, const Parameter& mu,
                                const Field& u0, const Field& p0, const Field& theta0,
                                const std::vector<double>& temperature_lift_values);

class ReducedModel {
 public:
  ReducedModel(ReducedOperators ops, RBFInterpolant rbf, OnlineConfig config);

  const ReducedOperators& operators() const { return ops_; }
  const OnlineConfig& config() const { return config_; }

  /// l(mu, t); `outside` reports extrapolation.
  Eigen::VectorXd eddy_coefficients(const Parameter& mu, double t, bool* outside = nullptr) const;

  /// One backward Euler step of the (a, b) system by Newton iteration,
  /// followed by the linear temperature step. Throws StepError with the
  /// residual history when Newton fails to converge.
  ReducedState step(const ReducedState& state, const Parameter& mu, double dt) const;

  /// Integrates to t_final. On a step failure the states computed so far are
  /// left in `*partial` (when given) and the StepError propagates.
  ReducedTrajectory solve(const Parameter& mu, const ReducedState& initial,
                          ReducedTrajectory* partial = nullptr) const;

 private:
  Eigen::VectorXd momentum_residual(const Eigen::VectorXd& a_hat, const Eigen::VectorXd& b,
                                    const Eigen::VectorXd& a_old, const Eigen::MatrixXd& linear, double dt) const;

  ReducedOperators ops_;
  RBFInterpolant rbf_;
  OnlineConfig config_;
  Eigen::MatrixXd viscous_;  // nu (B + BT)
};

struct ReconstructedFields {
  double t = 0.0;
  Field u, p, theta, nut;
};

/// Full-order fields u = sum mu_i zeta_i + sum a_i phi_i, p = sum b_i psi_i,
/// theta = sum theta_i chi_i + sum c_i chi_i, nu_t = sum l_i xi_i.
ReconstructedFields reconstruct(const ReducedState& state, const BasisSet& bases, const Parameter& mu,
                                const std::vector<double>& temperature_lift_values);

/// One row per saved time: t, a..., b..., c..., l...
void write_coefficients_csv(const std::filesystem::path& path, const ReducedTrajectory& trajectory);

}  // namespace romkit
