#pragma once

#include <Eigen/Dense>
#include <filesystem>

namespace romkit {

/// exp(-gamma d^2). Throws ConfigError for gamma <= 0 or d < 0.
double gaussian_kernel(double d, double gamma);

/// Per-coordinate min-max normalization to [0, 1]. A coordinate with zero
/// range is only shifted.
struct Normalization {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  static Normalization fit(const Eigen::MatrixXd& points);  // one point per column
  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  Eigen::MatrixXd apply(const Eigen::MatrixXd& points) const;
  bool contains(const Eigen::VectorXd& x, double tol = 1e-12) const;
};

/// Theta_ij = exp(-gamma |x_i - x_j|^2) over columns of `points`.
Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& points, double gamma);

/// gamma = 1 / (2 d_med^2), d_med the median pairwise distance of `points`
/// (already normalized). Throws DataError for fewer than two points or
/// coincident points.
double choose_spread(const Eigen::MatrixXd& points);

/// Smallest gamma = start * 2^k (k >= 0) whose kernel matrix has condition
/// number at most `limit`, i.e. the least local spread usable without
/// regularization. Throws ConditioningError when none is found within 60 doublings.
double stable_spread(const Eigen::MatrixXd& points, double start, double limit = 1e14);

/// 1e-10 * trace(Theta) / N_s, i.e. 1e-10 for the unit-diagonal Gaussian kernel.
double default_regularization(const Eigen::MatrixXd& kernel);

struct RBFInterpolant {
  Normalization normalization;
  Eigen::MatrixXd centers;  // normalized, one per column
  double gamma = 1.0;
  double lambda_reg = 0.0;
  Eigen::MatrixXd weights;  // N_out x N_s
  double condition = 0.0;   // 2-norm condition number of Theta + lambda I
  double residual = 0.0;    // |Theta W^T - L^T| / |L| at training time

  int n_centers() const { return static_cast<int>(centers.cols()); }
  int n_outputs() const { return static_cast<int>(weights.rows()); }

  /// Evaluates at a raw (unnormalized) point. `outside` is set when the point
  /// lies outside the training ranges.
  Eigen::VectorXd evaluate(const Eigen::VectorXd& x, bool* outside = nullptr) const;
};

/// Solves (Theta + lambda_reg I) w_i = L_i for every row of `values`
/// (N_out x N_s), with centers given raw as columns of `points`.
/// Throws ConditioningError when lambda_reg = 0 and cond(Theta) > 1e14, or
/// when the regularized matrix cannot be factorized.
RBFInterpolant train_rbf(const Eigen::MatrixXd& points, const Eigen::MatrixXd& values, double gamma,
                         double lambda_reg);

/// Leave-one-out error of the interpolant, computed in closed form from the
/// inverse kernel matrix (sqrt of the summed squared errors over outputs and
/// centers, divided by |L|).
double loocv_error(const Eigen::MatrixXd& points, const Eigen::MatrixXd& values, double gamma, double lambda_reg);

/// rbf.bin ("ROMR" binary) plus rbf.txt.
void write_rbf(const std::filesystem::path& dir, const RBFInterpolant& rbf);
RBFInterpolant read_rbf(const std::filesystem::path& dir);

}  // namespace romkit
