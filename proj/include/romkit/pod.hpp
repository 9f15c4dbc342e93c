#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "romkit/core/field.hpp"

namespace romkit {

using Parameter = std::vector<double>;

/// Global snapshot matrix. Column k*Nt + j holds the snapshot at (mu[k], times[j]).
struct SnapshotSet {
  std::string kind;  // "U", "p", "T", "nut", "sup"
  MeshPtr mesh;
  int components = 1;
  Eigen::MatrixXd matrix;  // N_h x N_s
  std::vector<Parameter> mu;
  std::vector<double> times;

  int n_dofs() const { return static_cast<int>(matrix.rows()); }
  int n_snapshots() const { return static_cast<int>(matrix.cols()); }
  int column(int k, int j) const { return k * static_cast<int>(times.size()) + j; }
  Field snapshot(int col) const;

  /// Columns belonging to parameter k, as a one-parameter set.
  SnapshotSet local(int k) const;

  /// Throws DimensionError/DataError when the layout or values are invalid.
  void validate() const;
};

/// Per-dof quadrature weights: the cell volume repeated for every component.
Eigen::VectorXd dof_weights(const Mesh& mesh, int components);

/// C_ij = <s_i, s_j> with the volume-weighted inner product.
Eigen::MatrixXd assemble_correlation(const SnapshotSet& snapshots);

struct Eigenpairs {
  Eigen::VectorXd values;   // descending
  Eigen::MatrixXd vectors;  // columns match values
};

Eigenpairs eigendecompose(const Eigen::MatrixXd& correlation);

struct PODBasis {
  std::string kind;
  MeshPtr mesh;
  int components = 1;
  Eigen::MatrixXd modes;        // N_h x N_r
  Eigen::VectorXd eigenvalues;  // full spectrum

  int rank() const { return static_cast<int>(modes.cols()); }
  Field mode(int i) const;
  /// Cumulative energy fraction after 1..N eigenvalues.
  Eigen::VectorXd cumulative_energy() const;
};

/// Numerical rank: number of eigenvalues above 1e-14 * lambda_1.
int numerical_rank(const Eigen::VectorXd& eigenvalues);

PODBasis compute_modes(const SnapshotSet& snapshots, const Eigen::VectorXd& eigenvalues,
                       const Eigen::MatrixXd& eigenvectors, int rank);

/// Smallest r whose cumulative energy reaches threshold.
int truncate_by_energy(const Eigen::VectorXd& eigenvalues, double threshold);

/// Either an energy threshold or a fixed rank (rank > 0 wins).
struct Truncation {
  double threshold = 0.0;
  int rank = 0;

  static Truncation energy(double t) { return {t, 0}; }
  static Truncation fixed(int r) { return {0.0, r}; }
};

PODBasis standard_pod(const SnapshotSet& snapshots, const Truncation& truncation);

/// Two-stage POD: local PODs per parameter, kept modes scaled by their
/// eigenvalues and concatenated, then a standard POD of that matrix.
PODBasis nested_pod(const std::vector<SnapshotSet>& local_sets, double local_threshold,
                    const Truncation& truncation);

struct PODCost {
  double standard = 0.0;
  double nested = 0.0;
};

/// Eigenproblem cost estimates: (Nt*Np)^3 against Nt^3*Np + (r*Np)^3.
PODCost cost_model(int nt, int np, int local_rank);

/// sqrt(sum ||s - Pi s||^2 / sum ||s||^2) over all columns.
double reconstruction_error(const SnapshotSet& snapshots, const PODBasis& basis);

/// Orthonormalizes columns in place with two passes of modified Gram-Schmidt
/// under the weighted inner product.
void orthonormalize(Eigen::MatrixXd& columns, const Eigen::VectorXd& weights);

/// Largest principal angle (radians) between the column spaces of two bases
/// that are orthonormal under the weighted inner product. Computed from the
/// sine of the angle so that tiny angles are resolved to rounding level.
double max_principal_angle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::VectorXd& weights);

/// Basis directory: mode_<i>.romf files plus basis.txt with the spectrum.
void write_basis(const std::filesystem::path& dir, const PODBasis& basis);
PODBasis read_basis(const std::filesystem::path& dir, MeshPtr mesh);

}  // namespace romkit
