#include "romkit/pod.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <cmath>

#include "romkit/core/field_io.hpp"
#include "romkit/errors.hpp"
#include "romkit/util/manifest.hpp"

namespace romkit {

Field SnapshotSet::snapshot(int col) const { return Field(mesh, components, matrix.col(col)); }

SnapshotSet SnapshotSet::local(int k) const {
  SnapshotSet out;
  out.kind = kind;
  out.mesh = mesh;
  out.components = components;
  out.mu = {mu.at(k)};
  out.times = times;
  out.matrix = matrix.middleCols(column(k, 0), static_cast<Eigen::Index>(times.size()));
  return out;
}

void SnapshotSet::validate() const {
  if (!mesh) throw DimensionError("snapshot set '" + kind + "' has no mesh");
  if (n_dofs() != mesh->n_cells() * components)
    throw DimensionError("snapshot set '" + kind + "' rows do not match mesh dofs");
  if (n_snapshots() == 0) throw DataError("snapshot set '" + kind + "' is empty");
  if (!mu.empty() && !times.empty() && static_cast<size_t>(n_snapshots()) != mu.size() * times.size())
    throw DimensionError("snapshot set '" + kind + "': column count is not Np * Nt");
  if (!matrix.allFinite()) throw DataError("snapshot set '" + kind + "' contains non-finite values");
}

Eigen::VectorXd dof_weights(const Mesh& mesh, int components) {
  Eigen::VectorXd w(mesh.n_cells() * components);
  for (int c = 0; c < mesh.n_cells(); ++c)
    for (int k = 0; k < components; ++k) w[c * components + k] = mesh.cell_volume(c);
  return w;
}

Eigen::MatrixXd assemble_correlation(const SnapshotSet& snapshots) {
  if (snapshots.n_snapshots() == 0) throw DataError("assemble_correlation: empty snapshot set");
  if (!snapshots.matrix.allFinite()) throw DataError("assemble_correlation: non-finite snapshot entries");
  const Eigen::VectorXd w = dof_weights(*snapshots.mesh, snapshots.components);
  if (w.size() != snapshots.matrix.rows()) throw DimensionError("assemble_correlation: row count mismatch");
  const Eigen::MatrixXd weighted = w.asDiagonal() * snapshots.matrix;
  Eigen::MatrixXd c = snapshots.matrix.transpose() * weighted;
  return 0.5 * (c + c.transpose());
}

Eigenpairs eigendecompose(const Eigen::MatrixXd& correlation) {
  if (correlation.rows() != correlation.cols()) throw DimensionError("eigendecompose: matrix is not square");
  const double scale = std::max(correlation.norm(), std::numeric_limits<double>::min());
  if ((correlation - correlation.transpose()).norm() > 1e-10 * scale)
    throw DataError("eigendecompose: matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(correlation);
  if (solver.info() != Eigen::Success) throw DataError("eigendecompose: eigensolver failed");
  const Eigen::Index n = correlation.rows();
  Eigenpairs out;
  out.values = solver.eigenvalues().reverse();
  out.vectors = solver.eigenvectors().rowwise().reverse();
  const double top = n > 0 ? out.values[0] : 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (out.values[i] >= 0.0) continue;
    if (out.values[i] < -1e-12 * std::abs(top))
      throw DataError("eigendecompose: matrix is not positive semidefinite (eigenvalue " +
                      format_double(out.values[i]) + ")");
    out.values[i] = 0.0;
  }
  return out;
}

Field PODBasis::mode(int i) const { return Field(mesh, components, modes.col(i)); }

Eigen::VectorXd PODBasis::cumulative_energy() const {
  Eigen::VectorXd out(eigenvalues.size());
  const double total = eigenvalues.sum();
  double running = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    running += eigenvalues[i];
    out[i] = total > 0.0 ? running / total : 0.0;
  }
  return out;
}

int numerical_rank(const Eigen::VectorXd& eigenvalues) {
  if (eigenvalues.size() == 0 || eigenvalues[0] <= 0.0) return 0;
  int r = 0;
  while (r < eigenvalues.size() && eigenvalues[r] > 1e-14 * eigenvalues[0]) ++r;
  return r;
}

void orthonormalize(Eigen::MatrixXd& columns, const Eigen::VectorXd& weights) {
  for (Eigen::Index i = 0; i < columns.cols(); ++i) {
    for (int pass = 0; pass < 2; ++pass)
      for (Eigen::Index j = 0; j < i; ++j)
        columns.col(i) -= columns.col(j).dot(weights.cwiseProduct(columns.col(i))) * columns.col(j);
    const double norm = std::sqrt(columns.col(i).dot(weights.cwiseProduct(columns.col(i))));
    if (!(norm > 0.0)) throw RankError("orthonormalize: column " + std::to_string(i) + " is dependent",
                                       static_cast<int>(i));
    columns.col(i) /= norm;
  }
}

PODBasis compute_modes(const SnapshotSet& snapshots, const Eigen::VectorXd& eigenvalues,
                       const Eigen::MatrixXd& eigenvectors, int rank) {
  if (eigenvectors.rows() != snapshots.n_snapshots() || eigenvalues.size() != eigenvectors.cols())
    throw DimensionError("compute_modes: eigenpairs do not match the snapshot set");
  const int available = numerical_rank(eigenvalues);
  if (rank < 0 || rank > available)
    throw RankError("compute_modes: requested rank " + std::to_string(rank) + " exceeds numerical rank " +
                        std::to_string(available) + "; first defective mode index is " + std::to_string(available),
                    available);
  PODBasis basis;
  basis.kind = snapshots.kind;
  basis.mesh = snapshots.mesh;
  basis.components = snapshots.components;
  basis.eigenvalues = eigenvalues;
  basis.modes = snapshots.matrix * eigenvectors.leftCols(rank);
  for (int i = 0; i < rank; ++i) basis.modes.col(i) /= std::sqrt(eigenvalues[i]);
  orthonormalize(basis.modes, dof_weights(*snapshots.mesh, snapshots.components));
  return basis;
}

int truncate_by_energy(const Eigen::VectorXd& eigenvalues, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw ConfigError("energy threshold must lie in (0, 1]");
  const double total = eigenvalues.sum();
  if (!(total > 0.0)) throw DataError("truncate_by_energy: spectrum has no energy");
  // Guard against the running sum falling a rounding error short of 1.
  const double target = threshold * total * (1.0 - 1e-14);
  double running = 0.0;
  for (Eigen::Index i = 0; i < eigenvalues.size(); ++i) {
    running += eigenvalues[i];
    if (running >= target) return static_cast<int>(i) + 1;
  }
  return static_cast<int>(eigenvalues.size());
}

namespace {

int resolve_rank(const Eigen::VectorXd& eigenvalues, const Truncation& truncation) {
  if (truncation.rank > 0) return truncation.rank;
  return std::min(truncate_by_energy(eigenvalues, truncation.threshold), numerical_rank(eigenvalues));
}

}  // namespace

PODBasis standard_pod(const SnapshotSet& snapshots, const Truncation& truncation) {
  snapshots.validate();
  const Eigenpairs eig = eigendecompose(assemble_correlation(snapshots));
  return compute_modes(snapshots, eig.values, eig.vectors, resolve_rank(eig.values, truncation));
}

PODBasis nested_pod(const std::vector<SnapshotSet>& local_sets, double local_threshold,
                    const Truncation& truncation) {
  if (local_sets.empty()) throw DataError("nested_pod: no local snapshot sets");
  std::vector<Eigen::MatrixXd> blocks;
  Eigen::Index columns = 0;
  for (size_t k = 0; k < local_sets.size(); ++k) {
    const auto& set = local_sets[k];
    set.validate();
    if (set.matrix.squaredNorm() == 0.0) {
      std::string mu_text;
      for (double v : set.mu.empty() ? Parameter{} : set.mu.front()) mu_text += " " + format_double(v);
      throw DataError("nested_pod: local set " + std::to_string(k) + " (mu =" + mu_text + ") has zero energy");
    }
    const Eigenpairs eig = eigendecompose(assemble_correlation(set));
    const int r = std::min(truncate_by_energy(eig.values, local_threshold), numerical_rank(eig.values));
    const PODBasis local = compute_modes(set, eig.values, eig.vectors, r);
    Eigen::MatrixXd weighted = local.modes;
    for (int i = 0; i < r; ++i) weighted.col(i) *= eig.values[i];
    columns += r;
    blocks.push_back(std::move(weighted));
  }
  SnapshotSet global;
  global.kind = local_sets.front().kind;
  global.mesh = local_sets.front().mesh;
  global.components = local_sets.front().components;
  global.matrix.resize(local_sets.front().n_dofs(), columns);
  Eigen::Index offset = 0;
  for (const auto& b : blocks) {
    if (b.rows() != global.matrix.rows()) throw DimensionError("nested_pod: local sets differ in size");
    global.matrix.middleCols(offset, b.cols()) = b;
    offset += b.cols();
  }
  return standard_pod(global, truncation);
}

PODCost cost_model(int nt, int np, int local_rank) {
  if (nt <= 0 || np <= 0 || local_rank <= 0) throw ConfigError("cost_model: arguments must be positive");
  const double t = nt, p = np, r = local_rank;
  return {std::pow(t * p, 3), t * t * t * p + std::pow(r * p, 3)};
}

double reconstruction_error(const SnapshotSet& snapshots, const PODBasis& basis) {
  if (basis.modes.rows() != snapshots.matrix.rows())
    throw DimensionError("reconstruction_error: basis and snapshots differ in size");
  const Eigen::VectorXd w = dof_weights(*snapshots.mesh, snapshots.components);
  const Eigen::MatrixXd coeffs = basis.modes.transpose() * w.asDiagonal() * snapshots.matrix;
  const Eigen::MatrixXd residual = snapshots.matrix - basis.modes * coeffs;
  const double num = (residual.array().square().colwise() * w.array()).sum();
  const double den = (snapshots.matrix.array().square().colwise() * w.array()).sum();
  if (!(den > 0.0)) throw DataError("reconstruction_error: snapshot set has no energy");
  return std::sqrt(num / den);
}

double max_principal_angle(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, const Eigen::VectorXd& weights) {
  if (a.rows() != b.rows() || a.rows() != weights.size()) throw DimensionError("principal angles: size mismatch");
  const Eigen::VectorXd sw = weights.cwiseSqrt();
  const Eigen::MatrixXd bw = sw.asDiagonal() * b;
  const Eigen::MatrixXd aw = sw.asDiagonal() * a;
  // Residual of b after projection onto span(a); its largest singular value is
  // the sine of the largest angle when both spans have the same dimension.
  const Eigen::MatrixXd residual = bw - aw * (aw.transpose() * bw);
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(residual);
  const double s = svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
  return std::asin(std::min(1.0, s));
}

void write_basis(const std::filesystem::path& dir, const PODBasis& basis) {
  std::filesystem::create_directories(dir);
  for (int i = 0; i < basis.rank(); ++i)
    write_field(dir / ("mode_" + std::to_string(i) + ".romf"), basis.mode(i));
  Manifest m;
  m.set("kind", basis.kind);
  m.set("components", basis.components);
  m.set("n_cells", basis.mesh->n_cells());
  m.set("rank", basis.rank());
  const Eigen::VectorXd energy = basis.cumulative_energy();
  m.set("eigenvalues", std::vector<double>(basis.eigenvalues.data(), basis.eigenvalues.data() + basis.eigenvalues.size()));
  m.set("cumulative_energy", std::vector<double>(energy.data(), energy.data() + energy.size()));
  m.write(dir / "basis.txt");
}

PODBasis read_basis(const std::filesystem::path& dir, MeshPtr mesh) {
  const Manifest m = Manifest::read(dir / "basis.txt");
  PODBasis basis;
  basis.kind = m.get("kind");
  basis.components = m.get_int("components");
  basis.mesh = mesh;
  const int rank = m.get_int("rank");
  if (m.get_int("n_cells") != mesh->n_cells()) throw DimensionError("read_basis: mesh mismatch in " + dir.string());
  const auto eig = m.get_list("eigenvalues");
  basis.eigenvalues = Eigen::Map<const Eigen::VectorXd>(eig.data(), static_cast<Eigen::Index>(eig.size()));
  basis.modes.resize(mesh->n_cells() * basis.components, rank);
  for (int i = 0; i < rank; ++i) {
    const Field f = read_field(dir / ("mode_" + std::to_string(i) + ".romf"), mesh);
    if (f.components() != basis.components) throw DimensionError("read_basis: component mismatch");
    basis.modes.col(i) = f.values();
  }
  return basis;
}

}  // namespace romkit
