#include "romkit/rbf.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <vector>

#include "romkit/core/field_io.hpp"
#include "romkit/errors.hpp"

namespace romkit {

double gaussian_kernel(double d, double gamma) {
  if (!(gamma > 0.0)) throw ConfigError("gaussian_kernel: spread must be positive");
  if (d < 0.0) throw ConfigError("gaussian_kernel: negative distance");
  return std::exp(-gamma * d * d);
}

Normalization Normalization::fit(const Eigen::MatrixXd& points) {
  if (points.cols() == 0) throw DataError("normalization needs at least one point");
  return {points.rowwise().minCoeff(), points.rowwise().maxCoeff()};
}

Eigen::VectorXd Normalization::apply(const Eigen::VectorXd& x) const {
  if (x.size() != lower.size()) throw DimensionError("normalization: wrong point dimension");
  Eigen::VectorXd out(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double range = upper[i] - lower[i];
    out[i] = range > 0.0 ? (x[i] - lower[i]) / range : x[i] - lower[i];
  }
  return out;
}

Eigen::MatrixXd Normalization::apply(const Eigen::MatrixXd& points) const {
  Eigen::MatrixXd out(points.rows(), points.cols());
  for (Eigen::Index j = 0; j < points.cols(); ++j) out.col(j) = apply(Eigen::VectorXd(points.col(j)));
  return out;
}

bool Normalization::contains(const Eigen::VectorXd& x, double tol) const {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double slack = tol * std::max(1.0, upper[i] - lower[i]);
    if (x[i] < lower[i] - slack || x[i] > upper[i] + slack) return false;
  }
  return true;
}

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& points, double gamma) {
  const Eigen::Index n = points.cols();
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) k(i, j) = k(j, i) = gaussian_kernel((points.col(i) - points.col(j)).norm(), gamma);
  }
  return k;
}

double choose_spread(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.cols();
  if (n < 2) throw DataError("choose_spread needs at least two centers");
  std::vector<double> d;
  d.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < i; ++j) {
      const double r = (points.col(i) - points.col(j)).norm();
      if (r == 0.0) throw DataError("choose_spread: coincident centers " + std::to_string(j) + " and " + std::to_string(i));
      d.push_back(r);
    }
  std::sort(d.begin(), d.end());
  const std::size_t m = d.size();
  const double median = m % 2 ? d[m / 2] : 0.5 * (d[m / 2 - 1] + d[m / 2]);
  return 1.0 / (2.0 * median * median);
}

double stable_spread(const Eigen::MatrixXd& points, double start, double limit) {
  if (!(start > 0.0)) throw ConfigError("stable_spread: start must be positive");
  double gamma = start;
  for (int k = 0; k <= 60; ++k, gamma *= 2.0) {
    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(kernel_matrix(points, gamma), Eigen::EigenvaluesOnly);
    const double lo = eig.eigenvalues().minCoeff();
    if (lo > 0.0 && eig.eigenvalues().maxCoeff() / lo <= limit) return gamma;
  }
  throw ConditioningError("stable_spread: no spread gives a condition number below the limit");
}

double default_regularization(const Eigen::MatrixXd& kernel) {
  return 1e-10 * kernel.trace() / static_cast<double>(kernel.rows());
}

namespace {

Eigen::MatrixXd regularized_kernel(const Eigen::MatrixXd& centers, double gamma, double lambda_reg) {
  if (lambda_reg < 0.0) throw ConfigError("RBF regularization must be non-negative");
  Eigen::MatrixXd k = kernel_matrix(centers, gamma);
  k.diagonal().array() += lambda_reg;
  return k;
}

void check_training_input(const Eigen::MatrixXd& points, const Eigen::MatrixXd& values) {
  if (points.cols() == 0) throw DataError("RBF training needs at least one center");
  if (values.cols() != points.cols()) throw DimensionError("RBF training: one value column per center required");
  if (!points.allFinite() || !values.allFinite()) throw DataError("RBF training data is not finite");
}

}  // namespace

RBFInterpolant train_rbf(const Eigen::MatrixXd& points, const Eigen::MatrixXd& values, double gamma, double lambda_reg) {
  check_training_input(points, values);
  if (!(gamma > 0.0)) throw ConfigError("RBF spread must be positive");
  RBFInterpolant rbf;
  rbf.normalization = Normalization::fit(points);
  rbf.centers = rbf.normalization.apply(points);
  rbf.gamma = gamma;
  rbf.lambda_reg = lambda_reg;
  if (points.cols() > 1) choose_spread(rbf.centers);  // rejects coincident centers

  const Eigen::MatrixXd k = regularized_kernel(rbf.centers, gamma, lambda_reg);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  rbf.condition = lo > 0.0 ? hi / lo : std::numeric_limits<double>::infinity();
  if (lambda_reg == 0.0 && !(rbf.condition <= 1e14)) {
    std::ostringstream msg;
    msg << "RBF kernel matrix is ill-conditioned (condition " << rbf.condition
        << " > 1e14); use a larger spread or a positive regularization";
    throw ConditioningError(msg.str());
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(k);
  if (llt.info() != Eigen::Success)
    throw ConditioningError("RBF kernel matrix is not numerically positive definite; increase the regularization");

  const Eigen::MatrixXd rhs = values.transpose();
  Eigen::MatrixXd w = llt.solve(rhs);
  w += llt.solve(rhs - k * w);
  rbf.weights = w.transpose();
  const double norm = rhs.norm();
  rbf.residual = norm > 0.0 ? (k * w - rhs).norm() / norm : (k * w).norm();
  return rbf;
}

Eigen::VectorXd RBFInterpolant::evaluate(const Eigen::VectorXd& x, bool* outside) const {
  if (outside) *outside = !normalization.contains(x);
  const Eigen::VectorXd y = normalization.apply(x);
  Eigen::VectorXd phi(centers.cols());
  for (Eigen::Index j = 0; j < centers.cols(); ++j) phi[j] = std::exp(-gamma * (y - centers.col(j)).squaredNorm());
  return weights * phi;
}

double loocv_error(const Eigen::MatrixXd& points, const Eigen::MatrixXd& values, double gamma, double lambda_reg) {
  check_training_input(points, values);
  const Eigen::MatrixXd centers = Normalization::fit(points).apply(points);
  const Eigen::MatrixXd k = regularized_kernel(centers, gamma, lambda_reg);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(k);
  const Eigen::VectorXd lam = eig.eigenvalues();
  if (lam.minCoeff() <= 0.0) return std::numeric_limits<double>::infinity();
  const Eigen::MatrixXd& v = eig.eigenvectors();
  const Eigen::MatrixXd inv = v * lam.cwiseInverse().asDiagonal() * v.transpose();
  const Eigen::MatrixXd coef = inv * values.transpose();
  double sum = 0.0;
  for (Eigen::Index j = 0; j < coef.rows(); ++j) sum += coef.row(j).squaredNorm() / (inv(j, j) * inv(j, j));
  const double norm = values.norm();
  return norm > 0.0 ? std::sqrt(sum) / norm : std::sqrt(sum);
}

namespace {

void write_matrix(std::ostream& out, const Eigen::MatrixXd& m) {
  write_u32(out, static_cast<std::uint32_t>(m.rows()));
  write_u32(out, static_cast<std::uint32_t>(m.cols()));
  write_f64_array(out, m.data(), static_cast<std::size_t>(m.size()));
}

Eigen::MatrixXd read_matrix(std::istream& in) {
  const auto rows = read_u32(in);
  const auto cols = read_u32(in);
  if (static_cast<std::uint64_t>(rows) * cols > (1ull << 32)) throw DataError("rbf.bin: bad matrix shape");
  Eigen::MatrixXd m(rows, cols);
  read_f64_array(in, m.data(), static_cast<std::size_t>(m.size()));
  return m;
}

}  // namespace

void write_rbf(const std::filesystem::path& dir, const RBFInterpolant& rbf) {
  std::filesystem::create_directories(dir);
  std::ofstream bin(dir / "rbf.bin", std::ios::binary);
  if (!bin) throw DataError("cannot write " + (dir / "rbf.bin").string());
  bin.write("ROMR", 4);
  write_u32(bin, 1);
  write_f64(bin, rbf.gamma);
  write_f64(bin, rbf.lambda_reg);
  write_f64(bin, rbf.condition);
  write_f64(bin, rbf.residual);
  write_matrix(bin, rbf.normalization.lower);
  write_matrix(bin, rbf.normalization.upper);
  write_matrix(bin, rbf.centers);
  write_matrix(bin, rbf.weights);
  std::ofstream txt(dir / "rbf.txt");
  txt.precision(17);
  txt << "format ROMR 1\n"
      << "gamma " << rbf.gamma << "\nlambda_reg " << rbf.lambda_reg << "\ncondition " << rbf.condition
      << "\nresidual " << rbf.residual << "\ndimensions " << rbf.centers.rows() << "\ncenters " << rbf.n_centers()
      << "\noutputs " << rbf.n_outputs() << "\nlower " << rbf.normalization.lower.transpose() << "\nupper "
      << rbf.normalization.upper.transpose() << "\n";
  if (!bin || !txt) throw DataError("failed writing interpolant to " + dir.string());
}

RBFInterpolant read_rbf(const std::filesystem::path& dir) {
  std::ifstream bin(dir / "rbf.bin", std::ios::binary);
  if (!bin) throw DataError("cannot read " + (dir / "rbf.bin").string());
  char magic[4];
  bin.read(magic, 4);
  if (!bin || std::string(magic, 4) != "ROMR") throw DataError("rbf.bin: bad magic");
  if (read_u32(bin) != 1) throw DataError("rbf.bin: unsupported version");
  RBFInterpolant rbf;
  rbf.gamma = read_f64(bin);
  rbf.lambda_reg = read_f64(bin);
  rbf.condition = read_f64(bin);
  rbf.residual = read_f64(bin);
  rbf.normalization.lower = read_matrix(bin);
  rbf.normalization.upper = read_matrix(bin);
  rbf.centers = read_matrix(bin);
  rbf.weights = read_matrix(bin);
  if (rbf.weights.cols() != rbf.centers.cols() || rbf.normalization.lower.size() != rbf.centers.rows())
    throw DataError("rbf.bin: inconsistent shapes");
  return rbf;
}

}  // namespace romkit
