#include "romkit/galerkin.hpp"

#include <Eigen/SparseLU>
#include <array>
#include <cmath>
#include <fstream>

#include "romkit/core/field_io.hpp"
#include "romkit/core/operators.hpp"
#include "romkit/core/sparse_operators.hpp"
#include "romkit/errors.hpp"

namespace romkit {

namespace {

struct AugmentedField {
  Field field;
  BoundaryConditions bc;
};

std::vector<AugmentedField> augment(const MeshPtr& mesh, const std::vector<LiftingFunction>& lifts,
                                    const Eigen::MatrixXd& modes, const BoundaryConditions& bc, int components) {
  std::vector<AugmentedField> out;
  out.reserve(lifts.size() + modes.cols());
  for (const auto& lift : lifts) {
    if (lift.field.components() != components) throw DimensionError("lift has the wrong number of components");
    out.push_back({lift.field, lift.bc});
  }
  const BoundaryConditions hom = bc.homogeneous();
  for (Eigen::Index j = 0; j < modes.cols(); ++j) out.push_back({Field(mesh, components, modes.col(j)), hom});
  return out;
}

// modes^T W X
Eigen::MatrixXd project(const Eigen::MatrixXd& modes, const Eigen::VectorXd& w, const Eigen::MatrixXd& x) {
  if (modes.cols() == 0) return Eigen::MatrixXd(0, x.cols());
  return modes.transpose() * (w.asDiagonal() * x);
}

void check_rows(const Eigen::MatrixXd& m, Eigen::Index rows, const char* what) {
  if (m.cols() > 0 && m.rows() != rows) throw DimensionError(std::string(what) + " has the wrong number of rows");
}

void check_bases(const BasisSet& b) {
  if (!b.mesh) throw DimensionError("basis set has no mesh");
  const Eigen::Index n = b.mesh->n_cells();
  check_rows(b.velocity, 2 * n, "velocity basis");
  check_rows(b.pressure, n, "pressure basis");
  check_rows(b.temperature, n, "temperature basis");
  check_rows(b.eddy, n, "eddy viscosity basis");
  if (b.n_supremizers < 0 || b.n_supremizers > b.n_u()) throw DimensionError("invalid supremizer count");
}

}  // namespace

void assemble_velocity_operators(const BasisSet& b, ReducedOperators& ops) {
  check_bases(b);
  const MeshPtr& mesh = b.mesh;
  const Eigen::VectorXd w2 = dof_weights(*mesh, 2);
  const Eigen::VectorXd w1 = dof_weights(*mesh, 1);
  const auto aug = augment(mesh, b.velocity_lifts, b.velocity, b.u_bc, 2);
  const int nl = static_cast<int>(b.velocity_lifts.size());
  const int nu = b.n_u();
  const int na = nl + nu;
  const int np = b.n_p();
  const int nnu = b.n_nu();
  const Eigen::Index nh = 2 * mesh->n_cells();

  ops.n_lift_u = nl;
  ops.n_u = nu;
  ops.n_sup = b.n_supremizers;
  ops.n_p = np;
  ops.n_nu = nnu;

  ops.M = project(b.velocity, w2, b.velocity);

  Eigen::MatrixXd lap(nh, na), lap_t(nh, na);
  const Field one = Field::constant(mesh, 1.0);
  for (int j = 0; j < na; ++j) {
    lap.col(j) = laplacian(aug[j].field, aug[j].bc).values();
    lap_t.col(j) = transpose_stress_divergence(one, aug[j].field, aug[j].bc).values();
  }
  ops.B = project(b.velocity, w2, lap);
  ops.BT = project(b.velocity, w2, lap_t);

  ops.Q.assign(nu, Eigen::MatrixXd::Zero(na, na));
  Eigen::MatrixXd conv(nh, na);
  for (int i = 0; i < na; ++i) {
    for (int j = 0; j < na; ++j)
      conv.col(j) = convective_term(aug[i].field, aug[i].bc, aug[j].field, aug[j].bc).values();
    const Eigen::MatrixXd proj = project(b.velocity, w2, conv);
    for (int k = 0; k < nu; ++k) ops.Q[k].row(i) = proj.row(k);
  }

  ops.QT1.assign(nnu, Eigen::MatrixXd());
  ops.QT2.assign(nnu, Eigen::MatrixXd());
  Eigen::MatrixXd scaled(nh, na), stress(nh, na);
  for (int i = 0; i < nnu; ++i) {
    const Field xi(mesh, 1, b.eddy.col(i));
    for (int j = 0; j < na; ++j) {
      scaled.col(j) = pointwise_product(xi, Field(mesh, 2, lap.col(j))).values();
      stress.col(j) = transpose_stress_divergence(xi, aug[j].field, aug[j].bc).values();
    }
    ops.QT1[i] = project(b.velocity, w2, scaled);
    ops.QT2[i] = project(b.velocity, w2, stress);
  }

  const BoundaryConditions p_hom = b.p_bc.homogeneous();
  Eigen::MatrixXd grad(nh, np);
  for (int i = 0; i < np; ++i) grad.col(i) = gradient(Field(mesh, 1, b.pressure.col(i)), p_hom).values();
  ops.P = project(b.velocity, w2, grad);

  Eigen::MatrixXd div(mesh->n_cells(), na);
  for (int j = 0; j < na; ++j) div.col(j) = divergence(aug[j].field, aug[j].bc).values();
  ops.R = project(b.pressure, w1, div);

  ops.XiMean = project(b.eddy, w1, Eigen::MatrixXd::Ones(mesh->n_cells(), 1)) / w1.sum();
}

void assemble_thermal_operators(const BasisSet& b, ReducedOperators& ops) {
  check_bases(b);
  const MeshPtr& mesh = b.mesh;
  const Eigen::VectorXd w1 = dof_weights(*mesh, 1);
  const auto vel = augment(mesh, b.velocity_lifts, b.velocity, b.u_bc, 2);
  const auto aug = augment(mesh, b.temperature_lifts, b.temperature, b.theta_bc, 1);
  const int nl = static_cast<int>(b.temperature_lifts.size());
  const int nt = b.n_t();
  const int ma = nl + nt;
  const int na = static_cast<int>(vel.size());
  const int nnu = b.n_nu();
  const Eigen::Index n = mesh->n_cells();

  ops.n_lift_t = nl;
  ops.n_t = nt;
  ops.n_nu = nnu;

  ops.K = project(b.temperature, w1, b.temperature);

  Eigen::MatrixXd lap(n, ma);
  for (int j = 0; j < ma; ++j) lap.col(j) = laplacian(aug[j].field, aug[j].bc).values();
  ops.N = project(b.temperature, w1, lap);

  ops.G.assign(nt, Eigen::MatrixXd::Zero(na, ma));
  Eigen::MatrixXd conv(n, ma);
  for (int i = 0; i < na; ++i) {
    for (int j = 0; j < ma; ++j)
      conv.col(j) = convective_term(vel[i].field, vel[i].bc, aug[j].field, aug[j].bc).values();
    const Eigen::MatrixXd proj = project(b.temperature, w1, conv);
    for (int k = 0; k < nt; ++k) ops.G[k].row(i) = proj.row(k);
  }

  ops.NT.assign(nnu, Eigen::MatrixXd());
  for (int i = 0; i < nnu; ++i) {
    const Eigen::VectorXd xi = b.eddy.col(i);
    ops.NT[i] = project(b.temperature, w1, xi.asDiagonal() * lap);
  }
}

ReducedOperators assemble_operators(const BasisSet& bases) {
  ReducedOperators ops;
  assemble_velocity_operators(bases, ops);
  if (bases.n_t() > 0 || !bases.temperature_lifts.empty()) assemble_thermal_operators(bases, ops);
  return ops;
}

Eigen::MatrixXd supremizer_enrichment(const MeshPtr& mesh, const Eigen::MatrixXd& pressure_modes,
                                      const Eigen::MatrixXd& velocity_modes, const BoundaryConditions& u_bc,
                                      const BoundaryConditions& p_bc) {
  const int n = mesh->n_cells();
  if (pressure_modes.rows() != n) throw DimensionError("supremizer_enrichment: pressure modes have the wrong size");
  if (velocity_modes.cols() > 0 && velocity_modes.rows() != 2 * n)
    throw DimensionError("supremizer_enrichment: velocity modes have the wrong size");
  const BoundaryConditions u_hom = u_bc.homogeneous();
  const BoundaryConditions p_hom = p_bc.homogeneous();
  const Eigen::VectorXd w = dof_weights(*mesh, 2);

  SparseMatrix identity(n, n);
  identity.setIdentity();
  std::array<Eigen::SparseLU<SparseMatrix>, 2> lu;
  for (int k = 0; k < 2; ++k) {
    SparseMatrix a = identity - laplacian_operator(*mesh, u_hom, k).matrix;
    a.makeCompressed();
    lu[k].compute(a);
    if (lu[k].info() != Eigen::Success)
      throw EnrichmentError("supremizer_enrichment: factorization failed", 0);
  }

  Eigen::MatrixXd out(2 * n, pressure_modes.cols());
  int kept = 0;
  for (Eigen::Index i = 0; i < pressure_modes.cols(); ++i) {
    const Field rhs = -1.0 * gradient(Field(mesh, 1, pressure_modes.col(i)), p_hom);
    Eigen::VectorXd s(2 * n);
    for (int k = 0; k < 2; ++k) {
      const Eigen::VectorXd comp = rhs.component(k).values();
      const Eigen::VectorXd x = lu[k].solve(comp);
      if (lu[k].info() != Eigen::Success || !x.allFinite())
        throw EnrichmentError("supremizer_enrichment: solve failed for pressure mode " + std::to_string(i),
                              static_cast<int>(i));
      for (int c = 0; c < n; ++c) s[2 * c + k] = x[c];
    }
    const double before = std::sqrt(s.dot(w.asDiagonal() * s));
    if (!(before > 0.0)) continue;
    for (int pass = 0; pass < 2; ++pass) {
      for (Eigen::Index j = 0; j < velocity_modes.cols(); ++j)
        s -= velocity_modes.col(j).dot(w.asDiagonal() * s) * velocity_modes.col(j);
      for (int j = 0; j < kept; ++j) s -= out.col(j).dot(w.asDiagonal() * s) * out.col(j);
    }
    const double after = std::sqrt(s.dot(w.asDiagonal() * s));
    if (!(after > 1e-10 * before)) continue;
    out.col(kept++) = s / after;
  }
  return out.leftCols(kept);
}

Eigen::MatrixXd project_snapshots(const Eigen::MatrixXd& snapshots, const Eigen::MatrixXd& modes,
                                  const Eigen::VectorXd& weights) {
  if (snapshots.rows() != modes.rows() || weights.size() != modes.rows())
    throw DimensionError("project_snapshots: size mismatch");
  return project(modes, weights, snapshots);
}

namespace {

constexpr char kMagic[4] = {'R', 'O', 'M', 'B'};
constexpr std::uint32_t kVersion = 1;

std::vector<std::pair<std::string, const Eigen::MatrixXd*>> listing(const ReducedOperators& ops) {
  std::vector<std::pair<std::string, const Eigen::MatrixXd*>> out{{"M", &ops.M}, {"B", &ops.B}, {"BT", &ops.BT},
                                                                  {"P", &ops.P}, {"R", &ops.R}, {"K", &ops.K},
                                                                  {"N", &ops.N}, {"XiMean", &ops.XiMean}};
  auto add = [&](const char* name, const std::vector<Eigen::MatrixXd>& v) {
    for (std::size_t i = 0; i < v.size(); ++i) out.emplace_back(std::string(name) + "[" + std::to_string(i) + "]", &v[i]);
  };
  add("Q", ops.Q);
  add("QT1", ops.QT1);
  add("QT2", ops.QT2);
  add("G", ops.G);
  add("NT", ops.NT);
  return out;
}

}  // namespace

void write_operators(const std::filesystem::path& dir, const ReducedOperators& ops) {
  std::filesystem::create_directories(dir);
  std::ofstream bin(dir / "operators.rombin", std::ios::binary);
  if (!bin) throw DataError("cannot write " + (dir / "operators.rombin").string());
  bin.write(kMagic, 4);
  write_u32(bin, kVersion);
  for (int v : {ops.n_lift_u, ops.n_u, ops.n_sup, ops.n_p, ops.n_lift_t, ops.n_t, ops.n_nu,
                static_cast<int>(ops.Q.size()), static_cast<int>(ops.QT1.size()), static_cast<int>(ops.QT2.size()),
                static_cast<int>(ops.G.size()), static_cast<int>(ops.NT.size())})
    write_u32(bin, static_cast<std::uint32_t>(v));
  std::ofstream txt(dir / "operators.txt");
  txt << "format ROMB " << kVersion << "\n"
      << "n_lift_u " << ops.n_lift_u << "\nn_u " << ops.n_u << "\nn_sup " << ops.n_sup << "\nn_p " << ops.n_p
      << "\nn_lift_t " << ops.n_lift_t << "\nn_t " << ops.n_t << "\nn_nu " << ops.n_nu << "\n";
  for (const auto& [name, m] : listing(ops)) {
    write_u32(bin, static_cast<std::uint32_t>(m->rows()));
    write_u32(bin, static_cast<std::uint32_t>(m->cols()));
    write_f64_array(bin, m->data(), static_cast<std::size_t>(m->size()));
    txt << name << " " << m->rows() << " " << m->cols() << "\n";
  }
  if (!bin || !txt) throw DataError("failed writing operators to " + dir.string());
}

ReducedOperators read_operators(const std::filesystem::path& dir) {
  std::ifstream bin(dir / "operators.rombin", std::ios::binary);
  if (!bin) throw DataError("cannot read " + (dir / "operators.rombin").string());
  char magic[4];
  bin.read(magic, 4);
  if (!bin || std::string(magic, 4) != "ROMB") throw DataError("operators.rombin: bad magic");
  if (read_u32(bin) != kVersion) throw DataError("operators.rombin: unsupported version");
  ReducedOperators ops;
  int* dims[] = {&ops.n_lift_u, &ops.n_u, &ops.n_sup, &ops.n_p, &ops.n_lift_t, &ops.n_t, &ops.n_nu};
  for (int* d : dims) *d = static_cast<int>(read_u32(bin));
  ops.Q.resize(read_u32(bin));
  ops.QT1.resize(read_u32(bin));
  ops.QT2.resize(read_u32(bin));
  ops.G.resize(read_u32(bin));
  ops.NT.resize(read_u32(bin));
  for (auto& [name, cm] : listing(ops)) {
    auto* m = const_cast<Eigen::MatrixXd*>(cm);
    const auto rows = read_u32(bin);
    const auto cols = read_u32(bin);
    if (!bin) throw DataError("operators.rombin: truncated before " + name);
    if (static_cast<std::uint64_t>(rows) * cols > (1ull << 32)) throw DataError("operators.rombin: bad shape for " + name);
    m->resize(rows, cols);
    read_f64_array(bin, m->data(), static_cast<std::size_t>(m->size()));
    if (!bin) throw DataError("operators.rombin: truncated in " + name);
  }
  if (static_cast<int>(ops.Q.size()) != ops.n_u || ops.M.rows() != ops.n_u)
    throw DataError("operators.rombin: inconsistent dimensions");
  return ops;
}

}  // namespace romkit
