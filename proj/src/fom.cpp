#include "romkit/fom.hpp"

#include <Eigen/SparseLU>
#include <cmath>

#include "romkit/core/sparse_operators.hpp"
#include "romkit/errors.hpp"

namespace romkit {

void FOMConfig::validate() const {
  if (!(nu > 0.0)) throw ConfigError("nu must be positive");
  if (!(alpha > 0.0)) throw ConfigError("alpha must be positive");
  if (!(prandtl_t > 0.0)) throw ConfigError("turbulent Prandtl number must be positive");
  if (!(smagorinsky >= 0.0)) throw ConfigError("Smagorinsky constant must be nonnegative");
  if (!(dt > 0.0)) throw ConfigError("dt must be positive");
  if (!(t_final >= dt)) throw ConfigError("final time must be at least dt");
  if (snapshot_every <= 0) throw ConfigError("snapshot cadence must be positive");
}

int FOMConfig::n_steps() const { return static_cast<int>(std::lround(t_final / dt)); }

BoundaryConditions tee_velocity_bc(const Mesh& mesh, double u_main, double u_branch) {
  return BoundaryConditions(mesh, {{"main_inlet", BcKind::Dirichlet, {u_main, 0.0}},
                                   {"branch_inlet", BcKind::Dirichlet, {0.0, -u_branch}},
                                   {"wall", BcKind::Dirichlet, {0.0, 0.0}},
                                   {"outlet", BcKind::Outlet, {0.0, 0.0}}});
}

BoundaryConditions tee_pressure_bc(const Mesh& mesh) {
  return BoundaryConditions(mesh, {{"main_inlet", BcKind::NeumannZero, {0.0, 0.0}},
                                   {"branch_inlet", BcKind::NeumannZero, {0.0, 0.0}},
                                   {"wall", BcKind::NeumannZero, {0.0, 0.0}},
                                   {"outlet", BcKind::Dirichlet, {0.0, 0.0}}});
}

BoundaryConditions tee_temperature_bc(const Mesh& mesh, double theta_main, double theta_branch) {
  return BoundaryConditions(mesh, {{"main_inlet", BcKind::Dirichlet, {theta_main, 0.0}},
                                   {"branch_inlet", BcKind::Dirichlet, {theta_branch, 0.0}},
                                   {"wall", BcKind::NeumannZero, {0.0, 0.0}},
                                   {"outlet", BcKind::Outlet, {0.0, 0.0}}});
}

std::vector<LiftingFunction> tee_velocity_lifts(const MeshPtr& mesh) {
  const auto bc = tee_velocity_bc(*mesh, 0.0, 0.0);
  return {compute_control_function(mesh, bc, "main_inlet", {1.0, 0.0}, 2),
          compute_control_function(mesh, bc, "branch_inlet", {0.0, -1.0}, 2)};
}

std::vector<LiftingFunction> tee_temperature_lifts(const MeshPtr& mesh) {
  const auto bc = tee_temperature_bc(*mesh, 0.0, 0.0);
  return {compute_control_function(mesh, bc, "main_inlet", {1.0, 0.0}, 1),
          compute_control_function(mesh, bc, "branch_inlet", {1.0, 0.0}, 1)};
}

FlowProblem tee_problem(const FOMConfig& config, const Parameter& mu) {
  if (mu.size() != 2) throw ConfigError("tee problem expects mu = (U_m, U_b)");
  FlowProblem problem;
  problem.mesh = std::make_shared<const Mesh>(tee_spec(config.geometry));
  problem.u_bc = tee_velocity_bc(*problem.mesh, mu[0], mu[1]);
  problem.p_bc = tee_pressure_bc(*problem.mesh);
  problem.theta_bc = tee_temperature_bc(*problem.mesh, config.theta_main, config.theta_branch);
  problem.u0 = solenoidal_projection(reapply(Field(problem.mesh, 2), tee_velocity_lifts(problem.mesh), {mu[0], mu[1]}),
                                     problem.u_bc, problem.p_bc);
  problem.theta0 =
      reapply(Field(problem.mesh, 1), tee_temperature_lifts(problem.mesh), {config.theta_main, config.theta_branch});
  return problem;
}

FlowProblem cavity_problem(int n, double lid) {
  FlowProblem problem;
  problem.mesh = std::make_shared<const Mesh>(cavity_spec(n));
  problem.u_bc = BoundaryConditions(*problem.mesh, {{"lid", BcKind::Dirichlet, {lid, 0.0}},
                                                    {"wall", BcKind::Dirichlet, {0.0, 0.0}}});
  problem.p_bc = BoundaryConditions::uniform(*problem.mesh, BcKind::NeumannZero);
  problem.u0 = Field(problem.mesh, 2);
  return problem;
}

Field eddy_viscosity_model(const Field& u, const BoundaryConditions& u_bc, double smagorinsky) {
  const Mesh& mesh = u.mesh();
  const double h = std::sqrt(mesh.dx() * mesh.dy());
  const double scale = (smagorinsky * h) * (smagorinsky * h);
  const auto grad = velocity_gradient(u, u_bc);
  Field nut(u.mesh_ptr(), 1);
  for (int c = 0; c < mesh.n_cells(); ++c) {
    const Eigen::Matrix2d s = 0.5 * (grad[c] + grad[c].transpose());
    nut(c) = scale * std::sqrt(2.0 * s.squaredNorm());
  }
  return nut;
}

Field turbulent_diffusivity(const Field& nut, double prandtl_t) {
  if (!(prandtl_t > 0.0)) throw ConfigError("turbulent Prandtl number must be positive");
  Field out = nut;
  out.values() /= prandtl_t;
  return out;
}

namespace {

// D G, with the first row replaced by the identity when the pressure is only
// defined up to a constant.
SparseMatrix pressure_matrix(const AffineOperator& div, const AffineOperator& grad, bool pinned) {
  SparseMatrix poisson = div.matrix * grad.matrix;
  if (pinned) {
    poisson = poisson.transpose();
    poisson.prune([](Eigen::Index, Eigen::Index col, double) { return col != 0; });
    poisson = poisson.transpose();
    poisson.coeffRef(0, 0) = 1.0;
  }
  poisson.makeCompressed();
  return poisson;
}

}  // namespace

Field solenoidal_projection(const Field& u, const BoundaryConditions& u_bc, const BoundaryConditions& p_bc) {
  const Mesh& mesh = u.mesh();
  const AffineOperator div = divergence_operator(mesh, u_bc);
  const AffineOperator grad = gradient_operator(mesh, p_bc.homogeneous());
  const bool pinned = !p_bc.has_dirichlet();
  Eigen::SparseLU<SparseMatrix> lu(pressure_matrix(div, grad, pinned));
  if (lu.info() != Eigen::Success) throw SolverError("pressure operator factorization failed", 0);
  Eigen::VectorXd source = div.apply(u.values());
  if (pinned) source[0] = 0.0;
  Field out = u;
  out.values() -= grad.matrix * lu.solve(source);
  return out;
}

struct FlowSolver::Impl {
  AffineOperator lap_u[2];
  AffineOperator div;
  AffineOperator grad;
  AffineOperator lap_theta;
  Eigen::SparseLU<SparseMatrix> momentum;
  Eigen::SparseLU<SparseMatrix> pressure;
  Eigen::SparseLU<SparseMatrix> thermal;
  bool pinned = false;
  Field ones;
};

FlowSolver::FlowSolver(FlowProblem problem, const FOMConfig& config)
    : problem_(std::move(problem)), config_(config), impl_(std::make_unique<Impl>()) {
  config_.validate();
  const Mesh& mesh = *problem_.mesh;
  const int n = mesh.n_cells();
  auto& im = *impl_;
  for (int k = 0; k < 2; ++k) im.lap_u[k] = laplacian_operator(mesh, problem_.u_bc, k);
  im.div = divergence_operator(mesh, problem_.u_bc);
  im.grad = gradient_operator(mesh, problem_.p_bc);
  im.ones = Field::constant(problem_.mesh, 1.0);

  SparseMatrix identity(n, n);
  identity.setIdentity();
  SparseMatrix a = identity / config_.dt - config_.nu * im.lap_u[0].matrix;
  im.momentum.compute(a);
  if (im.momentum.info() != Eigen::Success) throw SolverError("momentum operator factorization failed", 0);

  im.pinned = !problem_.p_bc.has_dirichlet();
  im.pressure.compute(pressure_matrix(im.div, im.grad, im.pinned));
  if (im.pressure.info() != Eigen::Success) throw SolverError("pressure operator factorization failed", 0);

  u_ = problem_.u0;
  p_ = Field(problem_.mesh, 1);
  nut_ = config_.eddy_viscosity ? eddy_viscosity_model(u_, problem_.u_bc, config_.smagorinsky) : Field(problem_.mesh, 1);
  if (problem_.has_temperature()) {
    theta_ = problem_.theta0;
    im.lap_theta = laplacian_operator(mesh, problem_.theta_bc, 0);
  }
  double bc_scale = 0.0;
  for (const auto& bc : problem_.u_bc.all()) bc_scale = std::max({bc_scale, std::abs(bc.value[0]), std::abs(bc.value[1])});
  reference_norm_ = std::max(l2_norm(u_), bc_scale * std::sqrt(mesh.total_volume()));
}

FlowSolver::~FlowSolver() = default;

double FlowSolver::divergence_norm() const {
  return impl_->div.apply(u_.values()).cwiseAbs().maxCoeff();
}

void FlowSolver::step() {
  auto& im = *impl_;
  const auto& mesh_ptr = problem_.mesh;
  const int n = mesh_ptr->n_cells();
  const double dt = config_.dt;
  const double nu = config_.nu;
  const auto& ubc = problem_.u_bc;

  Field rhs = (1.0 / dt) * u_;
  rhs -= convective_term(u_, ubc, u_, ubc, config_.momentum_scheme);
  rhs += nu * transpose_stress_divergence(im.ones, u_, ubc);
  if (config_.eddy_viscosity) {
    rhs += scaled_laplacian(nut_, u_, ubc);
    rhs += transpose_stress_divergence(nut_, u_, ubc);
  }
  rhs -= gradient(p_, problem_.p_bc);

  Field star(mesh_ptr, 2);
  for (int k = 0; k < 2; ++k) {
    Eigen::VectorXd b = rhs.component(k).values() + nu * im.lap_u[k].offset;
    star.set_component(k, Field(mesh_ptr, 1, im.momentum.solve(b)));
  }

  Eigen::VectorXd source = im.div.apply(star.values()) / dt;
  if (im.pinned) source[0] = 0.0;
  const Eigen::VectorXd dp = im.pressure.solve(source);
  u_ = star;
  u_.values() -= dt * (im.grad.matrix * dp);
  p_.values() += dp;
  ++step_;

  if (!u_.all_finite() || l2_norm(u_) > 1e6 * std::max(reference_norm_, 1e-300))
    throw SolverError("velocity diverged at step " + std::to_string(step_), step_);

  if (config_.eddy_viscosity) nut_ = eddy_viscosity_model(u_, ubc, config_.smagorinsky);

  if (problem_.has_temperature()) {
    const AffineOperator conv = scalar_convection_operator(u_, ubc, problem_.theta_bc, config_.thermal_scheme);
    Eigen::VectorXd kappa = Eigen::VectorXd::Constant(n, config_.alpha);
    if (config_.eddy_viscosity) kappa += nut_.values() / config_.prandtl_t;
    SparseMatrix identity(n, n);
    identity.setIdentity();
    SparseMatrix a = identity / dt + conv.matrix - kappa.asDiagonal() * im.lap_theta.matrix;
    a.makeCompressed();
    im.thermal.compute(a);
    if (im.thermal.info() != Eigen::Success)
      throw SolverError("temperature operator factorization failed at step " + std::to_string(step_), step_);
    const Eigen::VectorXd b =
        theta_.values() / dt - conv.offset + kappa.cwiseProduct(im.lap_theta.offset);
    theta_.values() = im.thermal.solve(b);
    if (!theta_.all_finite()) throw SolverError("temperature diverged at step " + std::to_string(step_), step_);
  }
}

std::vector<SnapshotRecord> run_fom(const FOMConfig& config, const Parameter& mu, const StepObserver& observer) {
  config.validate();
  FlowSolver solver(tee_problem(config, mu), config);
  std::vector<SnapshotRecord> records;
  const int steps = config.n_steps();
  for (int s = 1; s <= steps; ++s) {
    solver.step();
    if (observer) observer(solver);
    if (s % config.snapshot_every == 0)
      records.push_back({mu, solver.time(), solver.velocity(), solver.pressure(), solver.temperature(),
                         solver.eddy_viscosity()});
  }
  return records;
}

SnapshotSet collect_snapshots(const std::vector<std::vector<SnapshotRecord>>& runs, const std::string& kind) {
  if (runs.empty() || runs.front().empty()) throw DataError("collect_snapshots: no records");
  auto pick = [&](const SnapshotRecord& r) -> const Field& {
    if (kind == "U") return r.u;
    if (kind == "p") return r.p;
    if (kind == "T") return r.theta;
    if (kind == "nut") return r.nut;
    throw ConfigError("unknown snapshot kind '" + kind + "'");
  };
  const Field& first = pick(runs.front().front());
  SnapshotSet set;
  set.kind = kind;
  set.mesh = first.mesh_ptr();
  set.components = first.components();
  for (const auto& r : runs.front()) set.times.push_back(r.t);
  const int nt = static_cast<int>(set.times.size());
  set.matrix.resize(first.size(), static_cast<Eigen::Index>(runs.size()) * nt);
  for (size_t k = 0; k < runs.size(); ++k) {
    if (static_cast<int>(runs[k].size()) != nt) throw DimensionError("collect_snapshots: runs differ in length");
    set.mu.push_back(runs[k].front().mu);
    for (int j = 0; j < nt; ++j) {
      if (std::abs(runs[k][j].t - set.times[j]) > 1e-12) throw DataError("collect_snapshots: time grids differ");
      set.matrix.col(set.column(static_cast<int>(k), j)) = pick(runs[k][j]).values();
    }
  }
  set.validate();
  return set;
}

ManufacturedData manufactured_snapshots(const MeshPtr& mesh, const std::vector<Parameter>& mu,
                                        const std::vector<double>& times, int mode_count, int components,
                                        bool time_constant) {
  if (mode_count <= 0) throw ConfigError("manufactured_snapshots: mode_count must be positive");
  if (mode_count > static_cast<int>(mu.size() * times.size()))
    throw ConfigError("manufactured_snapshots: more modes than snapshots");
  const double lx = mesh->nx() * mesh->dx();
  const double ly = mesh->ny() * mesh->dy();
  const int n = mesh->n_cells();
  Eigen::MatrixXd shapes(n * components, mode_count);
  for (int i = 0; i < mode_count; ++i) {
    for (int c = 0; c < n; ++c) {
      const auto p = mesh->cell_centre(c);
      const double x = p.x / lx, y = p.y / ly;
      for (int k = 0; k < components; ++k)
        shapes(c * components + k, i) =
            std::sin((i + 1 + k) * M_PI * x + 0.3 * k) * std::cos((i / 2 + k) * M_PI * y) + 0.1 * (i == 0);
    }
  }
  orthonormalize(shapes, dof_weights(*mesh, components));

  const int nt = static_cast<int>(times.size());
  Eigen::MatrixXd coeffs(mode_count, static_cast<Eigen::Index>(mu.size()) * nt);
  for (size_t k = 0; k < mu.size(); ++k) {
    double msum = 0.0;
    for (double v : mu[k]) msum += v;
    for (int j = 0; j < nt; ++j)
      for (int i = 0; i < mode_count; ++i) {
        const double g = time_constant ? 1.0 : std::cos(i * times[j] + 0.3) + 1.5 * (i == 0);
        coeffs(i, static_cast<Eigen::Index>(k) * nt + j) = std::pow(0.5, i) * (1.0 + 0.25 * (i + 1) * msum) * g;
      }
  }
  ManufacturedData out;
  out.shapes = shapes;
  out.snapshots.kind = "manufactured";
  out.snapshots.mesh = mesh;
  out.snapshots.components = components;
  out.snapshots.mu = mu;
  out.snapshots.times = times;
  out.snapshots.matrix = shapes * coeffs;
  return out;
}

}  // namespace romkit
