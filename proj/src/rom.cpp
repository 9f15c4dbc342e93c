#include "romkit/rom.hpp"

#include <Eigen/LU>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include "romkit/errors.hpp"

namespace romkit {

void OnlineConfig::validate() const {
  if (!(nu > 0.0)) throw ConfigError("online: nu must be positive");
  if (!(alpha > 0.0)) throw ConfigError("online: alpha must be positive");
  if (!(prandtl_t > 0.0)) throw ConfigError("online: prandtl_t must be positive");
  if (!(dt > 0.0)) throw ConfigError("online: dt must be positive");
  if (!(t_final >= dt)) throw ConfigError("online: t_final must be at least one step");
  if (save_every < 1) throw ConfigError("online: save_every must be at least 1");
  if (!(newton_tol > 0.0) || max_newton < 1) throw ConfigError("online: invalid Newton settings");
}

int OnlineConfig::n_steps() const { return static_cast<int>(std::lround(t_final / dt)); }

std::vector<double> ReducedTrajectory::times() const {
  std::vector<double> out;
  out.reserve(states.size());
  for (const auto& s : states) out.push_back(s.t);
  return out;
}

namespace {

Eigen::VectorXd lift_part(const Parameter& values, int n, const char* what) {
  if (static_cast<int>(values.size()) < n)
    throw DimensionError(std::string(what) + ": expected at least " + std::to_string(n) + " lift values");
  Eigen::VectorXd out(n);
  for (int i = 0; i < n; ++i) out[i] = values[i];
  return out;
}

Eigen::VectorXd concat(const Eigen::VectorXd& head, const Eigen::VectorXd& tail) {
  Eigen::VectorXd out(head.size() + tail.size());
  out << head, tail;
  return out;
}

Field combine(const MeshPtr& mesh, int components, const std::vector<LiftingFunction>& lifts,
              const Eigen::VectorXd& lift_values, const Eigen::MatrixXd& modes, const Eigen::VectorXd& coeffs) {
  Eigen::VectorXd v = Eigen::VectorXd::Zero(mesh->n_cells() * components);
  for (std::size_t i = 0; i < lifts.size(); ++i) v += lift_values[static_cast<Eigen::Index>(i)] * lifts[i].field.values();
  if (modes.cols() > 0) v += modes * coeffs;
  return Field(mesh, components, std::move(v));
}

Eigen::VectorXd project_onto(const Eigen::MatrixXd& modes, const Eigen::VectorXd& w, const Eigen::VectorXd& x) {
  if (modes.cols() == 0) return Eigen::VectorXd(0);
  return modes.transpose() * (w.asDiagonal() * x);
}

Eigen::VectorXd interpolate(const RBFInterpolant& rbf, int n_out, const Parameter& mu, double t, bool* outside) {
  if (outside) *outside = false;
  if (n_out == 0) return Eigen::VectorXd(0);
  if (rbf.n_outputs() != n_out) throw DimensionError("interpolant output count does not match the eddy viscosity basis");
  Eigen::VectorXd x(mu.size() + 1);
  for (std::size_t i = 0; i < mu.size(); ++i) x[static_cast<Eigen::Index>(i)] = mu[i];
  x[x.size() - 1] = t;
  if (x.size() != rbf.centers.rows()) throw DimensionError("interpolant dimension does not match (mu, t)");
  return rbf.evaluate(x, outside);
}

}  // namespace

ReducedState initial_conditions(const BasisSet& bases, const RBFInterpolant& rbf, const Parameter& mu,
                                const Field& u0, const Field& p0, const Field& theta0,
                                const std::vector<double>& temperature_lift_values) {
  const MeshPtr& mesh = bases.mesh;
  for (const Field* f : {&u0, &p0, &theta0})
    if (f->mesh_ptr() && !f->mesh().same_as(*mesh)) throw DimensionError("initial_conditions: field on another mesh");
  if (u0.components() != 2 || !p0.is_scalar()) throw DimensionError("initial_conditions: wrong field components");
  ReducedState s;
  const int nlu = static_cast<int>(bases.velocity_lifts.size());
  const int nlt = static_cast<int>(bases.temperature_lifts.size());
  const Eigen::VectorXd w1 = dof_weights(*mesh, 1);
  const Eigen::VectorXd w2 = dof_weights(*mesh, 2);
  const Field u_lift = combine(mesh, 2, bases.velocity_lifts, lift_part(mu, nlu, "initial_conditions"),
                               Eigen::MatrixXd(), Eigen::VectorXd());
  s.a = project_onto(bases.velocity, w2, u0.values() - u_lift.values());
  s.b = project_onto(bases.pressure, w1, p0.values());
  if (bases.n_t() > 0 || nlt > 0) {
    if (!theta0.mesh_ptr()) throw DimensionError("initial_conditions: temperature basis without an initial temperature");
    const Field t_lift = combine(mesh, 1, bases.temperature_lifts,
                                 lift_part(temperature_lift_values, nlt, "initial_conditions"), Eigen::MatrixXd(),
                                 Eigen::VectorXd());
    s.c = project_onto(bases.temperature, w1, theta0.values() - t_lift.values());
  } else {
    s.c = Eigen::VectorXd(0);
  }
  s.l = interpolate(rbf, bases.n_nu(), mu, 0.0, nullptr);
  s.t = 0.0;
  return s;
}

ReducedModel::ReducedModel(ReducedOperators ops, RBFInterpolant rbf, OnlineConfig config)
    : ops_(std::move(ops)), rbf_(std::move(rbf)), config_(std::move(config)) {
  config_.validate();
  if (ops_.M.rows() != ops_.n_u || ops_.B.cols() != ops_.n_aug_u() || static_cast<int>(ops_.Q.size()) != ops_.n_u)
    throw DimensionError("ReducedModel: inconsistent velocity operators");
  if (ops_.P.cols() != ops_.n_p || ops_.R.rows() != ops_.n_p)
    throw DimensionError("ReducedModel: inconsistent pressure operators");
  if (static_cast<int>(ops_.QT1.size()) != ops_.n_nu || static_cast<int>(ops_.QT2.size()) != ops_.n_nu)
    throw DimensionError("ReducedModel: inconsistent eddy viscosity operators");
  if (ops_.n_aug_t() > 0 && (static_cast<int>(ops_.G.size()) != ops_.n_t || ops_.N.cols() != ops_.n_aug_t()))
    throw DimensionError("ReducedModel: inconsistent thermal operators");
  if (ops_.n_aug_t() > 0 && static_cast<int>(config_.temperature_lift_values.size()) < ops_.n_lift_t)
    throw ConfigError("ReducedModel: missing temperature lift values");
  viscous_ = config_.nu * (ops_.B + ops_.BT);
}

Eigen::VectorXd ReducedModel::eddy_coefficients(const Parameter& mu, double t, bool* outside) const {
  return interpolate(rbf_, ops_.n_nu, mu, t, outside);
}

Eigen::VectorXd ReducedModel::momentum_residual(const Eigen::VectorXd& a_hat, const Eigen::VectorXd& b,
                                                const Eigen::VectorXd& a_old, const Eigen::MatrixXd& linear,
                                                double dt) const {
  const int nu = ops_.n_u;
  Eigen::VectorXd f = ops_.M * (a_hat.tail(nu) - a_old) / dt - linear * a_hat;
  for (int k = 0; k < nu; ++k) f[k] += a_hat.dot(ops_.Q[k] * a_hat);
  if (ops_.n_p > 0) f += ops_.P * b;
  return f;
}

ReducedState ReducedModel::step(const ReducedState& state, const Parameter& mu, double dt) const {
  const int nl = ops_.n_lift_u;
  const int nu = ops_.n_u;
  const int np = ops_.n_p;
  if (state.a.size() != nu || state.b.size() != np) throw DimensionError("step: state does not match the operators");
  const Eigen::VectorXd lift = lift_part(mu, nl, "step");

  ReducedState next;
  next.t = state.t + dt;
  next.l = eddy_coefficients(mu, next.t);

  Eigen::MatrixXd linear = viscous_;
  for (int i = 0; i < ops_.n_nu; ++i) linear += next.l[i] * (ops_.QT1[i] + ops_.QT2[i]);

  Eigen::VectorXd a_hat = concat(lift, state.a);
  Eigen::VectorXd b = state.b;
  std::vector<double> history;
  const int n = nu + np;
  Eigen::MatrixXd jac = Eigen::MatrixXd::Zero(n, n);
  Eigen::VectorXd f(n);
  int it = 0;
  for (;; ++it) {
    f.head(nu) = momentum_residual(a_hat, b, state.a, linear, dt);
    if (np > 0) f.tail(np) = ops_.R * a_hat;
    const double norm = f.norm();
    history.push_back(norm);
    if (!std::isfinite(norm)) throw StepError("online step at t = " + std::to_string(next.t) + ": residual is not finite", history);
    if (norm <= config_.newton_tol) break;
    if (it >= config_.max_newton) {
      std::ostringstream msg;
      msg << "online step at t = " << next.t << ": Newton did not converge in " << config_.max_newton
          << " iterations (residual " << norm << ")";
      throw StepError(msg.str(), history);
    }
    jac.topLeftCorner(nu, nu) = ops_.M / dt - linear.rightCols(nu);
    for (int k = 0; k < nu; ++k)
      jac.row(k).head(nu) += ((ops_.Q[k] + ops_.Q[k].transpose()) * a_hat).tail(nu).transpose();
    if (np > 0) {
      jac.topRightCorner(nu, np) = ops_.P;
      jac.bottomLeftCorner(np, nu) = ops_.R.rightCols(nu);
    }
    const Eigen::VectorXd delta = jac.partialPivLu().solve(-f);
    a_hat.tail(nu) += delta.head(nu);
    if (np > 0) b += delta.tail(np);
  }
  next.a = a_hat.tail(nu);
  next.b = b;
  next.newton_iterations = it;

  const int nt = ops_.n_t;
  if (nt > 0) {
    const int mlt = ops_.n_lift_t;
    Eigen::MatrixXd op(nt, ops_.n_aug_t());
    for (int k = 0; k < nt; ++k) op.row(k) = a_hat.transpose() * ops_.G[k];
    if (config_.scalar_thermal_diffusivity) {
      const double mean_nut = ops_.n_nu > 0 ? ops_.XiMean.col(0).dot(next.l) : 0.0;
      op -= (config_.alpha + mean_nut / config_.prandtl_t) * ops_.N;
    } else {
      op -= config_.alpha * ops_.N;
      for (int i = 0; i < ops_.n_nu; ++i) op -= (next.l[i] / config_.prandtl_t) * ops_.NT[i];
    }
    Eigen::VectorXd theta_lift(mlt);
    for (int i = 0; i < mlt; ++i) theta_lift[i] = config_.temperature_lift_values[static_cast<std::size_t>(i)];
    const Eigen::MatrixXd a_mat = ops_.K / dt + op.rightCols(nt);
    const Eigen::VectorXd rhs = ops_.K * state.c / dt - op.leftCols(mlt) * theta_lift;
    next.c = a_mat.partialPivLu().solve(rhs);
    if (!next.c.allFinite()) throw StepError("online step at t = " + std::to_string(next.t) + ": temperature is not finite", history);
  } else {
    next.c = Eigen::VectorXd(0);
  }
  return next;
}

ReducedTrajectory ReducedModel::solve(const Parameter& mu, const ReducedState& initial, ReducedTrajectory* partial) const {
  using clock = std::chrono::steady_clock;
  ReducedTrajectory traj;
  traj.mu = mu;
  traj.initial = initial;
  const int steps = config_.n_steps();
  traj.step_seconds.reserve(static_cast<std::size_t>(steps));
  const Eigen::VectorXd lift = lift_part(mu, ops_.n_lift_u, "solve");
  if (ops_.n_nu > 0) {
    const Normalization& box = rbf_.normalization;
    const Eigen::Index d = box.lower.size() - 1;
    for (Eigen::Index i = 0; i < d && i < static_cast<Eigen::Index>(mu.size()); ++i) {
      const double slack = 1e-12 * std::max(1.0, box.upper[i] - box.lower[i]);
      if (mu[static_cast<std::size_t>(i)] < box.lower[i] - slack || mu[static_cast<std::size_t>(i)] > box.upper[i] + slack)
        traj.extrapolated = true;
    }
    const double slack = 1e-12 * std::max(1.0, box.upper[d] - box.lower[d]);
    traj.time_extrapolated = initial.t < box.lower[d] - slack || initial.t + steps * config_.dt > box.upper[d] + slack;
  }
  const auto start = clock::now();
  ReducedState state = initial;
  try {
    for (int s = 1; s <= steps; ++s) {
      const auto t0 = clock::now();
      state = step(state, mu, config_.dt);
      state.t = initial.t + s * config_.dt;
      traj.step_seconds.push_back(std::chrono::duration<double>(clock::now() - t0).count());
      if (ops_.n_p > 0)
        traj.max_constraint_residual =
            std::max(traj.max_constraint_residual, (ops_.R * concat(lift, state.a)).cwiseAbs().maxCoeff());
      if (s % config_.save_every == 0) traj.states.push_back(state);
    }
  } catch (const StepError&) {
    traj.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
    if (partial) *partial = traj;
    throw;
  }
  traj.wall_seconds = std::chrono::duration<double>(clock::now() - start).count();
  return traj;
}

ReconstructedFields reconstruct(const ReducedState& state, const BasisSet& bases, const Parameter& mu,
                                const std::vector<double>& temperature_lift_values) {
  const MeshPtr& mesh = bases.mesh;
  ReconstructedFields out;
  out.t = state.t;
  out.u = combine(mesh, 2, bases.velocity_lifts,
                  lift_part(mu, static_cast<int>(bases.velocity_lifts.size()), "reconstruct"), bases.velocity, state.a);
  out.p = combine(mesh, 1, {}, Eigen::VectorXd(0), bases.pressure, state.b);
  out.theta = combine(mesh, 1, bases.temperature_lifts,
                      lift_part(temperature_lift_values, static_cast<int>(bases.temperature_lifts.size()), "reconstruct"),
                      bases.temperature, state.c);
  out.nut = combine(mesh, 1, {}, Eigen::VectorXd(0), bases.eddy, state.l);
  return out;
}

void write_coefficients_csv(const std::filesystem::path& path, const ReducedTrajectory& trajectory) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(17);
  const ReducedState& ref = trajectory.initial;
  out << "t";
  auto header = [&](char name, Eigen::Index n) {
    for (Eigen::Index i = 0; i < n; ++i) out << "," << name << i;
  };
  header('a', ref.a.size());
  header('b', ref.b.size());
  header('c', ref.c.size());
  header('l', ref.l.size());
  out << "\n";
  auto row = [&](const ReducedState& s) {
    out << s.t;
    for (const Eigen::VectorXd* v : {&s.a, &s.b, &s.c, &s.l})
      for (Eigen::Index i = 0; i < v->size(); ++i) out << "," << (*v)[i];
    out << "\n";
  };
  row(ref);
  for (const auto& s : trajectory.states) row(s);
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace romkit
