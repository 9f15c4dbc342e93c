#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "romkit/errors.hpp"
#include "romkit/fom.hpp"
#include "romkit/rom.hpp"
#include "test_support.hpp"

using namespace romkit;
using namespace romkit::test;

namespace {

// Velocity-only operators with n_lift lifts, n modes and np pressure modes.
ReducedOperators synthetic(int n_lift, int n, int np) {
  ReducedOperators ops;
  ops.n_lift_u = n_lift;
  ops.n_u = n;
  ops.n_p = np;
  ops.M = Eigen::MatrixXd::Identity(n, n);
  ops.B = Eigen::MatrixXd::Zero(n, n_lift + n);
  ops.BT = Eigen::MatrixXd::Zero(n, n_lift + n);
  ops.Q.assign(n, Eigen::MatrixXd::Zero(n_lift + n, n_lift + n));
  ops.P = Eigen::MatrixXd::Zero(n, np);
  ops.R = Eigen::MatrixXd::Zero(np, n_lift + n);
  ops.XiMean = Eigen::MatrixXd(0, 1);
  return ops;
}

OnlineConfig config_for(double dt, double t_final, int save_every = 1) {
  OnlineConfig c;
  c.nu = 1.0;
  c.dt = dt;
  c.t_final = t_final;
  c.save_every = save_every;
  return c;
}

ReducedState zero_state(const ReducedOperators& ops) {
  ReducedState s;
  s.a = Eigen::VectorXd::Zero(ops.n_u);
  s.b = Eigen::VectorXd::Zero(ops.n_p);
  s.c = Eigen::VectorXd::Zero(0);
  s.l = Eigen::VectorXd::Zero(0);
  return s;
}

// Saddle system with one lift: Q random, P = -R_a^T.
ReducedOperators constrained_system(std::mt19937_64& rng) {
  ReducedOperators ops = synthetic(1, 3, 1);
  std::uniform_real_distribution<double> dist(-0.5, 0.5);
  for (auto& q : ops.Q)
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) q(i, j) = dist(rng);
  ops.B.rightCols(3) = -Eigen::Matrix3d::Identity() * 2.0;
  ops.B.col(0) << 0.3, -0.2, 0.1;
  ops.R << 0.5, 1.0, -0.4, 0.7;
  ops.P = -ops.R.rightCols(3).transpose();
  return ops;
}

}  // namespace

TEST_CASE("online configuration validation") {
  OnlineConfig c;
  CHECK_NOTHROW(c.validate());
  CHECK(c.n_steps() == 1200);
  c.dt = 0.0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
  c = OnlineConfig{};
  c.save_every = 0;
  CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("zero lift, zero state, zero eddy viscosity is a fixed point") {
  std::mt19937_64 rng(1);
  const ReducedOperators ops = constrained_system(rng);
  const ReducedModel model(ops, RBFInterpolant{}, config_for(0.01, 0.5, 10));
  const auto traj = model.solve({0.0}, zero_state(ops));
  REQUIRE(traj.states.size() == 5);
  for (const auto& s : traj.states) {
    CHECK(s.a.cwiseAbs().maxCoeff() == 0.0);
    CHECK(s.b.cwiseAbs().maxCoeff() == 0.0);
  }
  CHECK(traj.states.back().t == doctest::Approx(0.5));
}

TEST_CASE("pure diffusion converges to the exponential solution at first order") {
  ReducedOperators ops = synthetic(0, 2, 0);
  ops.B.diagonal() << -1.0, -3.0;
  auto error = [&](double dt) {
    const ReducedModel model(ops, RBFInterpolant{}, config_for(dt, 1.0, 1));
    ReducedState s0 = zero_state(ops);
    s0.a << 1.0, 2.0;
    const auto traj = model.solve({}, s0);
    Eigen::Vector2d exact(std::exp(-1.0), 2.0 * std::exp(-3.0));
    return (traj.states.back().a - exact).norm();
  };
  const double e1 = error(0.01);
  const double e2 = error(0.005);
  const double e3 = error(0.0025);
  CHECK(e2 < e1);
  CHECK(e1 / e2 == doctest::Approx(2.0).epsilon(0.1));
  CHECK(e2 / e3 == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("the continuity constraint holds at every step") {
  std::mt19937_64 rng(3);
  const ReducedOperators ops = constrained_system(rng);
  const ReducedModel model(ops, RBFInterpolant{}, config_for(0.01, 1.0, 1));
  const auto traj = model.solve({0.8}, zero_state(ops));
  CHECK(traj.max_constraint_residual < 1e-9);
  for (const auto& s : traj.states) {
    Eigen::Vector4d full;
    full << 0.8, s.a;
    CHECK(std::abs((ops.R * full)(0)) < 1e-9);
    CHECK(s.newton_iterations >= 1);
    CHECK(s.newton_iterations <= 50);
  }
  CHECK(traj.states.back().a.norm() > 0.0);
}

TEST_CASE("Newton failure reports its residual history and keeps the partial trajectory") {
  std::mt19937_64 rng(5);
  const ReducedOperators ops = constrained_system(rng);
  OnlineConfig config = config_for(0.01, 1.0, 1);
  config.max_newton = 1;
  const ReducedModel model(ops, RBFInterpolant{}, config);
  ReducedTrajectory partial;
  try {
    model.solve({5.0}, zero_state(ops), &partial);
    FAIL("expected StepError");
  } catch (const StepError& e) {
    REQUIRE(e.residual_history().size() == 2);
    CHECK(e.residual_history()[1] < e.residual_history()[0]);
    CHECK(e.residual_history()[1] > config.newton_tol);
  }
  CHECK(partial.mu == Parameter{5.0});
  CHECK(partial.states.empty());
}

TEST_CASE("parameter and time extrapolation are flagged separately") {
  ReducedOperators ops = synthetic(1, 2, 0);
  ops.n_nu = 1;
  ops.QT1.assign(1, Eigen::MatrixXd::Zero(2, 3));
  ops.QT2.assign(1, Eigen::MatrixXd::Zero(2, 3));
  ops.XiMean = Eigen::MatrixXd::Zero(1, 1);
  Eigen::MatrixXd x(2, 6);
  x << 0.5, 0.5, 0.5, 0.7, 0.7, 0.7,
       0.1, 0.2, 0.3, 0.1, 0.2, 0.3;
  const RBFInterpolant rbf = train_rbf(x, Eigen::MatrixXd::Zero(1, 6), 1.0, 0.0);
  auto flags = [&](double u, double t0, double t_final) {
    const ReducedModel model(ops, rbf, config_for(0.05, t_final, 1));
    ReducedState s0 = zero_state(ops);
    s0.l = Eigen::VectorXd::Zero(1);
    s0.t = t0;
    const auto traj = model.solve({u}, s0);
    return std::pair{traj.extrapolated, traj.time_extrapolated};
  };
  CHECK(flags(0.6, 0.1, 0.2) == std::pair{false, false});
  CHECK(flags(0.8, 0.1, 0.2) == std::pair{true, false});
  CHECK(flags(0.6, 0.0, 0.3) == std::pair{false, true});
  CHECK(flags(0.4, 0.1, 0.3) == std::pair{true, true});
}

TEST_CASE("identical inputs give bitwise identical trajectories") {
  std::mt19937_64 rng(7);
  const ReducedOperators ops = constrained_system(rng);
  const ReducedModel model(ops, RBFInterpolant{}, config_for(0.01, 0.3, 1));
  const auto t1 = model.solve({0.6}, zero_state(ops));
  const auto t2 = model.solve({0.6}, zero_state(ops));
  REQUIRE(t1.states.size() == t2.states.size());
  for (std::size_t i = 0; i < t1.states.size(); ++i) {
    CHECK(t1.states[i].a == t2.states[i].a);
    CHECK(t1.states[i].b == t2.states[i].b);
  }
}

TEST_CASE("initial conditions and reconstruction") {
  std::mt19937_64 rng(9);
  const MeshPtr mesh = small_tee();
  BasisSet b;
  b.mesh = mesh;
  b.velocity_lifts = tee_velocity_lifts(mesh);
  b.temperature_lifts = tee_temperature_lifts(mesh);
  auto orth = [&](int comps, int n) {
    Eigen::MatrixXd m(mesh->n_cells() * comps, n);
    for (int i = 0; i < n; ++i) m.col(i) = random_field(mesh, comps, rng).values();
    orthonormalize(m, dof_weights(*mesh, comps));
    return m;
  };
  b.velocity = orth(2, 3);
  b.pressure = orth(1, 2);
  b.temperature = orth(1, 2);
  b.eddy = orth(1, 2);
  Eigen::MatrixXd x(3, 2);
  x << 0.5, 0.6, 0.7, 0.8, 0.0, 1.0;
  const RBFInterpolant rbf = train_rbf(x, Eigen::MatrixXd::Identity(2, 2), 1.0, 0.0);
  const Parameter mu{0.5, 0.7};
  const std::vector<double> theta{292.15, 309.5};
  const Field u_lift = reapply(Field(mesh, 2), b.velocity_lifts, mu);
  const Field t_lift = reapply(Field(mesh, 1), b.temperature_lifts, theta);

  SUBCASE("lift fields give zero coefficients") {
    const ReducedState s = initial_conditions(b, rbf, mu, u_lift, Field(mesh, 1), t_lift, theta);
    CHECK(s.a.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(s.c.cwiseAbs().maxCoeff() < 1e-12);
    CHECK(s.b.cwiseAbs().maxCoeff() == 0.0);
    CHECK((s.l - Eigen::Vector2d(1.0, 0.0)).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("lift plus the first mode") {
    const Field u0 = u_lift + Field(mesh, 2, b.velocity.col(0));
    const ReducedState s = initial_conditions(b, rbf, mu, u0, Field(mesh, 1), t_lift, theta);
    CHECK((s.a - Eigen::Vector3d(1.0, 0.0, 0.0)).cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("projection residual of the FOM initial state is orthogonal to the basis") {
    FOMConfig config;
    config.geometry = {16, 8, 4, 6, 6, 1.0 / 8.0};
    const FlowProblem problem = tee_problem(config, mu);
    const ReducedState s = initial_conditions(b, rbf, mu, problem.u0, Field(mesh, 1), problem.theta0, theta);
    const ReconstructedFields r = reconstruct(s, b, mu, theta);
    const Eigen::VectorXd res = problem.u0.values() - r.u.values();
    const Eigen::VectorXd w2 = dof_weights(*mesh, 2);
    CHECK((b.velocity.transpose() * w2.asDiagonal() * res).cwiseAbs().maxCoeff() < 1e-10);
    CHECK_THROWS_AS(initial_conditions(b, rbf, mu, Field(unit_box(4), 2), Field(mesh, 1), t_lift, theta),
                    DimensionError);
  }
  SUBCASE("zero coefficients reconstruct the lifts") {
    ReducedState s;
    s.a = Eigen::VectorXd::Zero(3);
    s.b = Eigen::VectorXd::Zero(2);
    s.c = Eigen::VectorXd::Zero(2);
    s.l = Eigen::VectorXd::Zero(2);
    const ReconstructedFields r = reconstruct(s, b, mu, theta);
    CHECK(max_abs_diff(r.u.values(), u_lift.values()) == 0.0);
    CHECK(max_abs_diff(r.theta.values(), t_lift.values()) == 0.0);
    CHECK(r.p.values().cwiseAbs().maxCoeff() == 0.0);
    CHECK(r.nut.values().cwiseAbs().maxCoeff() == 0.0);
    s.a[0] = 1.0;
    const ReconstructedFields r1 = reconstruct(s, b, mu, theta);
    CHECK(max_abs_diff(r1.u.values(), u_lift.values() + b.velocity.col(0)) < 1e-15);
  }
  SUBCASE("reconstruction error of projected coefficients is the projection residual") {
    const Field snap = random_field(mesh, 1, rng);
    const Eigen::VectorXd w1 = dof_weights(*mesh, 1);
    ReducedState s;
    s.a = Eigen::VectorXd::Zero(3);
    s.b = b.pressure.transpose() * w1.asDiagonal() * snap.values();
    s.c = Eigen::VectorXd::Zero(2);
    s.l = Eigen::VectorXd::Zero(2);
    const ReconstructedFields r = reconstruct(s, b, mu, theta);
    const double err2 = l2_norm(snap - r.p) * l2_norm(snap - r.p);
    CHECK(err2 == doctest::Approx(l2_norm(snap) * l2_norm(snap) - s.b.squaredNorm()).epsilon(1e-12));
  }
}

TEST_CASE("coefficient CSV") {
  std::mt19937_64 rng(11);
  const ReducedOperators ops = constrained_system(rng);
  const ReducedModel model(ops, RBFInterpolant{}, config_for(0.01, 0.05, 1));
  const auto traj = model.solve({0.5}, zero_state(ops));
  const auto path = std::filesystem::temp_directory_path() / "romkit_test_rom" / "coefficients.csv";
  write_coefficients_csv(path, traj);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "t,a0,a1,a2,b0");
  int rows = 0;
  for (std::string line; std::getline(in, line);) ++rows;
  CHECK(rows == 6);
  std::filesystem::remove_all(path.parent_path());
}

TEST_CASE("online cost does not depend on the mesh size") {
  // Operators of identical shape assembled on two meshes cost the same online.
  std::mt19937_64 rng(13);
  auto build = [&](double h, int scale) {
    BasisSet b;
    TeeGeometry g{16 * scale, 8 * scale, 4 * scale, 6 * scale, 6 * scale, h};
    b.mesh = std::make_shared<const Mesh>(tee_spec(g));
    b.velocity_lifts = tee_velocity_lifts(b.mesh);
    auto orth = [&](int comps, int n) {
      Eigen::MatrixXd m(b.mesh->n_cells() * comps, n);
      for (int i = 0; i < n; ++i) m.col(i) = random_field(b.mesh, comps, rng).values();
      orthonormalize(m, dof_weights(*b.mesh, comps));
      return m;
    };
    b.velocity = orth(2, 6);
    b.pressure = orth(1, 3);
    b.u_bc = tee_velocity_bc(*b.mesh, 0.0, 0.0);
    b.p_bc = tee_pressure_bc(*b.mesh);
    b.velocity = [&] {
      const Eigen::MatrixXd sup = supremizer_enrichment(b.mesh, b.pressure, b.velocity, b.u_bc, b.p_bc);
      Eigen::MatrixXd v(b.velocity.rows(), b.velocity.cols() + sup.cols());
      v << b.velocity, sup;
      return v;
    }();
    return assemble_operators(b);
  };
  const ReducedOperators coarse = build(1.0 / 8.0, 1);
  const ReducedOperators fine = build(1.0 / 16.0, 2);
  REQUIRE(coarse.n_aug_u() == fine.n_aug_u());
  auto best_time = [&](const ReducedOperators& ops) {
    OnlineConfig c = config_for(0.005, 0.5, 100);
    c.nu = 0.01;
    const ReducedModel model(ops, RBFInterpolant{}, c);
    double best = 1e300;
    for (int rep = 0; rep < 7; ++rep) best = std::min(best, model.solve({0.55, 0.73}, zero_state(ops)).wall_seconds);
    return best;
  };
  const double t_coarse = best_time(coarse);
  const double t_fine = best_time(fine);
  CHECK(t_fine / t_coarse < 1.2);
}
