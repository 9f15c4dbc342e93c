#include <sstream>

#include "doctest.h"
#include "romkit/core/field_io.hpp"
#include "romkit/core/operators.hpp"
#include "romkit/core/sparse_operators.hpp"
#include "romkit/errors.hpp"
#include "test_support.hpp"

using namespace romkit;
using namespace romkit::test;

TEST_CASE("mesh invariants hold on box and tee meshes") {
  for (const auto& mesh : {unit_box(7), small_tee(), std::make_shared<const Mesh>(tee_spec())}) {
    for (int c = 0; c < mesh->n_cells(); ++c) CHECK(mesh->cell_volume(c) > 0.0);
    std::vector<int> owner(mesh->boundary_faces().size(), 0);
    double patch_area = 0.0;
    for (const auto& p : mesh->patches()) {
      for (int f : p.faces) owner[f]++;
      patch_area += p.area;
    }
    for (int count : owner) CHECK(count == 1);
    CHECK(patch_area == doctest::Approx(mesh->boundary_measure()).epsilon(1e-14));
  }
  // Default tee: 64x32 channel plus 16x24 branch with unit channel height.
  const Mesh tee(tee_spec());
  CHECK(tee.n_cells() == 64 * 32 + 16 * 24);
  CHECK(tee.boundary_measure() == doctest::Approx(7.5));
  CHECK(tee.patches()[tee.patch_id("main_inlet")].area == doctest::Approx(1.0));
  CHECK(tee.patches()[tee.patch_id("branch_inlet")].area == doctest::Approx(0.5));
  CHECK(tee.patches()[tee.patch_id("outlet")].area == doctest::Approx(1.0));
  CHECK(tee.total_volume() == doctest::Approx(2.0 + 0.5 * 0.75));
}

TEST_CASE("inner product") {
  std::mt19937_64 rng(11);
  SUBCASE("constant one on unit volume") {
    auto mesh = unit_box(5);
    const Field one = Field::constant(mesh, 1.0);
    CHECK(inner_product(one, one) == doctest::Approx(1.0).epsilon(1e-14));
  }
  SUBCASE("disjoint support") {
    auto mesh = unit_box(4);
    Field f(mesh, 1), g(mesh, 1);
    f(3) = 2.0;
    g(9) = -5.0;
    CHECK(inner_product(f, g) == 0.0);
  }
  SUBCASE("matches elementwise oracle on 4x4") {
    auto mesh = unit_box(4);
    const Field f = random_field(mesh, 2, rng);
    const Field g = random_field(mesh, 2, rng);
    double oracle = 0.0;
    for (int c = 0; c < 16; ++c) oracle += (1.0 / 16.0) * (f(c, 0) * g(c, 0) + f(c, 1) * g(c, 1));
    CHECK(std::abs(inner_product(f, g) - oracle) < 1e-14);
  }
  SUBCASE("symmetric, bilinear, positive definite") {
    auto mesh = small_tee();
    for (int trial = 0; trial < 20; ++trial) {
      const Field f = random_field(mesh, 2, rng);
      const Field g = random_field(mesh, 2, rng);
      const Field h = random_field(mesh, 2, rng);
      CHECK(inner_product(f, g) == doctest::Approx(inner_product(g, f)).epsilon(1e-14));
      const double lhs = inner_product(2.5 * f - 0.5 * g, h);
      CHECK(std::abs(lhs - (2.5 * inner_product(f, h) - 0.5 * inner_product(g, h))) < 1e-12);
      CHECK(inner_product(f, f) > 0.0);
    }
  }
  SUBCASE("mismatch is a dimension error") {
    auto mesh = unit_box(4);
    CHECK_THROWS_AS(inner_product(Field(mesh, 1), Field(mesh, 2)), DimensionError);
    CHECK_THROWS_AS(inner_product(Field(mesh, 1), Field(unit_box(5), 1)), DimensionError);
  }
}

TEST_CASE("gradient") {
  auto mesh = unit_box(16);
  const auto neumann = BoundaryConditions::uniform(*mesh, BcKind::NeumannZero);
  SUBCASE("constant gives zero everywhere") {
    const Field g = gradient(Field::constant(mesh, 3.0), neumann);
    CHECK(g.values().cwiseAbs().maxCoeff() < 1e-12);
  }
  SUBCASE("f = x is exact on interior cells") {
    const Field g = gradient(sample(mesh, [](double x, double) { return x; }), neumann);
    for (int c = 0; c < mesh->n_cells(); ++c) {
      if (!is_interior(*mesh, c)) continue;
      CHECK(std::abs(g(c, 0) - 1.0) < 1e-12);
      CHECK(std::abs(g(c, 1)) < 1e-12);
    }
  }
  SUBCASE("f = x^2 gives 2x on interior cells of a 32x32 mesh") {
    auto m32 = unit_box(32);
    const Field g = gradient(sample(m32, [](double x, double) { return x * x; }),
                             BoundaryConditions::uniform(*m32, BcKind::NeumannZero));
    for (int c = 0; c < m32->n_cells(); ++c)
      if (is_interior(*m32, c)) CHECK(std::abs(g(c, 0) - 2.0 * m32->cell_centre(c).x) < 1e-12);
  }
  SUBCASE("second-order convergence under refinement") {
    std::vector<double> errors;
    for (int n : {16, 32, 64}) {
      auto m = unit_box(n);
      const Field g = gradient(sample(m, [](double x, double y) { return std::sin(3 * x) * std::cos(2 * y); }),
                               BoundaryConditions::uniform(*m, BcKind::NeumannZero));
      double err = 0.0;
      for (int c = 0; c < m->n_cells(); ++c) {
        if (!is_interior(*m, c)) continue;
        const auto p = m->cell_centre(c);
        err = std::max(err, std::abs(g(c, 0) - 3 * std::cos(3 * p.x) * std::cos(2 * p.y)));
        err = std::max(err, std::abs(g(c, 1) + 2 * std::sin(3 * p.x) * std::sin(2 * p.y)));
      }
      errors.push_back(err);
    }
    CHECK(std::log2(errors[0] / errors[1]) > 1.9);
    CHECK(std::log2(errors[1] / errors[2]) > 1.9);
  }
  SUBCASE("vector input is rejected") { CHECK_THROWS_AS(gradient(Field(mesh, 2), neumann), DimensionError); }
}

TEST_CASE("divergence") {
  auto mesh = unit_box(12);
  const auto neumann = BoundaryConditions::uniform(*mesh, BcKind::NeumannZero);
  SUBCASE("constant vector gives zero on interior cells") {
    const Field d = divergence(Field::constant(mesh, 1.5, -2.0), neumann);
    for (int c = 0; c < mesh->n_cells(); ++c)
      if (is_interior(*mesh, c)) CHECK(std::abs(d(c)) < 1e-12);
  }
  SUBCASE("w = (x, y) gives 2 on interior cells") {
    const Field w = sample_vector(mesh, [](double x, double) { return x; }, [](double, double y) { return y; });
    const Field d = divergence(w, neumann);
    for (int c = 0; c < mesh->n_cells(); ++c)
      if (is_interior(*mesh, c)) CHECK(std::abs(d(c) - 2.0) < 1e-12);
  }
  SUBCASE("discrete divergence theorem") {
    std::mt19937_64 rng(5);
    auto tee = small_tee();
    const Field w = random_field(tee, 2, rng);
    // Zero-flux boundaries: volume sum vanishes.
    const Field d0 = divergence(w, all_dirichlet(*tee));
    double sum0 = 0.0;
    for (int c = 0; c < tee->n_cells(); ++c) sum0 += tee->cell_volume(c) * d0(c);
    CHECK(std::abs(sum0) < 1e-12);
    // Non-zero boundary data: volume sum equals the boundary flux.
    const auto bc = all_dirichlet(*tee, 0.3, -0.7);
    const Field d = divergence(w, bc);
    double sum = 0.0, flux = 0.0;
    for (int c = 0; c < tee->n_cells(); ++c) sum += tee->cell_volume(c) * d(c);
    for (const auto& f : tee->boundary_faces()) flux += (0.3 * f.normal.x - 0.7 * f.normal.y) * f.area;
    CHECK(std::abs(sum - flux) < 1e-12);
  }
  SUBCASE("scalar input is rejected") { CHECK_THROWS_AS(divergence(Field(mesh, 1), neumann), DimensionError); }
}

TEST_CASE("laplacian") {
  auto mesh = unit_box(10);
  const auto neumann = BoundaryConditions::uniform(*mesh, BcKind::NeumannZero);
  SUBCASE("linear field gives zero on interior cells") {
    const Field l = laplacian(sample(mesh, [](double x, double y) { return 2 * x - 3 * y + 1; }), neumann);
    for (int c = 0; c < mesh->n_cells(); ++c)
      if (is_interior(*mesh, c)) CHECK(std::abs(l(c)) < 1e-10);
  }
  SUBCASE("x^2 + y^2 gives 4 on interior cells") {
    const Field l = laplacian(sample(mesh, [](double x, double y) { return x * x + y * y; }), neumann);
    for (int c = 0; c < mesh->n_cells(); ++c)
      if (is_interior(*mesh, c)) CHECK(std::abs(l(c) - 4.0) < 1e-10);
  }
  SUBCASE("self-adjoint with homogeneous Dirichlet") {
    std::mt19937_64 rng(3);
    auto tee = small_tee();
    const auto bc = all_dirichlet(*tee);
    for (int trial = 0; trial < 10; ++trial) {
      const Field f = random_field(tee, 1, rng);
      const Field g = random_field(tee, 1, rng);
      CHECK(std::abs(inner_product(laplacian(f, bc), g) - inner_product(f, laplacian(g, bc))) < 1e-10);
    }
  }
}

namespace {

// Independent per-face assembly of div(u w) on a full box with one uniform
// boundary condition: walks grid neighbours instead of the mesh face lists.
Field brute_force_convection(const Field& u, const Field& w, bool dirichlet, double bu, double bw) {
  const Mesh& mesh = u.mesh();
  Field out(w.mesh_ptr(), w.components());
  const int di[4] = {-1, 1, 0, 0};
  const int dj[4] = {0, 0, -1, 1};
  for (int c = 0; c < mesh.n_cells(); ++c) {
    for (int s = 0; s < 4; ++s) {
      const int axis = s < 2 ? 0 : 1;
      const double sign = (s % 2 == 0) ? -1.0 : 1.0;
      const double area = axis == 0 ? mesh.dy() : mesh.dx();
      const int nb = mesh.cell_at(mesh.cell_i(c) + di[s], mesh.cell_j(c) + dj[s]);
      double un;
      if (nb >= 0)
        un = 0.5 * (u(c, axis) + u(nb, axis));
      else
        un = dirichlet ? bu : u(c, axis);
      for (int k = 0; k < w.components(); ++k) {
        double wf;
        if (nb >= 0)
          wf = 0.5 * (w(c, k) + w(nb, k));
        else
          wf = dirichlet ? bw : w(c, k);
        out(c, k) += sign * un * area * wf / mesh.cell_volume(c);
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("convective term") {
  auto mesh = unit_box(9);
  const auto neumann = BoundaryConditions::uniform(*mesh, BcKind::NeumannZero);
  std::mt19937_64 rng(17);
  SUBCASE("zero velocity gives zero") {
    const Field w = random_field(mesh, 2, rng);
    CHECK(convective_term(Field(mesh, 2), all_dirichlet(*mesh), w, neumann).values().cwiseAbs().maxCoeff() == 0.0);
  }
  SUBCASE("constant u, linear w matches u.grad(w) on interior cells") {
    const Field u = Field::constant(mesh, 0.7, -1.3);
    const Field w = sample(mesh, [](double x, double y) { return 2 * x + 5 * y; });
    const Field c = convective_term(u, neumann, w, neumann);
    for (int k = 0; k < mesh->n_cells(); ++k)
      if (is_interior(*mesh, k)) CHECK(std::abs(c(k) - (0.7 * 2 - 1.3 * 5)) < 1e-12);
  }
  SUBCASE("random fields match the per-face oracle") {
    const Field u = random_field(mesh, 2, rng);
    const Field w = random_field(mesh, 2, rng);
    const Field ws = random_field(mesh, 1, rng);
    CHECK(max_abs_diff(convective_term(u, neumann, w, neumann).values(),
                       brute_force_convection(u, w, false, 0, 0).values()) < 1e-13);
    // Scalar w with Dirichlet boundaries. The velocity boundary value is
    // the same for both components so the oracle's scalar bu applies.
    const auto ubc = all_dirichlet(*mesh, 0.4, 0.4);
    const auto wbc = all_dirichlet(*mesh, -0.2, -0.2);
    CHECK(max_abs_diff(convective_term(u, ubc, ws, wbc).values(),
                       brute_force_convection(u, ws, true, 0.4, -0.2).values()) < 1e-13);
  }
  SUBCASE("upwind picks the donor cell") {
    const Field u = Field::constant(mesh, 1.0, 0.0);
    const Field w = sample(mesh, [](double x, double) { return x; });
    const Field c = convective_term(u, neumann, w, neumann, ConvectionScheme::Upwind);
    for (int k = 0; k < mesh->n_cells(); ++k)
      if (is_interior(*mesh, k)) CHECK(std::abs(c(k) - 1.0) < 1e-12);
  }
  SUBCASE("unknown scheme flag") { CHECK_THROWS_AS(parse_scheme("quick"), ConfigError); }
}

TEST_CASE("operators are linear") {
  std::mt19937_64 rng(23);
  auto tee = small_tee();
  const auto bc = all_dirichlet(*tee);
  const Field f = random_field(tee, 1, rng), g = random_field(tee, 1, rng);
  const Field u = random_field(tee, 2, rng), v = random_field(tee, 2, rng);
  const Field nu = random_field(tee, 1, rng, 0.0, 1.0);
  const double a = 1.7, b = -0.4;
  auto lin = [&](auto op, const Field& x, const Field& y) {
    const Field lhs = op(a * x + b * y);
    const Field rhs = a * op(x) + b * op(y);
    return max_abs_diff(lhs.values(), rhs.values());
  };
  CHECK(lin([&](const Field& x) { return gradient(x, bc); }, f, g) < 1e-12);
  CHECK(lin([&](const Field& x) { return divergence(x, bc); }, u, v) < 1e-12);
  CHECK(lin([&](const Field& x) { return laplacian(x, bc); }, u, v) < 1e-10);
  CHECK(lin([&](const Field& x) { return convective_term(u, bc, x, bc); }, u, v) < 1e-12);
  CHECK(lin([&](const Field& x) { return transpose_stress_divergence(nu, x, bc); }, u, v) < 1e-10);
}

TEST_CASE("gradient and divergence are negative adjoints under paired boundary conditions") {
  std::mt19937_64 rng(29);
  auto tee = small_tee();
  // Velocity: no-slip walls and inlets, zero-gradient outlet.
  const BoundaryConditions ubc(*tee, {{"main_inlet", BcKind::Dirichlet, {0, 0}},
                                      {"branch_inlet", BcKind::Dirichlet, {0, 0}},
                                      {"wall", BcKind::Dirichlet, {0, 0}},
                                      {"outlet", BcKind::Outlet, {0, 0}}});
  // Pressure: zero-gradient where velocity is fixed, fixed at the outlet.
  const BoundaryConditions pbc(*tee, {{"main_inlet", BcKind::NeumannZero, {0, 0}},
                                      {"branch_inlet", BcKind::NeumannZero, {0, 0}},
                                      {"wall", BcKind::NeumannZero, {0, 0}},
                                      {"outlet", BcKind::Dirichlet, {0, 0}}});
  for (int trial = 0; trial < 5; ++trial) {
    const Field p = random_field(tee, 1, rng);
    const Field u = random_field(tee, 2, rng);
    CHECK(std::abs(inner_product(gradient(p, pbc), u) + inner_product(p, divergence(u, ubc))) < 1e-12);
  }
}

TEST_CASE("sparse operators agree with the field operators") {
  std::mt19937_64 rng(31);
  auto tee = small_tee();
  const BoundaryConditions bc(*tee, {{"main_inlet", BcKind::Dirichlet, {1.2, 0.0}},
                                     {"branch_inlet", BcKind::Dirichlet, {0.0, -0.8}},
                                     {"wall", BcKind::Dirichlet, {0, 0}},
                                     {"outlet", BcKind::Outlet, {0, 0}}});
  const Field u = random_field(tee, 2, rng);
  const Field p = random_field(tee, 1, rng);
  for (int k = 0; k < 2; ++k) {
    const auto lap = laplacian_operator(*tee, bc, k);
    CHECK(max_abs_diff(lap.apply(u.component(k).values()), laplacian(u, bc).component(k).values()) < 1e-10);
  }
  CHECK(max_abs_diff(divergence_operator(*tee, bc).apply(u.values()), divergence(u, bc).values()) < 1e-12);
  CHECK(max_abs_diff(gradient_operator(*tee, bc).apply(p.values()), gradient(p, bc).values()) < 1e-12);
  for (auto scheme : {ConvectionScheme::Central, ConvectionScheme::Upwind}) {
    const auto conv = scalar_convection_operator(u, bc, bc, scheme);
    CHECK(max_abs_diff(conv.apply(p.values()), convective_term(u, bc, p, bc, scheme).values()) < 1e-12);
  }
}

TEST_CASE("transpose stress divergence of a linear field with constant viscosity vanishes inside") {
  auto mesh = unit_box(10);
  const auto neumann = BoundaryConditions::uniform(*mesh, BcKind::NeumannZero);
  const Field u = sample_vector(mesh, [](double x, double y) { return 2 * x + y; },
                                [](double x, double y) { return x - 2 * y; });
  const Field t = transpose_stress_divergence(Field::constant(mesh, 0.3), u, neumann);
  for (int c = 0; c < mesh->n_cells(); ++c) {
    const int i = mesh->cell_i(c), j = mesh->cell_j(c);
    if (i < 2 || j < 2 || i > 7 || j > 7) continue;
    CHECK(std::abs(t(c, 0)) < 1e-10);
    CHECK(std::abs(t(c, 1)) < 1e-10);
  }
}

TEST_CASE("field file format") {
  std::mt19937_64 rng(37);
  auto mesh = small_tee();
  const Field f = random_field(mesh, 2, rng);
  std::stringstream buf;
  write_field(buf, f);
  const std::string bytes = buf.str();
  REQUIRE(bytes.size() == 16 + 8 * static_cast<size_t>(f.size()));
  CHECK(bytes.substr(0, 4) == "ROMF");
  CHECK(static_cast<unsigned char>(bytes[4]) == 1);  // version, little-endian
  CHECK(static_cast<unsigned char>(bytes[12]) == 2);  // components
  const Field g = read_field(buf, mesh);
  CHECK(g.components() == 2);
  CHECK(g.values() == f.values());

  std::stringstream bad("XXXX0000");
  CHECK_THROWS_AS(read_field(bad, mesh), DataError);
  std::stringstream wrong;
  write_field(wrong, Field(unit_box(3), 1));
  CHECK_THROWS_AS(read_field(wrong, mesh), DimensionError);
}

TEST_CASE("mesh manifest round trip") {
  const auto dir = std::filesystem::temp_directory_path() / "romkit_test_mesh";
  const Mesh tee(tee_spec());
  write_mesh(dir / "mesh.txt", tee);
  const MeshPtr back = read_mesh(dir / "mesh.txt");
  CHECK(back->same_as(tee));
  CHECK(back->patch_id("branch_inlet") == tee.patch_id("branch_inlet"));
  CHECK(back->dx() == tee.dx());
  std::filesystem::remove_all(dir);
}

TEST_CASE("boundary conditions must cover each patch exactly once") {
  auto tee = small_tee();
  CHECK_THROWS_AS(BoundaryConditions(*tee, {{"wall", BcKind::NeumannZero, {0, 0}}}), ConfigError);
  CHECK_THROWS_AS(BoundaryConditions(*tee, {{"wall", BcKind::NeumannZero, {0, 0}},
                                            {"wall", BcKind::NeumannZero, {0, 0}},
                                            {"outlet", BcKind::Outlet, {0, 0}},
                                            {"main_inlet", BcKind::Dirichlet, {0, 0}},
                                            {"branch_inlet", BcKind::Dirichlet, {0, 0}}}),
                  ConfigError);
  CHECK_THROWS_AS(BoundaryConditions(*tee, {{"nowhere", BcKind::NeumannZero, {0, 0}}}), ConfigError);
}
