#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"
#include "romkit/errors.hpp"
#include "romkit/eval.hpp"
#include "test_support.hpp"

using namespace romkit;
using namespace romkit::test;

namespace {

double oracle_norm(const Field& f) {
  const Eigen::VectorXd w = Eigen::Map<const Eigen::VectorXd>(f.mesh().cell_volumes().data(), f.mesh().n_cells())
                                .replicate(1, f.components())
                                .transpose()
                                .reshaped();
  return std::sqrt((f.values().array().square() * w.array()).sum());
}

std::string read_text(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("romkit_eval_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

}  // namespace

TEST_CASE("relative L2 error") {
  std::mt19937_64 rng(11);
  const MeshPtr mesh = small_tee();
  const Field x = random_field(mesh, 2, rng);
  CHECK(*relative_l2_error(x, x) == 0.0);
  CHECK(*relative_l2_error(x, 0.5 * x) == doctest::Approx(50.0).epsilon(1e-14));

  const Field y = random_field(mesh, 2, rng);
  const double expected = 100.0 * oracle_norm(x - y) / oracle_norm(x);
  CHECK(std::abs(*relative_l2_error(x, y) - expected) <= 1e-12 * expected);

  for (double c : {-3.0, 1e-4, 7.5}) CHECK(*relative_l2_error(c * x, c * y) == doctest::Approx(*relative_l2_error(x, y)).epsilon(1e-12));

  CHECK_FALSE(relative_l2_error(Field(mesh, 1), random_field(mesh, 1, rng)).has_value());
  CHECK_THROWS_AS(relative_l2_error(x, Field(mesh, 1)), DimensionError);
}

TEST_CASE("error statistics") {
  const auto c = error_statistics({2.0, 2.0, 2.0});
  CHECK(c.min == 2.0);
  CHECK(c.max == 2.0);
  CHECK(c.average == 2.0);
  const auto s = error_statistics({1.0, 3.0});
  CHECK(s.min == 1.0);
  CHECK(s.max == 3.0);
  CHECK(s.average == 2.0);
  CHECK_THROWS_AS(error_statistics({}), DataError);
  CHECK_THROWS_AS(error_statistics({1.0, std::nan("")}), DataError);

  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> dist(0.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(1 + trial % 7);
    for (double& x : v) x = trial % 5 == 0 ? 0.1 : dist(rng);
    const auto st = error_statistics(v);
    CHECK(st.min <= st.average);
    CHECK(st.average <= st.max);
  }
}

TEST_CASE("statistics table formatting") {
  ErrorReport report;
  report.fields = {"U"};
  report.times = {0.1, 0.2};
  report.errors["U"] = {1.411, 2.012};
  report.statistics["U"] = ErrorStatistics{1.411, 2.012, 1.642};
  const auto dir = scratch_dir("stats");
  report.write(dir);
  const std::string stats = read_text(dir / "stats.csv");
  CHECK(stats == "field,min,max,avg\nU,1.411,2.012,1.642\n");
  CHECK(read_text(dir / "errors_U.csv") == "t,percent\n0.1,1.411\n0.2,2.012\n");
  CHECK(read_text(dir / "timing.csv").find("speedup,undefined") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("total energy error") {
  std::mt19937_64 rng(17);
  const MeshPtr mesh = small_tee();
  const Field u = random_field(mesh, 2, rng);
  const Field th = random_field(mesh, 1, rng, 280.0, 320.0);
  CHECK(total_energy_error(u, th, u, th) == 0.0);

  const Field zero(mesh, 1);
  CHECK(total_energy_error(u, zero, std::sqrt(2.0) * u, zero) == doctest::Approx(100.0).epsilon(1e-13));

  const Field u2 = random_field(mesh, 2, rng);
  const Field th2 = random_field(mesh, 1, rng, 280.0, 320.0);
  auto energy = [](const Field& a, const Field& b) {
    return 0.5 * oracle_norm(a) * oracle_norm(a) + 0.5 * oracle_norm(b) * oracle_norm(b);
  };
  const double expected = 100.0 * std::abs(energy(u, th) - energy(u2, th2)) / energy(u, th);
  CHECK(std::abs(total_energy_error(u, th, u2, th2) - expected) <= 1e-12 * std::max(1.0, expected));

  const EnergyWeights kinetic_only{1.0, 0.0};
  CHECK(total_energy_error(u, th, u, th2, kinetic_only) == 0.0);
  CHECK_THROWS_AS(total_energy_error(Field(mesh, 2), zero, u, th), DataError);
}

TEST_CASE("speedup") {
  const double s = speedup(13782.1, 11.02);
  CHECK(std::abs(s - 1250.6) < 0.05);
  CHECK(std::abs(s - 1259.0) > 8.0);
  CHECK(speedup(3.0, 3.0) == 1.0);
  CHECK(speedup(100.0, 4.0) == 25.0);
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> dist(1e-3, 1e4);
  for (int i = 0; i < 100; ++i) {
    const double a = dist(rng), b = dist(rng);
    CHECK(std::abs(speedup(a, b) * speedup(b, a) - 1.0) < 1e-12);
  }
  CHECK_THROWS_AS(speedup(0.0, 1.0), DataError);
  CHECK_THROWS_AS(speedup(1.0, -2.0), DataError);
}

TEST_CASE("line probe") {
  const MeshPtr mesh = small_tee();
  const double h = mesh->dx();

  SUBCASE("constant field") {
    const auto samples = line_probe(Field::constant(mesh, 4.25), {{0.01, 0.3}, {1.9, 0.3}, {1.9, 0.9}});
    REQUIRE(samples.size() > 10);
    for (const auto& p : samples) CHECK(p.values.at(0) == 4.25);
    CHECK(samples.back().s == doctest::Approx(1.89 + 0.6));
  }

  SUBCASE("f = x along a probe through cell centres") {
    const Field f = sample(mesh, [](double x, double) { return x; });
    const double y = 2.5 * h;
    const auto samples = line_probe(f, {{0.5 * h, y}, {15.5 * h, y}}, h);
    REQUIRE(samples.size() == 16);
    for (std::size_t i = 0; i < samples.size(); ++i) {
      CHECK(samples[i].s == doctest::Approx(i * h));
      CHECK(samples[i].values[0] == doctest::Approx(0.5 * h + i * h).epsilon(1e-12));
    }
  }

  SUBCASE("random field against a nearest-cell lookup") {
    std::mt19937_64 rng(23);
    const Field f = random_field(mesh, 2, rng);
    const auto samples = line_probe(f, {{0.05, 0.05}, {1.2, 0.95}, {0.9, 1.6}}, 0.037);
    for (const auto& p : samples) {
      const int cell = mesh->cell_at(static_cast<int>(std::floor(p.point.x / h)), static_cast<int>(std::floor(p.point.y / mesh->dy())));
      REQUIRE(cell >= 0);
      CHECK(p.values[0] == f(cell, 0));
      CHECK(p.values[1] == f(cell, 1));
    }
    const auto dir = scratch_dir("probe");
    std::filesystem::create_directories(dir);
    write_probe_csv(dir / "probe_line.csv", samples);
    CHECK(read_text(dir / "probe_line.csv").rfind("s,x,y,value0,value1\n", 0) == 0);
    std::filesystem::remove_all(dir);
  }

  SUBCASE("polyline leaving the domain") {
    CHECK_THROWS_AS(line_probe(Field::constant(mesh, 1.0), {{0.1, 0.5}, {0.1, 1.5}}), DataError);
    CHECK_THROWS_AS(line_probe(Field::constant(mesh, 1.0), {}), DataError);
  }
}

TEST_CASE("error report of a trajectory") {
  std::mt19937_64 rng(29);
  const MeshPtr mesh = small_tee();
  std::vector<ReconstructedFields> fom, rom;
  for (int j = 1; j <= 3; ++j) {
    ReconstructedFields f{0.1 * j, random_field(mesh, 2, rng), Field(mesh, 1), random_field(mesh, 1, rng),
                          random_field(mesh, 1, rng, 0.0, 1.0)};
    ReconstructedFields r = f;
    r.u = 0.9 * f.u;
    r.p = random_field(mesh, 1, rng);
    fom.push_back(f);
    rom.push_back(r);
  }

  ErrorReport report = compare(fom, rom);
  report.fom_seconds = 10.0;
  report.rom_seconds = 0.5;
  CHECK(report.fields == std::vector<std::string>{"U", "p", "T", "nut"});
  for (const auto& e : report.errors["U"]) CHECK(*e == doctest::Approx(10.0));
  for (const auto& e : report.errors["T"]) CHECK(*e == 0.0);
  for (const auto& e : report.errors["p"]) CHECK_FALSE(e.has_value());
  CHECK_FALSE(report.statistics["p"].has_value());
  CHECK(report.statistics["U"]->average == doctest::Approx(10.0));
  CHECK(*report.speedup_factor() == 20.0);
  REQUIRE(report.energy_error.size() == 3);
  CHECK(report.energy_error[0] > 0.0);

  const auto dir = scratch_dir("report");
  report.write(dir);
  for (const char* name : {"errors_U.csv", "errors_p.csv", "errors_T.csv", "errors_nut.csv", "stats.csv", "energy.csv", "timing.csv"})
    CHECK(std::filesystem::exists(dir / name));
  CHECK(read_text(dir / "stats.csv").find("p,undefined,undefined,undefined") != std::string::npos);
  CHECK(read_text(dir / "energy.csv").rfind("# E = 1/2 <u,u> + 1/2 <theta,theta>\n", 0) == 0);
  CHECK(read_text(dir / "timing.csv").find("speedup,20\n") != std::string::npos);
  std::filesystem::remove_all(dir);

  rom[2].t = 0.35;
  CHECK_THROWS_AS(compare(fom, rom), DataError);
  rom.pop_back();
  CHECK_THROWS_AS(compare(fom, rom), DimensionError);
}
