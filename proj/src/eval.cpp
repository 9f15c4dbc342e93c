#include "romkit/eval.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "romkit/core/operators.hpp"
#include "romkit/errors.hpp"

namespace romkit {

namespace {

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write " + path.string());
  out.precision(12);
  return out;
}

}  // namespace

std::optional<double> relative_l2_error(const Field& fom, const Field& rom) {
  require_compatible(fom, rom, "relative_l2_error");
  const double ref = l2_norm(fom);
  if (!(ref > 0.0)) return std::nullopt;
  return 100.0 * l2_norm(fom - rom) / ref;
}

ErrorStatistics error_statistics(const std::vector<double>& series) {
  if (series.empty()) throw DataError("error_statistics: empty series");
  ErrorStatistics s{series.front(), series.front(), 0.0};
  double sum = 0.0;
  for (double v : series) {
    if (!std::isfinite(v)) throw DataError("error_statistics: non-finite value");
    s.min = std::min(s.min, v);
    s.max = std::max(s.max, v);
    sum += v;
  }
  s.average = std::clamp(sum / static_cast<double>(series.size()), s.min, s.max);
  return s;
}

double total_energy(const Field& u, const Field& theta, const EnergyWeights& weights) {
  return 0.5 * weights.kinetic * inner_product(u, u) + 0.5 * weights.thermal * inner_product(theta, theta);
}

double total_energy_error(const Field& u_fom, const Field& theta_fom, const Field& u_rom, const Field& theta_rom,
                          const EnergyWeights& weights) {
  require_compatible(u_fom, u_rom, "total_energy_error");
  require_compatible(theta_fom, theta_rom, "total_energy_error");
  const double e_fom = total_energy(u_fom, theta_fom, weights);
  if (!(e_fom > 0.0)) throw DataError("total_energy_error: reference energy is zero");
  return 100.0 * std::abs(e_fom - total_energy(u_rom, theta_rom, weights)) / e_fom;
}

double speedup(double fom_seconds, double rom_seconds) {
  if (!(fom_seconds > 0.0) || !(rom_seconds > 0.0)) throw DataError("speedup: wall times must be positive");
  return fom_seconds / rom_seconds;
}

std::vector<ProbeSample> line_probe(const Field& field, const std::vector<Vec2>& polyline, double spacing) {
  if (polyline.empty()) throw DataError("line_probe: empty polyline");
  const Mesh& mesh = field.mesh();
  if (spacing <= 0.0) spacing = 0.5 * std::min(mesh.dx(), mesh.dy());
  std::vector<ProbeSample> out;
  auto sample = [&](Vec2 p, double s) {
    const int cell = mesh.locate(p);
    if (cell < 0)
      throw DataError("line_probe: point (" + std::to_string(p.x) + ", " + std::to_string(p.y) + ") is outside the domain");
    ProbeSample ps{s, p, cell, {}};
    for (int k = 0; k < field.components(); ++k) ps.values.push_back(field(cell, k));
    out.push_back(std::move(ps));
  };
  double s0 = 0.0;
  sample(polyline.front(), 0.0);
  for (std::size_t v = 1; v < polyline.size(); ++v) {
    const Vec2 a = polyline[v - 1];
    const Vec2 b = polyline[v];
    const double len = std::hypot(b.x - a.x, b.y - a.y);
    const int n = std::max(1, static_cast<int>(std::ceil(len / spacing - 1e-12)));
    for (int i = 1; i <= n; ++i) {
      const double f = static_cast<double>(i) / n;
      sample({a.x + f * (b.x - a.x), a.y + f * (b.y - a.y)}, s0 + f * len);
    }
    s0 += len;
  }
  return out;
}

void write_probe_csv(const std::filesystem::path& path, const std::vector<ProbeSample>& samples) {
  std::ofstream out = open_csv(path);
  const std::size_t nc = samples.empty() ? 1 : samples.front().values.size();
  out << "s,x,y";
  if (nc == 1) {
    out << ",value";
  } else {
    for (std::size_t k = 0; k < nc; ++k) out << ",value" << k;
  }
  out << "\n";
  for (const auto& p : samples) {
    out << p.s << "," << p.point.x << "," << p.point.y;
    for (double v : p.values) out << "," << v;
    out << "\n";
  }
}

std::optional<double> ErrorReport::speedup_factor() const {
  if (fom_seconds > 0.0 && rom_seconds > 0.0) return speedup(fom_seconds, rom_seconds);
  return std::nullopt;
}

void ErrorReport::write(const std::filesystem::path& dir) const {
  std::filesystem::create_directories(dir);
  for (const auto& name : fields) {
    std::ofstream out = open_csv(dir / ("errors_" + name + ".csv"));
    out << "t,percent\n";
    const auto& series = errors.at(name);
    for (std::size_t j = 0; j < times.size(); ++j) {
      out << times[j] << ",";
      if (series[j]) out << *series[j];
      else out << "undefined";
      out << "\n";
    }
  }
  {
    std::ofstream out = open_csv(dir / "stats.csv");
    out << "field,min,max,avg\n";
    for (const auto& name : fields) {
      const auto& s = statistics.at(name);
      if (s) out << name << "," << s->min << "," << s->max << "," << s->average << "\n";
      else out << name << ",undefined,undefined,undefined\n";
    }
  }
  if (!energy_error.empty()) {
    std::ofstream out = open_csv(dir / "energy.csv");
    out << "# E = " << weights.kinetic << "/2 <u,u> + " << weights.thermal << "/2 <theta,theta>\n";
    out << "t,percent\n";
    for (std::size_t j = 0; j < times.size(); ++j) out << times[j] << "," << energy_error[j] << "\n";
  }
  {
    std::ofstream out = open_csv(dir / "timing.csv");
    out << "quantity,value\n";
    out << "fom_seconds," << fom_seconds << "\nrom_seconds," << rom_seconds << "\n";
    const auto s = speedup_factor();
    out << "speedup,";
    if (s) out << *s;
    else out << "undefined";
    out << "\n";
  }
}

ErrorReport compare(const std::vector<ReconstructedFields>& fom, const std::vector<ReconstructedFields>& rom,
                    const EnergyWeights& weights) {
  if (fom.size() != rom.size()) throw DimensionError("compare: reference and reduced series differ in length");
  ErrorReport report;
  report.weights = weights;
  if (fom.empty()) return report;
  const std::array<std::pair<const char*, Field ReconstructedFields::*>, 4> members{
      {{"U", &ReconstructedFields::u}, {"p", &ReconstructedFields::p}, {"T", &ReconstructedFields::theta},
       {"nut", &ReconstructedFields::nut}}};
  for (const auto& [name, member] : members)
    if ((fom.front().*member).mesh_ptr()) report.fields.emplace_back(name);
  const bool energy = fom.front().u.mesh_ptr() && fom.front().theta.mesh_ptr();

  for (std::size_t j = 0; j < fom.size(); ++j) {
    if (std::abs(fom[j].t - rom[j].t) > 1e-9)
      throw DataError("compare: time mismatch at index " + std::to_string(j));
    report.times.push_back(fom[j].t);
    for (const auto& [name, member] : members)
      if ((fom.front().*member).mesh_ptr()) report.errors[name].push_back(relative_l2_error(fom[j].*member, rom[j].*member));
    if (energy) report.energy_error.push_back(total_energy_error(fom[j].u, fom[j].theta, rom[j].u, rom[j].theta, weights));
  }
  for (const auto& name : report.fields) {
    std::vector<double> defined;
    for (const auto& e : report.errors[name])
      if (e) defined.push_back(*e);
    report.statistics[name] = defined.empty() ? std::nullopt : std::optional(error_statistics(defined));
  }
  return report;
}

}  // namespace romkit
