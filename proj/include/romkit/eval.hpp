#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "romkit/core/field.hpp"
#include "romkit/rom.hpp"

namespace romkit {

/// 100 |X_fom - X_rom| / |X_fom|. Empty when the reference has zero norm:
/// the relative error is undefined there and must not be reported as 0.
std::optional<double> relative_l2_error(const Field& fom, const Field& rom);

struct ErrorStatistics {
  double min = 0.0;
  double max = 0.0;
  double average = 0.0;
};

/// Throws DataError for an empty or non-finite series.
ErrorStatistics error_statistics(const std::vector<double>& series);

/// E = w_k/2 <u,u> + w_t/2 <theta,theta>.
struct EnergyWeights {
  double kinetic = 1.0;
  double thermal = 1.0;
};

double total_energy(const Field& u, const Field& theta, const EnergyWeights& weights = {});

/// 100 |E_fom - E_rom| / E_fom. Throws DataError when E_fom = 0.
double total_energy_error(const Field& u_fom, const Field& theta_fom, const Field& u_rom, const Field& theta_rom,
                          const EnergyWeights& weights = {});

/// fom / rom. Throws DataError unless both are positive.
double speedup(double fom_seconds, double rom_seconds);

struct ProbeSample {
  double s = 0.0;  // arc length
  Vec2 point;
  int cell = -1;
  std::vector<double> values;  // one per component
};

/// Samples the field at points spaced at most `spacing` apart along the
/// polyline (vertices included), taking the value of the containing cell.
/// spacing <= 0 means half the smaller cell size. Throws DataError when a
/// sample falls outside the active cells.
std::vector<ProbeSample> line_probe(const Field& field, const std::vector<Vec2>& polyline, double spacing = 0.0);

void write_probe_csv(const std::filesystem::path& path, const std::vector<ProbeSample>& samples);

/// Errors of a ROM trajectory against reference fields at the same times.
struct ErrorReport {
  std::vector<double> times;
  std::vector<std::string> fields;  // "U", "p", "T", "nut"
  std::map<std::string, std::vector<std::optional<double>>> errors;
  std::map<std::string, std::optional<ErrorStatistics>> statistics;  // empty when no time has a defined error
  std::vector<double> energy_error;
  EnergyWeights weights;
  double fom_seconds = 0.0;
  double rom_seconds = 0.0;

  /// Empty unless both wall times are positive.
  std::optional<double> speedup_factor() const;

  /// errors_<field>.csv, stats.csv, energy.csv and timing.csv in `dir`.
  void write(const std::filesystem::path& dir) const;
};

/// Pairs fom[j] with rom[j]; throws DimensionError when the lengths differ and
/// DataError when the times disagree by more than 1e-9.
ErrorReport compare(const std::vector<ReconstructedFields>& fom, const std::vector<ReconstructedFields>& rom,
                    const EnergyWeights& weights = {});

}  // namespace romkit
