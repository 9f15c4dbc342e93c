#pragma once

#include <boost/property_tree/ptree.hpp>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace romkit {

/// Flat text key=value file with optional [sections], backed by boost's INI
/// reader/writer. Keys are addressed as "key" or "section.key". Doubles are
/// written with 17 significant digits so they round-trip exactly.
class Manifest {
 public:
  static Manifest read(const std::filesystem::path& path);
  void write(const std::filesystem::path& path) const;

  void set(const std::string& key, const std::string& value);
  void set(const std::string& key, const char* value) { set(key, std::string(value)); }
  void set(const std::string& key, double value);
  void set(const std::string& key, int value);
  void set(const std::string& key, const std::vector<double>& values);

  bool has(const std::string& key) const;
  std::optional<std::string> find(const std::string& key) const;
  std::string get(const std::string& key) const;  // throws ConfigError when absent
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key) const;
  int get_int(const std::string& key, int fallback) const;
  std::vector<double> get_list(const std::string& key) const;

  /// Keys of one section (or of the top level when section is empty).
  std::vector<std::string> keys(const std::string& section = "") const;

  const boost::property_tree::ptree& tree() const { return tree_; }

 private:
  boost::property_tree::ptree tree_;
};

std::string format_double(double value);
std::vector<double> parse_doubles(const std::string& text);

}  // namespace romkit
