#include "romkit/util/manifest.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <charconv>
#include <sstream>

#include "romkit/errors.hpp"

namespace romkit {

namespace pt = boost::property_tree;

std::string format_double(double value) {
  char buf[32];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  if (ec != std::errc()) throw DataError("cannot format double");
  return std::string(buf, end);
}

std::vector<double> parse_doubles(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string token;
  while (in >> token) {
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size())
      throw ConfigError("not a number: '" + token + "'");
    out.push_back(v);
  }
  return out;
}

Manifest Manifest::read(const std::filesystem::path& path) {
  Manifest m;
  try {
    pt::read_ini(path.string(), m.tree_);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError("cannot read " + path.string() + ": " + e.message());
  }
  return m;
}

void Manifest::write(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  try {
    pt::write_ini(path.string(), tree_);
  } catch (const pt::ini_parser_error& e) {
    throw DataError("cannot write " + path.string() + ": " + e.message());
  }
}

void Manifest::set(const std::string& key, const std::string& value) { tree_.put(key, value); }
void Manifest::set(const std::string& key, double value) { tree_.put(key, format_double(value)); }
void Manifest::set(const std::string& key, int value) { tree_.put(key, std::to_string(value)); }

void Manifest::set(const std::string& key, const std::vector<double>& values) {
  std::string text;
  for (size_t i = 0; i < values.size(); ++i) {
    if (i) text += ' ';
    text += format_double(values[i]);
  }
  tree_.put(key, text);
}

bool Manifest::has(const std::string& key) const { return tree_.get_optional<std::string>(key).has_value(); }

std::optional<std::string> Manifest::find(const std::string& key) const {
  if (auto v = tree_.get_optional<std::string>(key)) return *v;
  return std::nullopt;
}

std::string Manifest::get(const std::string& key) const {
  if (auto v = find(key)) return *v;
  throw ConfigError("missing key '" + key + "'");
}

std::string Manifest::get(const std::string& key, const std::string& fallback) const {
  return find(key).value_or(fallback);
}

double Manifest::get_double(const std::string& key) const {
  const auto values = parse_doubles(get(key));
  if (values.size() != 1) throw ConfigError("key '" + key + "' is not a single number");
  return values.front();
}

double Manifest::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

int Manifest::get_int(const std::string& key) const {
  const std::string text = get(key);
  int v = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw ConfigError("key '" + key + "' is not an integer: '" + text + "'");
  return v;
}

int Manifest::get_int(const std::string& key, int fallback) const { return has(key) ? get_int(key) : fallback; }

std::vector<double> Manifest::get_list(const std::string& key) const { return parse_doubles(get(key)); }

std::vector<std::string> Manifest::keys(const std::string& section) const {
  std::vector<std::string> out;
  const pt::ptree* node = &tree_;
  if (!section.empty()) {
    auto child = tree_.get_child_optional(section);
    if (!child) return out;
    node = &*child;
  }
  for (const auto& [k, v] : *node)
    if (v.empty()) out.push_back(k);
  return out;
}

}  // namespace romkit
