#include "tierlab/config_file.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>

namespace tierlab {

namespace {

std::string where(const ConfigSection& s, const std::string& key) {
  std::string w = s.kind.empty() ? std::string("global section") : "[" + s.kind + " " + s.name + "]";
  auto it = s.lines.find(key);
  if (it != s.lines.end()) w += " line " + std::to_string(it->second);
  return w;
}

}  // namespace

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_list(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    std::size_t pos = s.find(sep, start);
    if (pos == std::string_view::npos) pos = s.size();
    std::string item = trim(s.substr(start, pos - start));
    if (!item.empty()) out.push_back(std::move(item));
    start = pos + 1;
  }
  return out;
}

std::string ConfigSection::get_string(const std::string& key) const {
  auto it = values.find(key);
  if (it == values.end()) throw ConfigError("missing key '" + key + "' in " + where(*this, key));
  return it->second;
}

std::string ConfigSection::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values.find(key);
  return it == values.end() ? fallback : it->second;
}

double ConfigSection::get_double(const std::string& key) const {
  const std::string v = get_string(key);
  try {
    std::size_t used = 0;
    double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::logic_error&) {
    throw ConfigError("key '" + key + "' is not a number: '" + v + "' (" + where(*this, key) + ")");
  }
}

double ConfigSection::get_double(const std::string& key, double fallback) const {
  return has(key) ? get_double(key) : fallback;
}

std::int64_t ConfigSection::get_int(const std::string& key) const {
  const std::string v = get_string(key);
  std::int64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size())
    throw ConfigError("key '" + key + "' is not an integer: '" + v + "' (" + where(*this, key) + ")");
  return out;
}

std::int64_t ConfigSection::get_int(const std::string& key, std::int64_t fallback) const {
  return has(key) ? get_int(key) : fallback;
}

bool ConfigSection::get_bool(const std::string& key, bool fallback) const {
  if (!has(key)) return fallback;
  std::string v = get_string(key);
  std::transform(v.begin(), v.end(), v.begin(), [](unsigned char c) { return std::tolower(c); });
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw ConfigError("key '" + key + "' is not a boolean: '" + v + "' (" + where(*this, key) + ")");
}

std::vector<std::string> ConfigSection::get_list(const std::string& key) const {
  return split_list(get_string(key));
}

std::vector<double> ConfigSection::get_double_list(const std::string& key) const {
  std::vector<double> out;
  for (const auto& item : get_list(key)) {
    try {
      std::size_t used = 0;
      double d = std::stod(item, &used);
      if (used != item.size()) throw std::invalid_argument(item);
      out.push_back(d);
    } catch (const std::logic_error&) {
      throw ConfigError("list '" + key + "' has a non-numeric entry '" + item + "' (" + where(*this, key) + ")");
    }
  }
  return out;
}

void ConfigSection::require_known(const std::vector<std::string>& allowed) const {
  for (const auto& [k, v] : values) {
    if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
      throw ConfigError("unknown key '" + k + "' in " + where(*this, k));
  }
}

std::vector<const ConfigSection*> ConfigFile::of_kind(const std::string& kind) const {
  std::vector<const ConfigSection*> out;
  for (const auto& s : sections)
    if (s.kind == kind) out.push_back(&s);
  return out;
}

ConfigFile parse_config(std::istream& in, const std::string& source) {
  ConfigFile cfg;
  cfg.sections.emplace_back();
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    if (t.front() == '[') {
      if (t.back() != ']') throw ConfigError(source + ":" + std::to_string(lineno) + ": unterminated section header");
      std::string inner = trim(std::string_view(t).substr(1, t.size() - 2));
      ConfigSection s;
      auto sp = inner.find_first_of(" \t");
      s.kind = inner.substr(0, sp);
      s.name = sp == std::string::npos ? std::string() : trim(std::string_view(inner).substr(sp));
      if (s.kind.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty section header");
      cfg.sections.push_back(std::move(s));
      continue;
    }
    auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError(source + ":" + std::to_string(lineno) + ": expected 'key = value'");
    std::string key = trim(std::string_view(t).substr(0, eq));
    std::string value = trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    auto& sec = cfg.sections.back();
    if (sec.values.count(key)) throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    sec.values.emplace(key, value);
    sec.lines.emplace(key, lineno);
  }
  return cfg;
}

ConfigFile load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse_config(in, path.string());
}

}  // namespace tierlab
