#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tierlab {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One "[kind name]" block of a key = value file. The unnamed leading block
// has empty kind and name.
struct ConfigSection {
  std::string kind;
  std::string name;
  std::map<std::string, std::string> values;
  std::map<std::string, int> lines;

  bool has(const std::string& key) const { return values.count(key) != 0; }
  std::string get_string(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key) const;
  double get_double(const std::string& key, double fallback) const;
  std::int64_t get_int(const std::string& key) const;
  std::int64_t get_int(const std::string& key, std::int64_t fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;
  std::vector<std::string> get_list(const std::string& key) const;
  std::vector<double> get_double_list(const std::string& key) const;

  // Throws if any key outside `allowed` is present.
  void require_known(const std::vector<std::string>& allowed) const;
};

struct ConfigFile {
  std::vector<ConfigSection> sections;  // sections[0] is the global block

  const ConfigSection& global() const { return sections.front(); }
  std::vector<const ConfigSection*> of_kind(const std::string& kind) const;
};

// Format: '#' starts a comment, "[kind name]" opens a section, every other
// non-blank line is "key = value". Keys are unique per section.
ConfigFile parse_config(std::istream& in, const std::string& source = "<config>");
ConfigFile load_config(const std::filesystem::path& path);

std::string trim(std::string_view s);
std::vector<std::string> split_list(std::string_view s, char sep = ',');

}  // namespace tierlab
