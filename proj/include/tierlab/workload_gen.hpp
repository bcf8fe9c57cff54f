#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "tierlab/trace.hpp"

namespace tierlab {

struct LogNormalParams {
  double mu = 0.0;     // mean of ln(x)
  double sigma = 0.0;  // std-dev of ln(x)
};

// One workload family. Jobs of an archetype share size, lifetime and I/O
// intensity distributions, and carry features correlated with them.
struct ArchetypeConfig {
  std::string name;
  double arrival_rate = 1.0;        // jobs per hour
  double diurnal_amplitude = 0.0;   // in [0, 1]
  LogNormalParams size;             // bytes
  LogNormalParams lifetime;         // seconds
  double io_density_level = 1.0;    // mean raw I/O operations per MiB of peak footprint
  double write_fraction = 0.5;      // share of raw ops that are writes
  double cache_hit_fraction = 0.0;
  double feature_noise = 0.0;       // >= 0
  int pipeline_count = 1;
};

struct GeneratorConfig {
  std::vector<ArchetypeConfig> archetypes;
  double duration = 7 * 86400.0;  // seconds
  std::uint64_t seed = 1;
  std::int64_t epoch = 1704067200;  // 2024-01-01T00:00:00Z, a Monday
};

class GeneratorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Lower-cased alphanumeric form of an archetype name; used as its token.
std::string archetype_tag(const std::string& name);

void validate_generator_config(const GeneratorConfig& config);

// Deterministic for a given config: each archetype draws from its own
// substream keyed by (seed, name).
Trace generate(const GeneratorConfig& config);

// The five-archetype reference mix (hot-short, hot-long, cold-short,
// cold-long, negative-savings-heavy). Constants are invented.
GeneratorConfig default_mix(std::uint64_t seed = 1, double duration = 7 * 86400.0);

GeneratorConfig load_generator_config(const std::filesystem::path& path);
GeneratorConfig parse_generator_config(std::istream& in, const std::string& source = "<generator>");
void write_generator_config(const GeneratorConfig& config, std::ostream& out);

}  // namespace tierlab
