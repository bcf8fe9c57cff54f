#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tierlab/oracle.hpp"
#include "tierlab/policies.hpp"
#include "tierlab/sim_engine.hpp"

namespace tierlab {

class HarnessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr std::size_t kBruteForceMaxJobs = 20;

// Exhaustive enumeration of all 2^n placements, capacity checked at every
// arrival instant. Throws above kBruteForceMaxJobs jobs.
OracleSolution brute_force_oracle(const OracleInstance& inst);

// A hand-authored trace of at most 20 jobs, the policy to run on it and the
// per-job model outputs that policy consumes.
struct MicroScript {
  std::string name;
  Trace trace;
  std::string policy;  // always-ssd | always-hdd | firstfit | heuristic | lifetime | adaptive
  int categories = 2;
  std::map<std::string, int> category;                         // adaptive
  std::map<std::string, std::pair<double, double>> lifetime;  // lifetime: (mu, sigma)
  SimConfig sim;
  AdaptiveParams adaptive;
  double ttl = 3600.0;
  HeuristicParams heuristic;
};

struct SpilloverProbe {
  double time = 0.0;
  double window = 0.0;
  double value = 0.0;
};

struct JobExpect {
  std::optional<Device> device;
  bool check_spill = false;
  std::optional<double> spill_start;
  bool check_evict = false;
  std::optional<double> evicted_at;
};

struct MicroExpect {
  std::map<std::string, JobExpect> jobs;
  std::optional<std::vector<int>> act;
  std::optional<std::vector<double>> act_times;
  std::vector<SpilloverProbe> spillover;
};

struct ScriptOutcome {
  SimResult result;
  std::vector<std::string> diffs;  // one line per mismatch
  bool ok() const { return diffs.empty(); }
};

// Script format (key = value, see tests/fixtures/micro/README):
//   global keys: policy, categories, quota, footprint, act_range, tw, tl, ttl,
//                rebuild_interval
//   [job <id>]: arrival, end, size, write_phase, read_ops, pipeline, step,
//               category, mu, sigma
//   [probe <label>] sections are read by hand_trace.py only.
MicroScript load_micro_script(const std::filesystem::path& path);
// [job <id>]: device, spill_start, evicted_at ("none" for absent)
// [act]: sequence, times
// [spillover <label>]: time, window, value
MicroExpect load_micro_expect(const std::filesystem::path& path);

ScriptOutcome scripted_policy_trace(const MicroScript& script, const MicroExpect& expect);

}  // namespace tierlab
