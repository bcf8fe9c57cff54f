#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tierlab/category_model.hpp"
#include "tierlab/gbt.hpp"
#include "tierlab/labeling.hpp"
#include "tierlab/oracle.hpp"
#include "tierlab/policies.hpp"
#include "tierlab/sim_engine.hpp"
#include "tierlab/workload_gen.hpp"

namespace tierlab {

// Exit codes of the experiment commands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitSpecError = 2;
inline constexpr int kExitSubRunFailure = 3;
inline constexpr int kExitInvariant = 4;

class SpecError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A failed (policy, quota, seed) sub-run.
class SubRunError : public std::runtime_error {
 public:
  SubRunError(const std::string& policy, double quota, std::uint64_t seed, const std::string& what);
};

class InvariantError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const std::vector<std::string> kKnownPolicies = {"firstfit",      "heuristic",        "lifetime",
                                                        "adaptive-hash", "adaptive-ranking", "adaptive-true",
                                                        "always-ssd",    "always-hdd"};

struct ExperimentSpec {
  // Trace source: a generator config (default: the reference mix) run once
  // per seed over train_days + eval_days, or a fixed trace file.
  std::optional<std::filesystem::path> trace_path;
  std::optional<std::filesystem::path> generator_path;
  double train_days = 7.0;
  double eval_days = 7.0;
  std::vector<std::uint64_t> seeds = {1, 2, 3};

  std::optional<std::filesystem::path> rates_path;
  CostRates rates;

  std::vector<std::string> policies = {"firstfit",      "heuristic",        "lifetime",
                                       "adaptive-hash", "adaptive-ranking", "adaptive-true"};
  std::vector<double> quotas = {0.01, 0.1, 0.5, 1.0};
  bool quota_absolute = false;  // quotas are bytes instead of fractions of peak
  FootprintModel footprint = FootprintModel::LinearGrowth;
  std::vector<Objective> oracle = {Objective::Tco, Objective::Tcio};

  int categories = 15;
  GbtParams gbt;
  AdaptiveParams adaptive;
  HeuristicParams heuristic;
  double ttl = 3600.0;
  OracleLimits oracle_limits{200'000, kUnlimited};

  std::filesystem::path output_dir = "results";
  int jobs = 0;  // worker cap, 0 = OpenMP default
};

void validate_spec(const ExperimentSpec& spec);
ExperimentSpec parse_experiment_spec(std::istream& in, const std::string& source = "<spec>",
                                     const std::filesystem::path& base_dir = {});
ExperimentSpec load_experiment_spec(const std::filesystem::path& path);
void write_experiment_spec(const ExperimentSpec& spec, std::ostream& out);

// Everything derived from one seed: the evaluation week plus the models
// trained on the week before it.
struct Scenario {
  std::uint64_t seed = 0;
  Trace train;
  Trace eval;
  std::vector<FeatureVector> train_features;
  std::vector<FeatureVector> eval_features;
  TrainingSet training;                    // labels fitted on the training week
  std::vector<TrainingExample> eval_examples;  // evaluation week, same boundaries
  std::shared_ptr<const GbtCategoryModel> ranking;
  std::shared_ptr<const TrueCategoryModel> truth;
  std::shared_ptr<const LifetimeModel> lifetime;
  double peak_bytes = 0.0;           // M = infinity, the experiment's footprint model
  double peak_bytes_constant = 0.0;  // M = infinity, constant footprint
};

struct ScenarioOptions {
  bool train_ranking = true;
  bool train_lifetime = true;
};

Trace scenario_trace(const ExperimentSpec& spec, std::uint64_t seed);
Scenario prepare_scenario(const ExperimentSpec& spec, std::uint64_t seed, const ScenarioOptions& opts = {});

// Peak concurrent SSD usage with every job on SSD and no quota.
double measure_peak(const Trace& trace, const std::vector<FeatureVector>& features, FootprintModel model,
                    const CostRates& rates);

std::unique_ptr<PlacementPolicy> make_policy(const std::string& name, const Scenario& sc, const ExperimentSpec& spec);

double quota_bytes(const ExperimentSpec& spec, const Scenario& sc, double quota, FootprintModel model);

struct SweepRow {
  std::string policy;
  std::string footprint;
  double quota = 0.0;  // as given in the experiment grid
  double quota_bytes = 0.0;
  std::uint64_t seed = 0;
  double tco_savings_pct = 0.0;
  double tcio_savings_pct = 0.0;
  std::optional<double> oracle_gap;  // oracle-TCO minus this row, constant mode only
  std::size_t ssd_scheduled = 0;
  std::size_t spilled = 0;
  std::size_t evicted = 0;
  double peak_ssd_bytes = 0.0;
  std::string oracle_status;  // oracle rows only
  double oracle_objective_pct = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // sorted by (policy, quota, seed)
  std::vector<std::string> violations;
};

// One simulation of `policy` on the scenario's evaluation week.
SweepRow run_policy(const Scenario& sc, const ExperimentSpec& spec, const std::string& policy, double quota,
                    FootprintModel model, SimResult* keep = nullptr);

// Oracle rows for one scenario across the quota grid; quotas are solved in
// ascending order, each warm-started from the previous solution.
std::vector<SweepRow> run_oracle(const Scenario& sc, const ExperimentSpec& spec, Objective objective);

// Dominance: in constant mode no policy may beat the oracle-TCO row of the
// same (quota, seed). Also checks oracle-TCIO monotonicity across quotas.
std::vector<std::string> check_sweep_invariants(const std::vector<SweepRow>& rows);

SweepResult run_sweep(const ExperimentSpec& spec, std::ostream* log = nullptr);

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);
std::vector<SweepRow> read_sweep_csv(std::istream& in);
// Mean, min and max over seeds per (policy, footprint, quota).
void write_sweep_summary_csv(const std::vector<SweepRow>& rows, std::ostream& out);

// cmd_* entry points: write CSVs under spec.output_dir and return an exit code.
int cmd_sweep(const ExperimentSpec& spec, std::ostream& log);
int cmd_act_series(const ExperimentSpec& spec, const std::string& policy, std::ostream& log);
int cmd_sensitivity(const ExperimentSpec& spec, std::ostream& log);
int cmd_n_sweep(const ExperimentSpec& spec, const std::vector<int>& ns, std::ostream& log);
int cmd_importance(const ExperimentSpec& spec, std::ostream& log);

struct SensitivityPoint {
  AdaptiveParams params;
  double quota = 0.0;
  std::uint64_t seed = 0;
  double tco_savings_pct = 0.0;
};

// The 3 x 3 x 3 grid of spillover ranges, look-back windows and decision
// intervals.
std::vector<AdaptiveParams> sensitivity_grid();
std::vector<SensitivityPoint> run_sensitivity(const ExperimentSpec& spec, const std::vector<Scenario>& scenarios);

struct NSweepPoint {
  int categories = 0;
  std::uint64_t seed = 0;
  double quota = 0.0;
  double tco_savings_pct = 0.0;
  double tcio_savings_pct = 0.0;
  double accuracy = 0.0;  // top-1 on the evaluation week
};

std::vector<NSweepPoint> run_n_sweep(const ExperimentSpec& spec, const std::vector<int>& ns);

// Fraction of evaluation-week jobs whose predicted category is the true one.
double eval_accuracy(const Scenario& sc);

// Report over a results directory holding sweep.csv. Returns kExitInvariant
// when the dominance check fails, kExitSpecError when inputs are missing.
struct ReportOptions {
  bool plot = false;  // write savings-vs-quota SVGs
};
int cmd_report(const std::filesystem::path& dir, const ReportOptions& opts, std::ostream& out);

}  // namespace tierlab
