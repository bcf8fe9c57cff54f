#include "tierlab/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <omp.h>

#include "tierlab/config_file.hpp"
#include "tierlab/csv.hpp"
#include "tierlab/features.hpp"

namespace tierlab {

SubRunError::SubRunError(const std::string& policy, double quota, std::uint64_t seed, const std::string& what)
    : std::runtime_error("sub-run (policy=" + policy + ", quota=" + fmt_double(quota) +
                         ", seed=" + std::to_string(seed) + ") failed: " + what) {}

// ---------------------------------------------------------------- experiment file

void validate_spec(const ExperimentSpec& s) {
  if (s.policies.empty()) throw SpecError("policy list is empty");
  if (s.quotas.empty()) throw SpecError("quota grid is empty");
  if (s.seeds.empty()) throw SpecError("seed list is empty");
  for (const auto& p : s.policies)
    if (std::find(kKnownPolicies.begin(), kKnownPolicies.end(), p) == kKnownPolicies.end())
      throw SpecError("unknown policy '" + p + "'");
  std::set<std::string> uniq(s.policies.begin(), s.policies.end());
  if (uniq.size() != s.policies.size()) throw SpecError("policy list has duplicates");
  std::set<double> qs;
  for (double q : s.quotas) {
    if (!(q >= 0.0) || !std::isfinite(q)) throw SpecError("quotas must be finite and >= 0");
    if (!qs.insert(q).second) throw SpecError("quota grid has duplicates");
  }
  if (!(s.train_days > 0.0) || !(s.eval_days > 0.0)) throw SpecError("train_days and eval_days must be > 0");
  if (s.categories < 2) throw SpecError("categories must be >= 2");
  if (s.trace_path && s.generator_path) throw SpecError("give either trace or generator, not both");
  if (s.jobs < 0) throw SpecError("jobs must be >= 0");
  if (!(s.ttl > 0.0)) throw SpecError("ttl must be > 0");
  if (!(s.heuristic.rebuild_interval > 0.0) || !(s.heuristic.history_window > 0.0))
    throw SpecError("heuristic intervals must be > 0");
  try {
    validate_adaptive_params(s.adaptive);
    validate_gbt_params(s.gbt);
    validate_rates(s.rates);
  } catch (const std::exception& e) {
    throw SpecError(e.what());
  }
}

namespace {

const std::vector<std::string> kSpecKeys = {
    "trace",          "generator",          "train_days",       "eval_days",        "seeds",
    "rates",          "policies",           "quotas",           "quota_mode",       "footprint",
    "oracle",         "categories",         "gbt_trees",        "gbt_depth",        "gbt_learning_rate",
    "gbt_bins",       "gbt_seed",           "gbt_early_stop",   "act_range",        "tw",
    "tl",             "ttl",                "rebuild_interval", "history_window",   "oracle_node_budget",
    "oracle_time_budget", "output",         "jobs"};

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  if (path.is_relative() && !base.empty()) return base / path;
  return path;
}

}  // namespace

ExperimentSpec parse_experiment_spec(std::istream& in, const std::string& source,
                                     const std::filesystem::path& base_dir) {
  ExperimentSpec s;
  try {
    const ConfigFile cfg = parse_config(in, source);
    if (cfg.sections.size() > 1) throw SpecError(source + ": sections are not allowed in an experiment file");
    const ConfigSection& g = cfg.global();
    g.require_known(kSpecKeys);
    if (g.has("trace")) s.trace_path = resolve(base_dir, g.get_string("trace"));
    if (g.has("generator")) s.generator_path = resolve(base_dir, g.get_string("generator"));
    s.train_days = g.get_double("train_days", s.train_days);
    s.eval_days = g.get_double("eval_days", s.eval_days);
    if (g.has("seeds")) {
      s.seeds.clear();
      for (const auto& v : g.get_list("seeds")) {
        std::size_t pos = 0;
        const auto seed = std::stoull(v, &pos);
        if (pos != v.size()) throw SpecError(source + ": bad seed '" + v + "'");
        s.seeds.push_back(seed);
      }
    }
    if (g.has("rates")) {
      s.rates_path = resolve(base_dir, g.get_string("rates"));
      s.rates = load_rates(*s.rates_path);
    }
    if (g.has("policies")) s.policies = g.get_list("policies");
    if (g.has("quotas")) s.quotas = g.get_double_list("quotas");
    const std::string qm = g.get_string("quota_mode", "fraction");
    if (qm != "fraction" && qm != "bytes") throw SpecError(source + ": quota_mode must be fraction or bytes");
    s.quota_absolute = qm == "bytes";
    if (g.has("footprint")) s.footprint = footprint_model_from_string(g.get_string("footprint"));
    if (g.has("oracle")) {
      s.oracle.clear();
      for (const auto& o : g.get_list("oracle"))
        if (o != "none") s.oracle.push_back(objective_from_string(o));
    }
    s.categories = static_cast<int>(g.get_int("categories", s.categories));
    s.gbt.max_trees = static_cast<int>(g.get_int("gbt_trees", s.gbt.max_trees));
    s.gbt.max_depth = static_cast<int>(g.get_int("gbt_depth", s.gbt.max_depth));
    s.gbt.learning_rate = g.get_double("gbt_learning_rate", s.gbt.learning_rate);
    s.gbt.histogram_bins = static_cast<int>(g.get_int("gbt_bins", s.gbt.histogram_bins));
    s.gbt.seed = static_cast<std::uint64_t>(g.get_int("gbt_seed", static_cast<std::int64_t>(s.gbt.seed)));
    s.gbt.early_stop_rounds = static_cast<int>(g.get_int("gbt_early_stop", s.gbt.early_stop_rounds));
    if (g.has("act_range")) {
      const auto r = g.get_double_list("act_range");
      if (r.size() != 2) throw SpecError(source + ": act_range needs two values");
      s.adaptive.lower = r[0];
      s.adaptive.upper = r[1];
    }
    s.adaptive.window = g.get_double("tw", s.adaptive.window);
    s.adaptive.interval = g.get_double("tl", s.adaptive.interval);
    s.ttl = g.get_double("ttl", s.ttl);
    s.heuristic.rebuild_interval = g.get_double("rebuild_interval", s.heuristic.rebuild_interval);
    s.heuristic.history_window = g.get_double("history_window", s.heuristic.history_window);
    if (g.has("oracle_node_budget")) {
      const auto b = g.get_int("oracle_node_budget");
      if (b <= 0) throw SpecError(source + ": oracle_node_budget must be > 0");
      s.oracle_limits.node_budget = static_cast<std::uint64_t>(b);
    }
    if (g.has("oracle_time_budget")) {
      const std::string tb = g.get_string("oracle_time_budget");
      s.oracle_limits.time_budget = tb == "inf" ? kUnlimited : g.get_double("oracle_time_budget");
    }
    if (g.has("output")) s.output_dir = resolve(base_dir, g.get_string("output"));
    s.jobs = static_cast<int>(g.get_int("jobs", 0));
  } catch (const SpecError&) {
    throw;
  } catch (const std::exception& e) {
    throw SpecError(e.what());
  }
  validate_spec(s);
  return s;
}

ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open spec " + path.string());
  return parse_experiment_spec(in, path.string(), path.parent_path());
}

void write_experiment_spec(const ExperimentSpec& s, std::ostream& out) {
  auto list = [](const auto& v, auto f) {
    std::string r;
    for (std::size_t i = 0; i < v.size(); ++i) r += (i ? ", " : "") + f(v[i]);
    return r;
  };
  if (s.trace_path) out << "trace = " << s.trace_path->string() << "\n";
  if (s.generator_path) out << "generator = " << s.generator_path->string() << "\n";
  out << "train_days = " << fmt_double(s.train_days) << "\n";
  out << "eval_days = " << fmt_double(s.eval_days) << "\n";
  out << "seeds = " << list(s.seeds, [](std::uint64_t v) { return std::to_string(v); }) << "\n";
  if (s.rates_path) out << "rates = " << s.rates_path->string() << "\n";
  out << "policies = " << list(s.policies, [](const std::string& v) { return v; }) << "\n";
  out << "quotas = " << list(s.quotas, [](double v) { return fmt_double(v); }) << "\n";
  out << "quota_mode = " << (s.quota_absolute ? "bytes" : "fraction") << "\n";
  out << "footprint = " << to_string(s.footprint) << "\n";
  out << "oracle = "
      << (s.oracle.empty() ? std::string("none")
                           : list(s.oracle, [](Objective o) { return std::string(to_string(o)); }))
      << "\n";
  out << "categories = " << s.categories << "\n";
  out << "gbt_trees = " << s.gbt.max_trees << "\n";
  out << "gbt_depth = " << s.gbt.max_depth << "\n";
  out << "gbt_learning_rate = " << fmt_double(s.gbt.learning_rate) << "\n";
  out << "gbt_bins = " << s.gbt.histogram_bins << "\n";
  out << "gbt_seed = " << s.gbt.seed << "\n";
  out << "gbt_early_stop = " << s.gbt.early_stop_rounds << "\n";
  out << "act_range = " << fmt_double(s.adaptive.lower) << ", " << fmt_double(s.adaptive.upper) << "\n";
  out << "tw = " << fmt_double(s.adaptive.window) << "\n";
  out << "tl = " << fmt_double(s.adaptive.interval) << "\n";
  out << "ttl = " << fmt_double(s.ttl) << "\n";
  out << "rebuild_interval = " << fmt_double(s.heuristic.rebuild_interval) << "\n";
  out << "history_window = " << fmt_double(s.heuristic.history_window) << "\n";
  out << "oracle_node_budget = " << s.oracle_limits.node_budget << "\n";
  out << "oracle_time_budget = " << fmt_double(s.oracle_limits.time_budget) << "\n";
  out << "output = " << s.output_dir.string() << "\n";
}

// ---------------------------------------------------------------- scenario

Trace scenario_trace(const ExperimentSpec& spec, std::uint64_t seed) {
  if (spec.trace_path) return load_trace(*spec.trace_path);
  GeneratorConfig g = spec.generator_path ? load_generator_config(*spec.generator_path) : default_mix(seed);
  g.seed = seed;
  g.duration = (spec.train_days + spec.eval_days) * 86400.0;
  return generate(g);
}

double measure_peak(const Trace& trace, const std::vector<FeatureVector>& features, FootprintModel model,
                    const CostRates& rates) {
  AlwaysPolicy all_ssd(Device::Ssd);
  SimConfig cfg;
  cfg.footprint = model;
  cfg.rates = rates;
  cfg.sample_interval = 0.0;
  return run(trace, features, all_ssd, cfg).peak_ssd_bytes;
}

static bool needs(const ExperimentSpec& spec, const std::string& policy) {
  return std::find(spec.policies.begin(), spec.policies.end(), policy) != spec.policies.end();
}

Scenario prepare_scenario(const ExperimentSpec& spec, std::uint64_t seed, const ScenarioOptions& opts) {
  Scenario sc;
  sc.seed = seed;
  const Trace full = scenario_trace(spec, seed);
  const auto features = build_features(full, spec.rates);
  const double split = spec.train_days * 86400.0;
  sc.train.epoch = sc.eval.epoch = full.epoch;
  sc.train.generator_seed = sc.eval.generator_seed = full.generator_seed;
  for (std::size_t i = 0; i < full.jobs.size(); ++i) {
    if (full.jobs[i].arrival_time < split) {
      sc.train.jobs.push_back(full.jobs[i]);
      sc.train_features.push_back(features[i]);
    } else {
      sc.eval.jobs.push_back(full.jobs[i]);
      sc.eval_features.push_back(features[i]);
    }
  }
  if (sc.train.jobs.empty()) throw SpecError("seed " + std::to_string(seed) + ": training period has no jobs");
  if (sc.eval.jobs.empty()) throw SpecError("seed " + std::to_string(seed) + ": evaluation period has no jobs");

  sc.training = build_training_set(sc.train, sc.train_features, spec.rates, spec.categories);
  sc.eval_examples = compute_examples(sc.eval, sc.eval_features, spec.rates);
  apply_boundaries(sc.eval_examples, sc.training.boundaries);
  sc.truth = std::make_shared<TrueCategoryModel>(sc.eval_examples, spec.categories);
  if (opts.train_ranking)
    sc.ranking = std::make_shared<GbtCategoryModel>(train_category_model(sc.training, spec.gbt));
  if (opts.train_lifetime) {
    std::vector<double> life;
    for (const Job& j : sc.train.jobs) life.push_back(j.lifetime());
    sc.lifetime = std::make_shared<LifetimeModel>(train_lifetime_regressor(sc.train_features, life, spec.gbt));
  }
  sc.peak_bytes = measure_peak(sc.eval, sc.eval_features, spec.footprint, spec.rates);
  sc.peak_bytes_constant = spec.footprint == FootprintModel::Constant
                               ? sc.peak_bytes
                               : measure_peak(sc.eval, sc.eval_features, FootprintModel::Constant, spec.rates);
  return sc;
}

std::unique_ptr<PlacementPolicy> make_policy(const std::string& name, const Scenario& sc, const ExperimentSpec& spec) {
  if (name == "firstfit") return std::make_unique<FirstFitPolicy>();
  if (name == "heuristic") return std::make_unique<HeuristicPolicy>(spec.rates, spec.heuristic);
  if (name == "always-ssd") return std::make_unique<AlwaysPolicy>(Device::Ssd);
  if (name == "always-hdd") return std::make_unique<AlwaysPolicy>(Device::Hdd);
  if (name == "lifetime") {
    if (!sc.lifetime) throw SpecError("lifetime policy needs a trained lifetime model");
    return std::make_unique<LifetimeTtlPolicy>(sc.lifetime, spec.ttl);
  }
  if (name == "adaptive-hash")
    return std::make_unique<AdaptivePolicy>(std::make_shared<HashCategoryModel>(spec.categories), spec.adaptive,
                                            name);
  if (name == "adaptive-ranking") {
    if (!sc.ranking) throw SpecError("adaptive-ranking needs a trained category model");
    return std::make_unique<AdaptivePolicy>(sc.ranking, spec.adaptive, name);
  }
  if (name == "adaptive-true") return std::make_unique<AdaptivePolicy>(sc.truth, spec.adaptive, name);
  throw SpecError("unknown policy '" + name + "'");
}

double quota_bytes(const ExperimentSpec& spec, const Scenario& sc, double quota, FootprintModel model) {
  if (spec.quota_absolute) return quota;
  return quota * (model == FootprintModel::Constant ? sc.peak_bytes_constant : sc.peak_bytes);
}

// ---------------------------------------------------------------- runs

SweepRow run_policy(const Scenario& sc, const ExperimentSpec& spec, const std::string& policy, double quota,
                    FootprintModel model, SimResult* keep) {
  auto p = make_policy(policy, sc, spec);
  SimConfig cfg;
  cfg.ssd_quota = quota_bytes(spec, sc, quota, model);
  cfg.footprint = model;
  cfg.rates = spec.rates;
  cfg.record_act_series = keep != nullptr;
  cfg.sample_interval = keep ? cfg.sample_interval : 0.0;
  SimResult r = run(sc.eval, sc.eval_features, *p, cfg);
  SweepRow row;
  row.policy = policy;
  row.footprint = to_string(model);
  row.quota = quota;
  row.quota_bytes = cfg.ssd_quota;
  row.seed = sc.seed;
  row.tco_savings_pct = r.tco_savings_percent;
  row.tcio_savings_pct = r.tcio_savings_percent;
  row.ssd_scheduled = r.ssd_scheduled;
  row.spilled = r.spilled;
  row.evicted = r.evicted;
  row.peak_ssd_bytes = r.peak_ssd_bytes;
  if (!std::isfinite(row.tco_savings_pct) || !std::isfinite(row.tcio_savings_pct))
    throw SimError("non-finite savings percentage");
  if (keep) *keep = std::move(r);
  return row;
}

std::vector<SweepRow> run_oracle(const Scenario& sc, const ExperimentSpec& spec, Objective objective) {
  std::vector<double> qs = spec.quotas;
  std::sort(qs.begin(), qs.end());
  std::vector<SweepRow> rows;
  std::vector<char> prev;
  for (double q : qs) {
    const double m = quota_bytes(spec, sc, q, FootprintModel::Constant);
    const OracleInstance inst = build_instance(sc.eval, spec.rates, m, objective);
    const OracleSolution sol = solve(inst, spec.oracle_limits, prev.empty() ? nullptr : &prev);
    if (!verify(inst, sol)) throw OracleError("solution failed verification");
    prev = sol.x;

    std::map<std::string, bool> on_ssd;
    for (std::size_t i = 0; i < inst.jobs.size(); ++i) on_ssd[inst.jobs[i].id] = sol.x[i] != 0;
    const std::string name = std::string("oracle-") + to_string(objective);
    OracleReplayPolicy replay(std::move(on_ssd), name);
    SimConfig cfg;
    cfg.ssd_quota = m;
    cfg.footprint = FootprintModel::Constant;
    cfg.rates = spec.rates;
    cfg.sample_interval = 0.0;
    const SimResult r = run(sc.eval, sc.eval_features, replay, cfg);
    if (r.spilled != 0) throw InvariantError(name + " replay spilled at quota " + fmt_double(q));

    SweepRow row;
    row.policy = name;
    row.footprint = to_string(FootprintModel::Constant);
    row.quota = q;
    row.quota_bytes = m;
    row.seed = sc.seed;
    row.tco_savings_pct = r.tco_savings_percent;
    row.tcio_savings_pct = r.tcio_savings_percent;
    row.ssd_scheduled = r.ssd_scheduled;
    row.peak_ssd_bytes = r.peak_ssd_bytes;
    row.oracle_status = sol.status == OracleStatus::Optimal ? "optimal" : "bounded";
    const double base = objective == Objective::Tco ? r.baseline_tco : r.baseline_tcio;
    row.oracle_objective_pct = base != 0.0 ? 100.0 * sol.objective_value / base : 0.0;
    rows.push_back(row);
  }
  return rows;
}

namespace {

bool row_less(const SweepRow& a, const SweepRow& b) {
  if (a.policy != b.policy) return a.policy < b.policy;
  if (a.footprint != b.footprint) return a.footprint < b.footprint;
  if (a.quota != b.quota) return a.quota < b.quota;
  return a.seed < b.seed;
}

bool exceeds(double value, double bound) { return value > bound + 1e-9 * std::max(1.0, std::fabs(bound)); }

}  // namespace

std::vector<std::string> check_sweep_invariants(const std::vector<SweepRow>& rows) {
  std::vector<std::string> out;
  std::map<std::pair<double, std::uint64_t>, const SweepRow*> oracle_tco;
  std::map<std::string, std::map<std::uint64_t, std::vector<const SweepRow*>>> oracle_by;
  for (const auto& r : rows) {
    if (!std::isfinite(r.tco_savings_pct) || !std::isfinite(r.tcio_savings_pct))
      out.push_back("non-finite savings in row " + r.policy + " quota=" + fmt_double(r.quota));
    if (r.policy == "oracle-tco") oracle_tco[{r.quota, r.seed}] = &r;
    if (r.policy.rfind("oracle-", 0) == 0) oracle_by[r.policy][r.seed].push_back(&r);
  }
  for (const auto& r : rows) {
    if (r.policy.rfind("oracle-", 0) == 0 || r.footprint != "constant") continue;
    auto it = oracle_tco.find({r.quota, r.seed});
    if (it == oracle_tco.end()) continue;
    if (exceeds(r.tco_savings_pct, it->second->tco_savings_pct))
      out.push_back("dominance: " + r.policy + " saves " + fmt_double(r.tco_savings_pct) + "% TCO at quota " +
                    fmt_double(r.quota) + " seed " + std::to_string(r.seed) + ", oracle-tco only " +
                    fmt_double(it->second->tco_savings_pct) + "%");
  }
  for (auto& [name, by_seed] : oracle_by) {
    for (auto& [seed, v] : by_seed) {
      std::sort(v.begin(), v.end(), [](const SweepRow* a, const SweepRow* b) { return a->quota < b->quota; });
      for (std::size_t k = 1; k < v.size(); ++k) {
        const double prev = name == "oracle-tcio" ? v[k - 1]->tcio_savings_pct : v[k - 1]->tco_savings_pct;
        const double cur = name == "oracle-tcio" ? v[k]->tcio_savings_pct : v[k]->tco_savings_pct;
        if (exceeds(prev, cur))
          out.push_back("monotonicity: " + name + " savings drop from " + fmt_double(prev) + "% to " +
                        fmt_double(cur) + "% between quotas " + fmt_double(v[k - 1]->quota) + " and " +
                        fmt_double(v[k]->quota) + " (seed " + std::to_string(seed) + ")");
      }
    }
  }
  return out;
}

namespace {

struct Task {
  std::size_t scenario;
  std::string policy;
  double quota = 0.0;
  std::optional<Objective> oracle;
};

template <class F>
void run_tasks(std::size_t n, int jobs, F&& body, std::vector<std::string>& errors) {
  errors.assign(n, {});
  const auto count = static_cast<std::ptrdiff_t>(n);
  const int threads = jobs > 0 ? jobs : omp_get_max_threads();
#pragma omp parallel for schedule(dynamic, 1) num_threads(threads)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (const std::exception& e) {
      errors[static_cast<std::size_t>(i)] = e.what();
    }
  }
}

std::vector<Scenario> prepare_all(const ExperimentSpec& spec, const ScenarioOptions& opts, std::ostream* log) {
  std::vector<Scenario> out;
  for (std::uint64_t seed : spec.seeds) {
    out.push_back(prepare_scenario(spec, seed, opts));
    if (log)
      *log << "seed " << seed << ": " << out.back().train.jobs.size() << " training jobs, "
           << out.back().eval.jobs.size() << " evaluation jobs, peak " << fmt_double(out.back().peak_bytes)
           << " bytes\n";
  }
  return out;
}

ScenarioOptions options_for(const ExperimentSpec& spec) {
  ScenarioOptions o;
  o.train_ranking = needs(spec, "adaptive-ranking");
  o.train_lifetime = needs(spec, "lifetime");
  return o;
}

}  // namespace

SweepResult run_sweep(const ExperimentSpec& spec, std::ostream* log) {
  validate_spec(spec);
  const auto scenarios = prepare_all(spec, options_for(spec), log);

  std::vector<Task> tasks;
  for (std::size_t s = 0; s < scenarios.size(); ++s) {
    for (const auto& p : spec.policies)
      for (double q : spec.quotas) tasks.push_back({s, p, q, std::nullopt});
    for (Objective o : spec.oracle) tasks.push_back({s, std::string("oracle-") + to_string(o), 0.0, o});
  }
  std::vector<std::vector<SweepRow>> out(tasks.size());
  std::vector<std::string> errors;
  run_tasks(
      tasks.size(), spec.jobs,
      [&](std::size_t i) {
        const Task& t = tasks[i];
        const Scenario& sc = scenarios[t.scenario];
        if (t.oracle)
          out[i] = run_oracle(sc, spec, *t.oracle);
        else
          out[i] = {run_policy(sc, spec, t.policy, t.quota, spec.footprint)};
      },
      errors);
  for (std::size_t i = 0; i < tasks.size(); ++i)
    if (!errors[i].empty())
      throw SubRunError(tasks[i].policy, tasks[i].quota, scenarios[tasks[i].scenario].seed, errors[i]);

  SweepResult res;
  for (auto& v : out)
    for (auto& r : v) res.rows.push_back(std::move(r));
  std::map<std::pair<double, std::uint64_t>, double> oracle_pct;
  for (const auto& r : res.rows)
    if (r.policy == "oracle-tco") oracle_pct[{r.quota, r.seed}] = r.tco_savings_pct;
  for (auto& r : res.rows) {
    if (r.footprint != "constant" || r.policy.rfind("oracle-", 0) == 0) continue;
    auto it = oracle_pct.find({r.quota, r.seed});
    if (it != oracle_pct.end()) r.oracle_gap = it->second - r.tco_savings_pct;
  }
  std::sort(res.rows.begin(), res.rows.end(), row_less);
  res.violations = check_sweep_invariants(res.rows);
  return res;
}

// ---------------------------------------------------------------- CSV

static const char* kSweepHeader =
    "policy,footprint,quota,quota_bytes,seed,tco_savings_pct,tcio_savings_pct,oracle_gap,ssd_scheduled,spilled,"
    "evicted,peak_ssd_bytes,oracle_status,oracle_objective_pct";

static void write_row(const SweepRow& r, std::ostream& out) {
  out << csv_escape(r.policy) << ',' << r.footprint << ',' << fmt_double(r.quota) << ',' << fmt_double(r.quota_bytes)
      << ',' << r.seed << ',' << fmt_double(r.tco_savings_pct) << ',' << fmt_double(r.tcio_savings_pct) << ','
      << (r.oracle_gap ? fmt_double(*r.oracle_gap) : "") << ',' << r.ssd_scheduled << ',' << r.spilled << ','
      << r.evicted << ',' << fmt_double(r.peak_ssd_bytes) << ',' << r.oracle_status << ','
      << (r.oracle_status.empty() ? "" : fmt_double(r.oracle_objective_pct)) << "\n";
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << kSweepHeader << "\n";
  for (const auto& r : rows) write_row(r, out);
}

std::vector<SweepRow> read_sweep_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != kSweepHeader) throw SpecError("sweep CSV: unexpected header");
  std::vector<SweepRow> rows;
  int n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto f = csv_split(line);
    if (f.size() != 14) throw SpecError("sweep CSV line " + std::to_string(n) + ": expected 14 fields");
    try {
      SweepRow r;
      r.policy = f[0];
      r.footprint = f[1];
      r.quota = std::stod(f[2]);
      r.quota_bytes = std::stod(f[3]);
      r.seed = std::stoull(f[4]);
      r.tco_savings_pct = std::stod(f[5]);
      r.tcio_savings_pct = std::stod(f[6]);
      if (!f[7].empty()) r.oracle_gap = std::stod(f[7]);
      r.ssd_scheduled = std::stoull(f[8]);
      r.spilled = std::stoull(f[9]);
      r.evicted = std::stoull(f[10]);
      r.peak_ssd_bytes = std::stod(f[11]);
      r.oracle_status = f[12];
      if (!f[13].empty()) r.oracle_objective_pct = std::stod(f[13]);
      rows.push_back(std::move(r));
    } catch (const std::logic_error&) {
      throw SpecError("sweep CSV line " + std::to_string(n) + ": bad number");
    }
  }
  return rows;
}

void write_sweep_summary_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  struct Acc {
    std::vector<double> tco, tcio;
  };
  std::map<std::tuple<std::string, std::string, double>, Acc> acc;
  for (const auto& r : rows) {
    auto& a = acc[{r.policy, r.footprint, r.quota}];
    a.tco.push_back(r.tco_savings_pct);
    a.tcio.push_back(r.tcio_savings_pct);
  }
  out << "policy,footprint,quota,seeds,tco_mean,tco_min,tco_max,tcio_mean,tcio_min,tcio_max\n";
  for (const auto& [key, a] : acc) {
    auto mean = [](const std::vector<double>& v) {
      double s = 0.0;
      for (double x : v) s += x;
      return s / static_cast<double>(v.size());
    };
    const auto [tlo, thi] = std::minmax_element(a.tco.begin(), a.tco.end());
    const auto [ilo, ihi] = std::minmax_element(a.tcio.begin(), a.tcio.end());
    out << csv_escape(std::get<0>(key)) << ',' << std::get<1>(key) << ',' << fmt_double(std::get<2>(key)) << ','
        << a.tco.size() << ',' << fmt_double(mean(a.tco)) << ',' << fmt_double(*tlo) << ',' << fmt_double(*thi)
        << ',' << fmt_double(mean(a.tcio)) << ',' << fmt_double(*ilo) << ',' << fmt_double(*ihi) << "\n";
  }
}

// ---------------------------------------------------------------- commands

namespace {

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw SpecError("cannot create " + dir.string() + ": " + ec.message());
}

std::ofstream open_out(const std::filesystem::path& p) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw SpecError("cannot write " + p.string());
  return out;
}

template <class F>
int guarded(std::ostream& log, F&& f) {
  try {
    return f();
  } catch (const SpecError& e) {
    log << "error: " << e.what() << "\n";
    return kExitSpecError;
  } catch (const SubRunError& e) {
    log << "error: " << e.what() << "\n";
    return kExitSubRunFailure;
  } catch (const InvariantError& e) {
    log << "error: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitSubRunFailure;
  }
}

std::string run_file_name(const SweepRow& r) {
  return r.policy + "__" + r.footprint + "__q" + fmt_double(r.quota) + "__s" + std::to_string(r.seed) + ".csv";
}

}  // namespace

int cmd_sweep(const ExperimentSpec& spec, std::ostream& log) {
  return guarded(log, [&] {
    validate_spec(spec);
    const auto res = run_sweep(spec, &log);
    std::filesystem::remove_all(spec.output_dir / "runs");
    ensure_dir(spec.output_dir / "runs");
    for (const auto& r : res.rows) {
      auto out = open_out(spec.output_dir / "runs" / run_file_name(r));
      write_sweep_csv({r}, out);
    }
    // Merge the per-run files back in sorted key order.
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(spec.output_dir / "runs")) files.push_back(e.path());
    std::vector<SweepRow> merged;
    for (const auto& p : files) {
      std::ifstream in(p);
      for (auto& r : read_sweep_csv(in)) merged.push_back(std::move(r));
    }
    std::sort(merged.begin(), merged.end(), row_less);
    {
      auto out = open_out(spec.output_dir / "sweep.csv");
      write_sweep_csv(merged, out);
    }
    {
      auto out = open_out(spec.output_dir / "summary.csv");
      write_sweep_summary_csv(merged, out);
    }
    {
      auto out = open_out(spec.output_dir / "spec.txt");
      write_experiment_spec(spec, out);
    }
    log << "wrote " << merged.size() << " rows to " << (spec.output_dir / "sweep.csv").string() << "\n";
    for (const auto& v : res.violations) log << "violation: " << v << "\n";
    return res.violations.empty() ? kExitOk : kExitInvariant;
  });
}

int cmd_act_series(const ExperimentSpec& spec, const std::string& policy, std::ostream& log) {
  return guarded(log, [&] {
    if (policy.rfind("adaptive-", 0) != 0) throw SpecError("act-series needs an adaptive policy, got '" + policy + "'");
    ExperimentSpec s = spec;
    s.policies = {policy};
    validate_spec(s);
    const auto scenarios = prepare_all(s, options_for(s), &log);
    ensure_dir(s.output_dir);
    auto out = open_out(s.output_dir / "act_series.csv");
    out << "policy,seed,quota,time,act,spillover\n";
    for (const auto& sc : scenarios)
      for (double q : s.quotas) {
        SimResult r;
        try {
          run_policy(sc, s, policy, q, s.footprint, &r);
        } catch (const SpecError&) {
          throw;
        } catch (const std::exception& e) {
          throw SubRunError(policy, q, sc.seed, e.what());
        }
        for (const auto& p : r.act_series)
          out << policy << ',' << sc.seed << ',' << fmt_double(q) << ',' << fmt_double(p.time) << ',' << p.act << ','
              << fmt_double(p.spillover) << "\n";
      }
    log << "wrote " << (s.output_dir / "act_series.csv").string() << "\n";
    return kExitOk;
  });
}

std::vector<AdaptiveParams> sensitivity_grid() {
  const std::vector<std::pair<double, double>> ranges = {{0.005, 0.03}, {0.01, 0.15}, {0.05, 0.25}};
  const std::vector<double> tw = {600.0, 900.0, 1800.0};
  const std::vector<double> tl = {600.0, 900.0, 1800.0};
  std::vector<AdaptiveParams> out;
  for (const auto& r : ranges)
    for (double w : tw)
      for (double l : tl) out.push_back({r.first, r.second, w, l});
  return out;
}

std::vector<SensitivityPoint> run_sensitivity(const ExperimentSpec& spec, const std::vector<Scenario>& scenarios) {
  const auto grid = sensitivity_grid();
  struct Job {
    std::size_t s, g;
    double q;
  };
  std::vector<Job> work;
  for (std::size_t s = 0; s < scenarios.size(); ++s)
    for (double q : spec.quotas)
      for (std::size_t g = 0; g < grid.size(); ++g) work.push_back({s, g, q});
  std::vector<SensitivityPoint> out(work.size());
  std::vector<std::string> errors;
  run_tasks(
      work.size(), spec.jobs,
      [&](std::size_t i) {
        ExperimentSpec s = spec;
        s.adaptive = grid[work[i].g];
        const auto row = run_policy(scenarios[work[i].s], s, "adaptive-ranking", work[i].q, s.footprint);
        out[i] = {s.adaptive, work[i].q, scenarios[work[i].s].seed, row.tco_savings_pct};
      },
      errors);
  for (std::size_t i = 0; i < work.size(); ++i)
    if (!errors[i].empty()) throw SubRunError("adaptive-ranking", work[i].q, scenarios[work[i].s].seed, errors[i]);
  return out;
}

int cmd_sensitivity(const ExperimentSpec& spec, std::ostream& log) {
  return guarded(log, [&] {
    ExperimentSpec s = spec;
    s.policies = {"adaptive-ranking", "firstfit"};
    validate_spec(s);
    const auto scenarios = prepare_all(s, options_for(s), &log);
    const auto pts = run_sensitivity(s, scenarios);
    ensure_dir(s.output_dir);
    {
      auto out = open_out(s.output_dir / "sensitivity.csv");
      out << "seed,quota,lower,upper,tw,tl,tco_savings_pct\n";
      for (const auto& p : pts)
        out << p.seed << ',' << fmt_double(p.quota) << ',' << fmt_double(p.params.lower) << ','
            << fmt_double(p.params.upper) << ',' << fmt_double(p.params.window) << ','
            << fmt_double(p.params.interval) << ',' << fmt_double(p.tco_savings_pct) << "\n";
    }
    auto out = open_out(s.output_dir / "sensitivity_band.csv");
    out << "seed,quota,band_min,band_max,default_params,firstfit\n";
    for (const auto& sc : scenarios)
      for (double q : s.quotas) {
        double lo = kUnlimited, hi = -kUnlimited, def = 0.0;
        for (const auto& p : pts) {
          if (p.seed != sc.seed || p.quota != q) continue;
          lo = std::min(lo, p.tco_savings_pct);
          hi = std::max(hi, p.tco_savings_pct);
          if (p.params == s.adaptive) def = p.tco_savings_pct;
        }
        const auto ff = run_policy(sc, s, "firstfit", q, s.footprint);
        out << sc.seed << ',' << fmt_double(q) << ',' << fmt_double(lo) << ',' << fmt_double(hi) << ','
            << fmt_double(def) << ',' << fmt_double(ff.tco_savings_pct) << "\n";
      }
    log << "wrote " << (s.output_dir / "sensitivity.csv").string() << "\n";
    return kExitOk;
  });
}

double eval_accuracy(const Scenario& sc) {
  if (!sc.ranking) throw SpecError("accuracy needs a trained category model");
  const auto pred = sc.ranking->gbt().predict_classes(sc.eval_features);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) hit += pred[i] == sc.eval_examples[i].category ? 1 : 0;
  return pred.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(pred.size());
}

std::vector<NSweepPoint> run_n_sweep(const ExperimentSpec& spec, const std::vector<int>& ns) {
  std::vector<NSweepPoint> out;
  ScenarioOptions opts;
  opts.train_lifetime = false;
  for (int n : ns) {
    ExperimentSpec s = spec;
    s.categories = n;
    s.policies = {"adaptive-ranking"};
    validate_spec(s);
    for (std::uint64_t seed : s.seeds) {
      const Scenario sc = prepare_scenario(s, seed, opts);
      const double acc = eval_accuracy(sc);
      std::vector<NSweepPoint> pts(s.quotas.size());
      std::vector<std::string> errors;
      run_tasks(
          s.quotas.size(), s.jobs,
          [&](std::size_t i) {
            const auto row = run_policy(sc, s, "adaptive-ranking", s.quotas[i], s.footprint);
            pts[i] = {n, seed, s.quotas[i], row.tco_savings_pct, row.tcio_savings_pct, acc};
          },
          errors);
      for (std::size_t i = 0; i < pts.size(); ++i)
        if (!errors[i].empty()) throw SubRunError("adaptive-ranking", s.quotas[i], seed, errors[i]);
      out.insert(out.end(), pts.begin(), pts.end());
    }
  }
  return out;
}

int cmd_n_sweep(const ExperimentSpec& spec, const std::vector<int>& ns, std::ostream& log) {
  return guarded(log, [&] {
    if (ns.empty()) throw SpecError("N list is empty");
    for (int n : ns)
      if (n < 2) throw SpecError("every N must be >= 2");
    const auto pts = run_n_sweep(spec, ns);
    ensure_dir(spec.output_dir);
    auto out = open_out(spec.output_dir / "n_sweep.csv");
    out << "categories,seed,quota,tco_savings_pct,tcio_savings_pct,accuracy\n";
    for (const auto& p : pts)
      out << p.categories << ',' << p.seed << ',' << fmt_double(p.quota) << ',' << fmt_double(p.tco_savings_pct)
          << ',' << fmt_double(p.tcio_savings_pct) << ',' << fmt_double(p.accuracy) << "\n";
    log << "wrote " << (spec.output_dir / "n_sweep.csv").string() << "\n";
    return kExitOk;
  });
}

int cmd_importance(const ExperimentSpec& spec, std::ostream& log) {
  return guarded(log, [&] {
    validate_spec(spec);
    ensure_dir(spec.output_dir);
    auto out = open_out(spec.output_dir / "importance.csv");
    bool first = true;
    for (std::uint64_t seed : spec.seeds) {
      const Trace full = scenario_trace(spec, seed);
      const auto features = build_features(full, spec.rates);
      const TrainingSet set = build_training_set(full, features, spec.rates, spec.categories);
      std::vector<FeatureVector> x;
      std::vector<int> y;
      for (const auto& e : set.examples) {
        x.push_back(e.features);
        y.push_back(e.category);
      }
      const GroupImportance imp = feature_group_importance(x, y, {}, spec.gbt);
      std::ostringstream body;
      write_importance_csv(imp, body);
      std::istringstream lines(body.str());
      std::string line;
      std::getline(lines, line);
      if (first) out << "seed," << line << "\n";
      first = false;
      while (std::getline(lines, line)) out << seed << ',' << line << "\n";
    }
    log << "wrote " << (spec.output_dir / "importance.csv").string() << "\n";
    return kExitOk;
  });
}

}  // namespace tierlab
