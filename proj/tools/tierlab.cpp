// tierlab: command-line front end over the library.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "tierlab/category_model.hpp"
#include "tierlab/csv.hpp"
#include "tierlab/experiment.hpp"
#include "tierlab/features.hpp"
#include "tierlab/labeling.hpp"
#include "tierlab/oracle.hpp"
#include "tierlab/policies.hpp"
#include "tierlab/sim_engine.hpp"
#include "tierlab/trace.hpp"
#include "tierlab/workload_gen.hpp"

using namespace tierlab;

namespace {

// Output stream: a file when a path is given, stdout otherwise.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_.open(path, std::ios::binary);
    if (!file_) throw SpecError("cannot write " + path);
  }
  std::ostream& get() { return file_.is_open() ? static_cast<std::ostream&>(file_) : std::cout; }

 private:
  std::ofstream file_;
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw SpecError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

CostRates rates_from(const std::string& path) { return path.empty() ? CostRates{} : load_rates(path); }

struct GbtFlags {
  int trees = GbtParams{}.max_trees;
  int depth = GbtParams{}.max_depth;
  double learning_rate = GbtParams{}.learning_rate;
  std::uint64_t seed = GbtParams{}.seed;

  void add(CLI::App* app) {
    app->add_option("--trees", trees, "boosting rounds")->capture_default_str();
    app->add_option("--depth", depth, "max tree depth")->capture_default_str();
    app->add_option("--learning-rate", learning_rate)->capture_default_str();
    app->add_option("--gbt-seed", seed)->capture_default_str();
  }
  GbtParams params() const {
    GbtParams p;
    p.max_trees = trees;
    p.max_depth = depth;
    p.learning_rate = learning_rate;
    p.seed = seed;
    return p;
  }
};

struct AdaptiveFlags {
  std::vector<double> act_range;
  std::optional<double> tw, tl, ttl, rebuild;

  void add(CLI::App* app) {
    app->add_option("--act-range", act_range, "spillover thresholds LOWER UPPER")->expected(2);
    app->add_option("--tw", tw, "look-back window, seconds");
    app->add_option("--tl", tl, "decision interval, seconds");
    app->add_option("--ttl", ttl, "lifetime policy TTL, seconds");
    app->add_option("--rebuild-interval", rebuild, "heuristic rebuild interval, seconds");
  }
  void apply(AdaptiveParams& a, double& ttl_out, HeuristicParams& h) const {
    if (act_range.size() == 2) {
      a.lower = act_range[0];
      a.upper = act_range[1];
    }
    if (tw) a.window = *tw;
    if (tl) a.interval = *tl;
    if (ttl) ttl_out = *ttl;
    if (rebuild) h.rebuild_interval = *rebuild;
  }
};

// Experiment from an optional file plus command-line overrides.
struct SpecFlags {
  std::string path;
  std::string output;
  int jobs = -1;
  AdaptiveFlags adaptive;

  void add(CLI::App* app) {
    app->add_option("spec", path, "experiment file (defaults when omitted)");
    app->add_option("-o,--output", output, "output directory");
    app->add_option("--jobs", jobs, "cap on parallel sub-runs (0 = all cores)");
    adaptive.add(app);
  }
  ExperimentSpec load() const {
    ExperimentSpec s = path.empty() ? ExperimentSpec{} : load_experiment_spec(path);
    if (!output.empty()) s.output_dir = output;
    if (jobs >= 0) s.jobs = jobs;
    adaptive.apply(s.adaptive, s.ttl, s.heuristic);
    validate_spec(s);
    return s;
  }
};

double resolve_quota(const std::optional<double>& bytes, const std::optional<double>& fraction, const Trace& trace,
                     const std::vector<FeatureVector>& features, FootprintModel model, const CostRates& rates) {
  if (bytes && fraction) throw SpecError("give --quota or --quota-fraction, not both");
  if (bytes) return *bytes;
  if (fraction) return *fraction * measure_peak(trace, features, model, rates);
  return kUnlimited;
}

int run_cli(int argc, char** argv) {
  CLI::App app{"tierlab: SSD/HDD placement simulator, policies and oracle"};
  app.require_subcommand(1);

  // generate
  auto* gen = app.add_subcommand("generate", "write a synthetic trace");
  std::string gen_config, gen_out, gen_dump;
  std::uint64_t gen_seed = 1;
  double gen_days = 7.0;
  gen->add_option("--config", gen_config, "generator config (default: reference mix)");
  gen->add_option("--seed", gen_seed)->capture_default_str();
  gen->add_option("--days", gen_days)->capture_default_str();
  gen->add_option("-o,--output", gen_out, "trace file (stdout when omitted)");
  gen->add_option("--dump-config", gen_dump, "also write the effective generator config here");

  // validate
  auto* val = app.add_subcommand("validate", "check a trace file");
  std::string val_trace;
  bool val_lenient = false;
  val->add_option("trace", val_trace)->required();
  val->add_flag("--lenient", val_lenient, "ignore unknown fields");

  // rates
  auto* rates = app.add_subcommand("rates", "cost rates");
  auto* rates_show = rates->add_subcommand("show", "print the effective rates");
  rates->require_subcommand(1);
  std::string rates_path;
  rates_show->add_option("--rates", rates_path, "rates file (defaults when omitted)");

  // label
  auto* label = app.add_subcommand("label", "compute savings, density and categories");
  std::string label_trace, label_out, label_rates, label_bounds_out, label_bounds_in;
  int label_n = 15;
  label->add_option("trace", label_trace)->required();
  label->add_option("-n,--categories", label_n)->capture_default_str();
  label->add_option("--rates", label_rates);
  label->add_option("-o,--output", label_out, "training CSV");
  label->add_option("--boundaries-out", label_bounds_out, "write the fitted boundaries");
  label->add_option("--boundaries", label_bounds_in, "label with these boundaries instead of fitting");

  // train
  auto* train = app.add_subcommand("train", "train the category model");
  std::string train_trace, train_out, train_rates;
  int train_n = 15;
  GbtFlags train_gbt;
  train->add_option("trace", train_trace)->required();
  train->add_option("-n,--categories", train_n)->capture_default_str();
  train->add_option("--rates", train_rates);
  train->add_option("-o,--output", train_out, "model JSON")->required();
  train_gbt.add(train);

  // model info
  auto* model = app.add_subcommand("model", "inspect a model");
  auto* model_info = model->add_subcommand("info", "summarize a trained category model");
  model->require_subcommand(1);
  std::string model_path;
  model_info->add_option("model", model_path)->required();

  // simulate
  auto* sim = app.add_subcommand("simulate", "run one policy over a trace");
  std::string sim_trace, sim_policy = "firstfit", sim_rates, sim_model, sim_train, sim_out, sim_footprint = "linear_growth",
                         sim_act_out;
  std::optional<double> sim_quota, sim_fraction;
  int sim_n = 15;
  AdaptiveFlags sim_adaptive;
  GbtFlags sim_gbt;
  sim->add_option("trace", sim_trace)->required();
  sim->add_option("--policy", sim_policy, "policy name")->capture_default_str();
  sim->add_option("--quota", sim_quota, "SSD quota in bytes");
  sim->add_option("--quota-fraction", sim_fraction, "SSD quota as a fraction of peak no-quota usage");
  sim->add_option("--footprint", sim_footprint, "constant | linear_growth")->capture_default_str();
  sim->add_option("--rates", sim_rates);
  sim->add_option("--model", sim_model, "category model JSON (adaptive-ranking)");
  sim->add_option("--train", sim_train, "training trace for models not given on the command line");
  sim->add_option("-n,--categories", sim_n)->capture_default_str();
  sim->add_option("-o,--output", sim_out, "per-job placements CSV");
  sim->add_option("--act-series", sim_act_out, "ACT trajectory CSV (adaptive policies)");
  sim_adaptive.add(sim);
  sim_gbt.add(sim);

  // oracle
  auto* orc = app.add_subcommand("oracle", "offline optimum under constant footprint");
  std::string orc_trace, orc_rates, orc_out, orc_objective = "tco";
  std::optional<double> orc_quota, orc_fraction;
  std::uint64_t orc_nodes = OracleLimits{}.node_budget;
  double orc_time = OracleLimits{}.time_budget;
  orc->add_option("trace", orc_trace)->required();
  orc->add_option("--quota", orc_quota, "SSD quota in bytes");
  orc->add_option("--quota-fraction", orc_fraction, "fraction of peak no-quota usage");
  orc->add_option("--objective", orc_objective, "tco | tcio")->capture_default_str();
  orc->add_option("--node-budget", orc_nodes)->capture_default_str();
  orc->add_option("--time-budget", orc_time, "seconds")->capture_default_str();
  orc->add_option("--rates", orc_rates);
  orc->add_option("-o,--output", orc_out, "solution CSV");

  // experiment commands
  auto* sweep = app.add_subcommand("sweep", "policy x quota x seed sweep plus oracle rows");
  SpecFlags sweep_spec;
  sweep_spec.add(sweep);

  auto* acts = app.add_subcommand("act-series", "ACT and spillover over time");
  SpecFlags acts_spec;
  std::string acts_policy = "adaptive-ranking";
  acts_spec.add(acts);
  acts->add_option("--policy", acts_policy)->capture_default_str();

  auto* sens = app.add_subcommand("sensitivity", "adaptive hyperparameter grid");
  SpecFlags sens_spec;
  sens_spec.add(sens);

  auto* nsw = app.add_subcommand("n-sweep", "savings and accuracy against the number of categories");
  SpecFlags nsw_spec;
  std::vector<int> nsw_ns = {2, 5, 15, 25, 35};
  nsw_spec.add(nsw);
  nsw->add_option("--ns", nsw_ns, "category counts")->delimiter(',')->capture_default_str();

  auto* imp = app.add_subcommand("importance", "feature-group importance per category");
  SpecFlags imp_spec;
  imp_spec.add(imp);

  auto* rep = app.add_subcommand("report", "ranking table from a sweep directory");
  std::string rep_dir;
  bool rep_plot = false;
  rep->add_option("dir", rep_dir)->required();
  rep->add_flag("--plot", rep_plot, "write savings-vs-quota SVGs");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitSpecError;
  }

  if (*gen) {
    GeneratorConfig cfg = gen_config.empty() ? default_mix(gen_seed) : load_generator_config(gen_config);
    cfg.seed = gen_seed;
    cfg.duration = gen_days * 86400.0;
    if (!gen_dump.empty()) {
      Sink s(gen_dump);
      write_generator_config(cfg, s.get());
    }
    const Trace t = generate(cfg);
    Sink s(gen_out);
    write_trace(t, s.get());
    std::cerr << "generated " << t.jobs.size() << " jobs\n";
    return kExitOk;
  }

  if (*val) {
    const Trace t = load_trace(val_trace, val_lenient ? UnknownFieldMode::Lenient : UnknownFieldMode::Strict);
    const auto v = validate_trace(t);
    for (const auto& x : v) std::cout << x.job_id << ": " << x.rule << ": " << x.detail << "\n";
    std::cout << t.jobs.size() << " jobs, " << v.size() << " violations\n";
    return v.empty() ? kExitOk : kExitInvariant;
  }

  if (*rates_show) {
    write_rates(rates_from(rates_path), std::cout);
    return kExitOk;
  }

  if (*label) {
    const CostRates r = rates_from(label_rates);
    const Trace t = load_trace(label_trace);
    TrainingSet set;
    if (label_bounds_in.empty()) {
      set = build_training_set(t, r, label_n);
    } else {
      std::ifstream in(label_bounds_in);
      if (!in) throw SpecError("cannot open " + label_bounds_in);
      set.boundaries = read_boundaries(in);
      set.examples = compute_examples(t, build_features(t, r), r);
      apply_boundaries(set.examples, set.boundaries);
    }
    if (!label_bounds_out.empty()) {
      Sink s(label_bounds_out);
      write_boundaries(set.boundaries, s.get());
    }
    Sink s(label_out);
    write_training_csv(set, s.get());
    return kExitOk;
  }

  if (*train) {
    const CostRates r = rates_from(train_rates);
    const Trace t = load_trace(train_trace);
    const TrainingSet set = build_training_set(t, r, train_n);
    const GbtCategoryModel m = train_category_model(set, train_gbt.params());
    m.save(train_out);
    const auto& info = m.gbt().info;
    std::cerr << "trained " << m.gbt().tree_count() << " trees on " << info.n_train << " examples, validation top-1 "
              << fmt_fixed(info.valid_accuracy, 4) << "\n";
    return kExitOk;
  }

  if (*model_info) {
    const GbtCategoryModel m = GbtCategoryModel::load(model_path);
    const auto& g = m.gbt();
    std::cout << "categories: " << m.categories() << "\n";
    std::cout << "rounds: " << g.rounds.size() << " (" << g.tree_count() << " trees, max depth " << g.max_tree_depth()
              << ")\n";
    std::cout << "columns: " << g.schema.columns() << " (" << g.schema.num_numeric() << " numeric, "
              << g.schema.tokens.size() << " tokens)\n";
    std::cout << "training examples: " << g.info.n_train << " train, " << g.info.n_valid << " validation\n";
    std::cout << "validation top-1: " << fmt_fixed(g.info.valid_accuracy, 4)
              << (g.info.stopped_early ? " (stopped early)" : "") << "\n";
    std::cout << "thresholds:";
    for (double x : m.boundaries().thresholds) std::cout << ' ' << fmt_double(x);
    std::cout << "\n";
    return kExitOk;
  }

  if (*sim) {
    SimConfig cfg;
    cfg.rates = rates_from(sim_rates);
    cfg.footprint = footprint_model_from_string(sim_footprint);
    cfg.record_act_series = !sim_act_out.empty();
    const Trace t = load_trace(sim_trace);
    const auto features = build_features(t, cfg.rates);
    cfg.ssd_quota = resolve_quota(sim_quota, sim_fraction, t, features, cfg.footprint, cfg.rates);

    AdaptiveParams ap;
    double ttl = 3600.0;
    HeuristicParams hp;
    sim_adaptive.apply(ap, ttl, hp);
    validate_adaptive_params(ap);

    std::optional<TrainingSet> training;
    auto training_set = [&]() -> const TrainingSet& {
      if (!training) {
        if (sim_train.empty()) throw SpecError("policy '" + sim_policy + "' needs --train");
        training = build_training_set(load_trace(sim_train), cfg.rates, sim_n);
      }
      return *training;
    };

    std::unique_ptr<PlacementPolicy> policy;
    if (sim_policy == "always-ssd") {
      policy = std::make_unique<AlwaysPolicy>(Device::Ssd);
    } else if (sim_policy == "always-hdd") {
      policy = std::make_unique<AlwaysPolicy>(Device::Hdd);
    } else if (sim_policy == "firstfit") {
      policy = std::make_unique<FirstFitPolicy>();
    } else if (sim_policy == "heuristic") {
      policy = std::make_unique<HeuristicPolicy>(cfg.rates, hp);
    } else if (sim_policy == "lifetime") {
      const TrainingSet& set = training_set();
      const Trace tt = load_trace(sim_train);
      std::vector<FeatureVector> x;
      std::vector<double> life;
      for (std::size_t i = 0; i < set.examples.size(); ++i) {
        x.push_back(set.examples[i].features);
        life.push_back(tt.jobs[i].lifetime());
      }
      auto lm = std::make_shared<LifetimeModel>(train_lifetime_regressor(x, life, sim_gbt.params()));
      policy = std::make_unique<LifetimeTtlPolicy>(lm, ttl);
    } else if (sim_policy == "adaptive-hash") {
      policy = std::make_unique<AdaptivePolicy>(std::make_shared<HashCategoryModel>(sim_n), ap, sim_policy);
    } else if (sim_policy == "adaptive-ranking") {
      std::shared_ptr<const CategoryModel> m;
      if (!sim_model.empty())
        m = std::make_shared<GbtCategoryModel>(GbtCategoryModel::load(sim_model));
      else
        m = std::make_shared<GbtCategoryModel>(train_category_model(training_set(), sim_gbt.params()));
      policy = std::make_unique<AdaptivePolicy>(m, ap, sim_policy);
    } else if (sim_policy == "adaptive-true") {
      // Boundaries from the model or training trace when available, else
      // fitted on the simulated trace itself.
      CategoryBoundaries b;
      if (!sim_model.empty())
        b = GbtCategoryModel::load(sim_model).boundaries();
      else if (!sim_train.empty())
        b = training_set().boundaries;
      else
        b = build_training_set(t, features, cfg.rates, sim_n).boundaries;
      auto ex = compute_examples(t, features, cfg.rates);
      apply_boundaries(ex, b);
      policy = std::make_unique<AdaptivePolicy>(std::make_shared<TrueCategoryModel>(ex, b.categories), ap, sim_policy);
    } else {
      throw SpecError("unknown policy '" + sim_policy + "'");
    }

    const SimResult res = run(t, features, *policy, cfg);
    write_summary_csv_header(std::cout);
    write_summary_csv_row(res, std::cout);
    if (!sim_out.empty()) {
      Sink s(sim_out);
      write_placements_csv(res, s.get());
    }
    if (!sim_act_out.empty()) {
      Sink s(sim_act_out);
      s.get() << "time,act,spillover\n";
      for (const auto& p : res.act_series)
        s.get() << fmt_double(p.time) << ',' << p.act << ',' << fmt_double(p.spillover) << "\n";
    }
    return kExitOk;
  }

  if (*orc) {
    const CostRates r = rates_from(orc_rates);
    const Trace t = load_trace(orc_trace);
    double q = 0.0;
    if (orc_fraction) {
      q = resolve_quota(orc_quota, orc_fraction, t, build_features(t, r), FootprintModel::Constant, r);
    } else if (orc_quota) {
      q = *orc_quota;
    } else {
      throw SpecError("oracle needs --quota or --quota-fraction");
    }
    const OracleInstance inst = build_instance(t, r, q, objective_from_string(orc_objective));
    const OracleSolution sol = solve(inst, {orc_nodes, orc_time});
    if (!verify(inst, sol)) throw InvariantError("oracle solution failed verification");
    std::cout << "status: " << (sol.status == OracleStatus::Optimal ? "optimal" : "bounded") << "\n";
    std::cout << "objective: " << fmt_double(sol.objective_value) << "\n";
    std::cout << "bound: " << fmt_double(sol.bound) << " (gap " << fmt_double(sol.gap) << ")\n";
    std::cout << "nodes: " << sol.nodes_explored << ", components: " << sol.components << "\n";
    if (!orc_out.empty()) {
      Sink s(orc_out);
      write_solution_csv(inst, sol, s.get());
    }
    return kExitOk;
  }

  if (*sweep) return cmd_sweep(sweep_spec.load(), std::cerr);
  if (*acts) return cmd_act_series(acts_spec.load(), acts_policy, std::cerr);
  if (*sens) return cmd_sensitivity(sens_spec.load(), std::cerr);
  if (*nsw) return cmd_n_sweep(nsw_spec.load(), nsw_ns, std::cerr);
  if (*imp) return cmd_importance(imp_spec.load(), std::cerr);
  if (*rep) return cmd_report(rep_dir, ReportOptions{rep_plot}, std::cout);
  return kExitSpecError;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const InvariantError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitInvariant;
  } catch (const SubRunError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitSubRunFailure;
  } catch (const std::exception& e) {
    // Bad input: unreadable files, malformed traces or configs, bad flags.
    std::cerr << "error: " << e.what() << "\n";
    return kExitSpecError;
  }
}
