#include <doctest.h>

#include <fstream>
#include <set>
#include <sstream>

#include "test_util.hpp"
#include "tierlab/experiment.hpp"

using namespace tierlab;

namespace {

ExperimentSpec small_spec(const std::string& name) {
  ExperimentSpec s;
  s.train_days = 0.5;
  s.eval_days = 0.25;
  s.seeds = {1};
  s.gbt.max_trees = 20;
  s.gbt.max_depth = 4;
  s.categories = 5;
  s.output_dir = testutil::temp_dir(name);
  return s;
}

SweepRow row(const std::string& policy, double quota, std::uint64_t seed, double tco, const std::string& fp = "constant") {
  SweepRow r;
  r.policy = policy;
  r.footprint = fp;
  r.quota = quota;
  r.seed = seed;
  r.tco_savings_pct = tco;
  r.tcio_savings_pct = tco;
  if (policy.rfind("oracle-", 0) == 0) r.oracle_status = "optimal";
  return r;
}

void write_rows(const std::filesystem::path& dir, const std::vector<SweepRow>& rows) {
  std::ofstream out(dir / "sweep.csv");
  write_sweep_csv(rows, out);
}

}  // namespace

TEST_CASE("experiment file: parse, validate, write round trip") {
  std::istringstream in(
      "seeds = 4, 5\npolicies = firstfit, adaptive-true\nquotas = 0.5, 0.01\nfootprint = constant\n"
      "oracle = tco\ncategories = 7\nact_range = 0.02, 0.2\ntw = 600\noracle_time_budget = inf\n");
  const ExperimentSpec s = parse_experiment_spec(in);
  CHECK(s.seeds == std::vector<std::uint64_t>{4, 5});
  CHECK(s.policies == std::vector<std::string>{"firstfit", "adaptive-true"});
  CHECK(s.footprint == FootprintModel::Constant);
  CHECK(s.categories == 7);
  CHECK(s.adaptive.upper == 0.2);
  CHECK(s.oracle_limits.time_budget == kUnlimited);

  std::ostringstream o;
  write_experiment_spec(s, o);
  std::istringstream back_in(o.str());
  const ExperimentSpec back = parse_experiment_spec(back_in);
  std::ostringstream o2;
  write_experiment_spec(back, o2);
  CHECK(o.str() == o2.str());

  auto bad = [](const std::string& text) {
    std::istringstream b(text);
    return parse_experiment_spec(b);
  };
  CHECK_THROWS_AS(bad("policies = quantum\n"), SpecError);
  CHECK_THROWS_AS(bad("quotas = 0.1, 0.1\n"), SpecError);
  CHECK_THROWS_AS(bad("quotas = -1\n"), SpecError);
  CHECK_THROWS_AS(bad("categories = 1\n"), SpecError);
  CHECK_THROWS_AS(bad("act_range = 0.3, 0.1\n"), SpecError);
  CHECK_THROWS_AS(bad("colour = blue\n"), SpecError);
  CHECK_THROWS_AS(bad("[section]\nx = 1\n"), SpecError);
  CHECK_THROWS_AS(bad("seeds = 1x\n"), SpecError);
  CHECK_THROWS_AS(load_experiment_spec("/nonexistent/spec.txt"), SpecError);
}

TEST_CASE("sweep: grid size, zero quota, invariants, CSV round trip") {
  ExperimentSpec s = small_spec("sweep");
  s.quotas = {0.0, 0.1};
  s.footprint = FootprintModel::Constant;
  const SweepResult res = run_sweep(s);
  // 6 policies x 2 quotas + 2 oracle objectives x 2 quotas.
  CHECK(res.rows.size() == 6 * 2 + 2 * 2);
  CHECK(res.violations.empty());
  for (const auto& r : res.rows) {
    if (r.quota == 0.0) {
      CHECK(r.tco_savings_pct == doctest::Approx(0.0));
      CHECK(r.peak_ssd_bytes == 0.0);
    }
    if (r.policy.rfind("oracle-", 0) != 0) REQUIRE(r.oracle_gap);
  }
  std::ostringstream o;
  write_sweep_csv(res.rows, o);
  std::istringstream in(o.str());
  const auto back = read_sweep_csv(in);
  std::ostringstream o2;
  write_sweep_csv(back, o2);
  CHECK(o.str() == o2.str());
}

TEST_CASE("sweep invariants: dominance and oracle monotonicity") {
  CHECK(check_sweep_invariants({row("oracle-tco", 0.1, 1, 10), row("firstfit", 0.1, 1, 9)}).empty());
  CHECK(check_sweep_invariants({row("oracle-tco", 0.1, 1, 10), row("firstfit", 0.1, 1, 11)}).size() == 1);
  // Linear mode rows are not held to the constant-mode oracle.
  CHECK(check_sweep_invariants({row("oracle-tco", 0.1, 1, 10), row("firstfit", 0.1, 1, 11, "linear_growth")}).empty());
  CHECK(check_sweep_invariants({row("oracle-tcio", 0.1, 1, 10), row("oracle-tcio", 0.5, 1, 5)}).size() == 1);
}

TEST_CASE("report: exit codes and output") {
  const auto dir = testutil::temp_dir("report");
  std::ostringstream out;
  CHECK(cmd_report(dir / "missing", {}, out) == kExitSpecError);

  write_rows(dir, {row("firstfit", 0.1, 1, 12.5)});
  out.str("");
  CHECK(cmd_report(dir, {}, out) == kExitOk);
  CHECK(out.str().find("firstfit") != std::string::npos);
  CHECK(out.str().find("range") == std::string::npos);

  write_rows(dir, {row("firstfit", 0.1, 1, 12), row("firstfit", 0.1, 2, 14), row("adaptive-ranking", 0.1, 1, 20),
                   row("adaptive-ranking", 0.1, 2, 22)});
  out.str("");
  CHECK(cmd_report(dir, {true}, out) == kExitOk);
  CHECK(out.str().find("range [12.000, 14.000]") != std::string::npos);
  CHECK(out.str().find("1.615x") != std::string::npos);
  CHECK(std::filesystem::exists(dir / "savings_vs_quota_constant.svg"));

  write_rows(dir, {row("oracle-tco", 0.1, 1, 10), row("firstfit", 0.1, 1, 11)});
  out.str("");
  CHECK(cmd_report(dir, {}, out) == kExitInvariant);
  CHECK(out.str().find("FAILED") != std::string::npos);

  std::ofstream(dir / "sweep.csv") << "not,a,sweep\n";
  CHECK(cmd_report(dir, {}, out) == kExitSpecError);
}

TEST_CASE("act-series: unlimited quota keeps ACT at 1, no quota drives it to N - 1") {
  ExperimentSpec s = small_spec("act");
  s.quotas = {0.0, 1.0};
  s.footprint = FootprintModel::Constant;
  std::ostringstream log;
  REQUIRE(cmd_act_series(s, "adaptive-true", log) == kExitOk);
  std::ifstream in(s.output_dir / "act_series.csv");
  std::string line;
  std::getline(in, line);
  int max_at_zero = 0, max_at_full = 0, rows = 0;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::string policy, seed, quota, time, act;
    std::getline(ls, policy, ',');
    std::getline(ls, seed, ',');
    std::getline(ls, quota, ',');
    std::getline(ls, time, ',');
    std::getline(ls, act, ',');
    int& m = std::stod(quota) == 0.0 ? max_at_zero : max_at_full;
    m = std::max(m, std::stoi(act));
    ++rows;
  }
  CHECK(rows > 0);
  CHECK(max_at_full == 1);
  CHECK(max_at_zero == s.categories - 1);
  CHECK(cmd_act_series(s, "firstfit", log) == kExitSpecError);
}

TEST_CASE("sensitivity grid has 27 distinct settings") {
  const auto g = sensitivity_grid();
  CHECK(g.size() == 27);
  std::set<std::tuple<double, double, double, double>> uniq;
  for (const auto& p : g) {
    CHECK_NOTHROW(validate_adaptive_params(p));
    uniq.insert({p.lower, p.upper, p.window, p.interval});
  }
  CHECK(uniq.size() == 27);
}

TEST_CASE("make_policy rejects unknown names, sub-run errors carry the key") {
  ExperimentSpec s = small_spec("policy");
  const Scenario sc = prepare_scenario(s, 1, {false, false});
  CHECK_THROWS(make_policy("quantum", sc, s));
  const SubRunError e("firstfit", 0.1, 3, "boom");
  CHECK(std::string(e.what()).find("seed=3") != std::string::npos);
  CHECK_THROWS_AS(eval_accuracy(sc), SpecError);  // no ranking model trained
}
