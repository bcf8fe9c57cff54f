#include <doctest.h>

#include <map>
#include <sstream>

#include "test_util.hpp"
#include "tierlab/oracle.hpp"
#include "tierlab/policies.hpp"

using namespace tierlab;
using testutil::job;
using testutil::trace_of;

namespace {

Observation obs_at(double now, double free, double h = 0.0, double capacity = kUnlimited) {
  Observation o;
  o.now = now;
  o.free_bytes = free;
  o.capacity = capacity;
  o.spillover = [h](double) { return h; };
  return o;
}

FeatureVector fv(const std::string& id) {
  FeatureVector f;
  f.job_id = id;
  f.pipeline_id = "p";
  f.numeric.assign(kNumNumericFeatures, 0.0);
  return f;
}

std::vector<FeatureVector> feats(const Trace& t) { return build_features(t, CostRates{}); }

// Fixed lifetime prediction for every job.
class FixedLifetime final : public LifetimePredictor {
 public:
  FixedLifetime(double mu, double sigma) : mu_(mu), sigma_(sigma) {}
  double mu(const FeatureVector&) const override { return mu_; }
  double sigma(const FeatureVector&) const override { return sigma_; }

 private:
  double mu_, sigma_;
};

// Category = fixed value for every job.
class FixedCategory final : public CategoryModel {
 public:
  FixedCategory(int c, int n) : c_(c), n_(n) {}
  int categories() const override { return n_; }
  int predict(const FeatureVector&) const override { return c_; }
  std::string name() const override { return "fixed"; }

 private:
  int c_, n_;
};

}  // namespace

TEST_CASE("firstfit: the boundary is inclusive") {
  FirstFitPolicy ff;
  const Job j = job("a", 0, 10, 100);
  CHECK(ff.on_arrival(j, fv("a"), obs_at(0, 100)).device == Device::Ssd);
  CHECK(ff.on_arrival(j, fv("a"), obs_at(0, 99)).device == Device::Hdd);
}

TEST_CASE("firstfit: unit jobs fill M, the next one goes to HDD") {
  std::vector<Job> jobs;
  for (int i = 0; i < 6; ++i) jobs.push_back(job("j" + std::to_string(i), i, 100, 1));
  const Trace t = trace_of(jobs);
  FirstFitPolicy ff;
  SimConfig c;
  c.ssd_quota = 5;
  c.footprint = FootprintModel::Constant;
  const SimResult r = run(t, feats(t), ff, c);
  for (int i = 0; i < 5; ++i) CHECK(r.records[static_cast<std::size_t>(i)].scheduled == Device::Ssd);
  CHECK(r.records[5].scheduled == Device::Hdd);
}

TEST_CASE("admission_set_rebuild") {
  CHECK(admission_set_rebuild({{"a", -1, 1}, {"b", -5, 1}}, 100).empty());
  CHECK(admission_set_rebuild({{"lo", 3, 60}, {"hi", 5, 60}}, 100) == std::set<std::string>{"hi"});
  CHECK(admission_set_rebuild({{"a", 3, 1e12}, {"b", 5, 1e15}, {"c", -1, 1}}, kUnlimited) ==
        std::set<std::string>{"a", "b"});
  // Ties in savings go by key.
  CHECK(admission_set_rebuild({{"z", 2, 60}, {"y", 2, 60}}, 100) == std::set<std::string>{"y"});
}

TEST_CASE("heuristic: cold start, admitted key ignores free space, expiry") {
  // Dense reads make every job worth SSD.
  auto hot = [](const std::string& id, double a, double e, std::uint64_t size) {
    return job(id, a, e, size, 50'000'000, "p");
  };
  const Trace t = trace_of({hot("k1", 0, 100, 100), hot("k1b", 900, 2000, 150), hot("k2", 1000, 1100, 50),
                            hot("k3", 10000, 10100, 10)});
  for (const auto& j : t.jobs) REQUIRE(tco_savings(j, CostRates{}) > 0.0);
  HeuristicPolicy h(CostRates{}, {900.0, 3000.0});
  SimConfig c;
  c.ssd_quota = 150;
  c.footprint = FootprintModel::Constant;
  const SimResult r = run(t, feats(t), h, c);
  CHECK(r.records[0].scheduled == Device::Hdd);  // unseen key
  CHECK(r.records[1].scheduled == Device::Ssd);  // admitted after k1 completed
  CHECK(r.records[2].scheduled == Device::Ssd);  // SSD is full, still admitted
  REQUIRE(r.records[2].spill_start);
  CHECK(*r.records[2].spill_start == 1000);
  CHECK(r.records[3].scheduled == Device::Hdd);  // history expired, key dropped
  CHECK(h.admission_set().empty());
  CHECK_THROWS_AS(HeuristicPolicy(CostRates{}, {0.0, 10.0}), PolicyError);
}

TEST_CASE("lifetime TTL: strict threshold and release time") {
  const Job j = job("a", 10, 100, 5);
  LifetimeTtlPolicy at(std::make_shared<FixedLifetime>(3000, 600), 3600);
  CHECK(at.on_arrival(j, fv("a"), obs_at(10, 1e9)).device == Device::Hdd);
  LifetimeTtlPolicy tiny(std::make_shared<FixedLifetime>(1e-6, 0), 3600);
  const Decision d = tiny.on_arrival(j, fv("a"), obs_at(10, 1e9));
  CHECK(d.device == Device::Ssd);
  REQUIRE(d.evict_at);
  CHECK(*d.evict_at == doctest::Approx(10 + 1e-6));
  CHECK_THROWS_AS(LifetimeTtlPolicy(nullptr, 10), PolicyError);
}

TEST_CASE("lifetime TTL: a job living twice its horizon is evicted halfway") {
  const Trace t = trace_of({job("a", 0, 100, 10, 500)});
  LifetimeTtlPolicy p(std::make_shared<FixedLifetime>(30, 20), 3600);
  SimConfig c;
  c.footprint = FootprintModel::Constant;
  const SimResult r = run(t, feats(t), p, c);
  REQUIRE(r.records[0].evicted_at);
  CHECK(*r.records[0].evicted_at == 50);
  CHECK(r.evicted == 1);
  CHECK(r.realized_tcio > 0.0);
  CHECK(r.realized_tcio < r.baseline_tcio);
  CHECK(r.records[0].hdd_fraction == doctest::Approx(0.5));
}

TEST_CASE("adaptive: dead band, clamps, decision interval") {
  AdaptiveParams p{0.01, 0.15, 900, 900};
  auto model = std::make_shared<FixedCategory>(3, 5);
  AdaptivePolicy a(model, p);
  const Job j = job("a", 0, 10, 1);
  CHECK(a.act() == 1);
  a.on_arrival(j, fv("a"), obs_at(900, 0, 0.5));
  CHECK(a.act() == 2);
  a.on_arrival(j, fv("a"), obs_at(1000, 0, 0.5));  // too soon
  CHECK(a.act() == 2);
  a.on_arrival(j, fv("a"), obs_at(1800, 0, 0.05));  // inside [T_l, T_u]
  CHECK(a.act() == 2);
  for (double t = 2700; t < 9000; t += 900) a.on_arrival(j, fv("a"), obs_at(t, 0, 1.0));
  CHECK(a.act() == 4);  // N - 1
  for (double t = 9000; t < 20000; t += 900) a.on_arrival(j, fv("a"), obs_at(t, 0, 0.0));
  CHECK(a.act() == 1);
  CHECK(a.on_arrival(j, fv("a"), obs_at(20000, 0, 0.0)).device == Device::Ssd);
  // Boundary values stay in the dead band.
  AdaptivePolicy b(model, p);
  b.on_arrival(j, fv("a"), obs_at(900, 0, 0.15));
  CHECK(b.act() == 1);
  b.on_arrival(j, fv("a"), obs_at(1800, 0, 0.01));
  CHECK(b.act() == 1);
  CHECK(b.act_series().size() == 2);
}

TEST_CASE("adaptive: bad parameters and predictions") {
  auto model = std::make_shared<FixedCategory>(1, 5);
  CHECK_THROWS_AS(AdaptivePolicy(model, AdaptiveParams{0.2, 0.1, 900, 900}), PolicyError);
  CHECK_THROWS_AS(AdaptivePolicy(model, AdaptiveParams{0.01, 0.15, 0, 900}), PolicyError);
  CHECK_THROWS_AS(AdaptivePolicy(nullptr), PolicyError);
  AdaptivePolicy bad(std::make_shared<FixedCategory>(7, 5));
  CHECK_THROWS_AS(bad.on_arrival(job("a", 0, 1, 1), fv("a"), obs_at(0, 0)), PolicyError);
}

TEST_CASE("property: ACT stays in range and moves one step per interval") {
  Rng rng(9);
  for (int it = 0; it < 20; ++it) {
    std::vector<Job> jobs;
    for (int i = 0; i < 300; ++i) {
      const double a = std::floor(rng.uniform(0, 40000));
      jobs.push_back(job("j" + std::to_string(i), a, a + 60 + std::floor(rng.uniform(0, 3000)), 1 + rng.below(100),
                         rng.below(1000), "p" + std::to_string(rng.below(40))));
    }
    const Trace t = trace_of(jobs);
    const int n = 2 + static_cast<int>(rng.below(14));
    AdaptiveParams p{0.01, 0.15, 300 + std::floor(rng.uniform(0, 1500)), 300 + std::floor(rng.uniform(0, 1500))};
    AdaptivePolicy a(std::make_shared<HashCategoryModel>(n), p);
    SimConfig c;
    c.ssd_quota = std::floor(rng.uniform(0, 2000));
    c.record_act_series = true;
    const SimResult r = run(t, feats(t), a, c);
    int prev = 1;
    double last = -kUnlimited;
    for (const auto& pt : r.act_series) {
      CHECK(pt.act >= 1);
      CHECK(pt.act <= n - 1);
      CHECK(std::abs(pt.act - prev) <= 1);
      CHECK(pt.time - last >= p.interval);
      CHECK(pt.spillover >= 0.0);
      CHECK(pt.spillover <= 1.0);
      prev = pt.act;
      last = pt.time;
    }
  }
}

TEST_CASE("oracle replay: all-false is always-HDD; oracle vector reproduces the objective") {
  Rng rng(10);
  std::vector<Job> jobs;
  for (int i = 0; i < 10; ++i) {
    const double a = std::floor(rng.uniform(0, 500));
    Job j = job("j" + std::to_string(i), a, a + 50 + std::floor(rng.uniform(0, 400)), 1 + rng.below(60),
                rng.below(200'000'000));
    jobs.push_back(j);
  }
  const Trace t = trace_of(jobs);
  const CostRates rates;
  SimConfig c;
  c.ssd_quota = 100;
  c.footprint = FootprintModel::Constant;

  std::map<std::string, bool> none;
  for (const auto& j : t.jobs) none[j.job_id] = false;
  OracleReplayPolicy off(none);
  AlwaysPolicy hdd(Device::Hdd);
  std::ostringstream x, y;
  write_placements_csv(run(t, feats(t), off, c), x);
  const SimResult base = run(t, feats(t), hdd, c);
  CHECK(run(t, feats(t), off, c).realized_tco == base.realized_tco);

  const OracleInstance inst = build_instance(t, rates, c.ssd_quota, Objective::Tco);
  const OracleSolution sol = solve(inst);
  REQUIRE(sol.status == OracleStatus::Optimal);
  std::map<std::string, bool> pick;
  for (std::size_t i = 0; i < inst.jobs.size(); ++i) pick[inst.jobs[i].id] = sol.x[i] != 0;
  OracleReplayPolicy rp(pick), rp2(pick);
  const SimResult r = run(t, feats(t), rp, c);
  CHECK(r.spilled == 0);
  CHECK(r.baseline_tco - r.realized_tco == doctest::Approx(sol.objective_value).epsilon(1e-9));
  std::ostringstream a1, a2;
  write_placements_csv(r, a1);
  write_placements_csv(run(t, feats(t), rp2, c), a2);
  CHECK(a1.str() == a2.str());

  OracleReplayPolicy missing({});
  CHECK_THROWS(run(t, feats(t), missing, c));
}
