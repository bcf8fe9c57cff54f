#include <doctest.h>

#include <sstream>

#include "test_util.hpp"
#include "tierlab/policies.hpp"
#include "tierlab/sim_engine.hpp"
#include "tierlab/workload_gen.hpp"

using namespace tierlab;
using testutil::job;
using testutil::trace_of;

namespace {

std::vector<FeatureVector> feats(const Trace& t) { return build_features(t, CostRates{}); }

SimResult run_with(const Trace& t, PlacementPolicy& p, double quota, FootprintModel m) {
  SimConfig c;
  c.ssd_quota = quota;
  c.footprint = m;
  return run(t, feats(t), p, c);
}

Trace random_trace(Rng& rng, int n) {
  std::vector<Job> jobs;
  for (int i = 0; i < n; ++i) {
    const double a = std::floor(rng.uniform(0, 2000));
    Job j = job("j" + std::to_string(i), a, a + 1 + std::floor(rng.uniform(0, 800)), 1 + rng.below(1000),
                rng.below(5000), "p" + std::to_string(rng.below(3)));
    j.write_phase_fraction = rng.uniform(0.1, 1.0);
    jobs.push_back(j);
  }
  return trace_of(jobs);
}

}  // namespace

TEST_CASE("footprint_at") {
  Job j = job("a", 100, 200, 1000);
  j.write_phase_fraction = 0.5;
  CHECK(footprint_at(j, FootprintModel::Constant, 150) == 1000);
  CHECK(footprint_at(j, FootprintModel::LinearGrowth, 100) == 0);
  CHECK(footprint_at(j, FootprintModel::LinearGrowth, 125) == doctest::Approx(500));
  CHECK(footprint_at(j, FootprintModel::LinearGrowth, 190) == 1000);
  CHECK(footprint_model_from_string("constant") == FootprintModel::Constant);
  CHECK_THROWS_AS(footprint_model_from_string("cubic"), SimError);
}

TEST_CASE("M = 0: every policy saves nothing") {
  Rng rng(1);
  const Trace t = random_trace(rng, 30);
  for (auto m : {FootprintModel::Constant, FootprintModel::LinearGrowth}) {
    AlwaysPolicy ssd(Device::Ssd);
    FirstFitPolicy ff;
    for (PlacementPolicy* p : std::initializer_list<PlacementPolicy*>{&ssd, &ff}) {
      const SimResult r = run_with(t, *p, 0.0, m);
      CHECK(r.tco_savings_percent == doctest::Approx(0.0));
      CHECK(r.tcio_savings_percent == doctest::Approx(0.0));
      CHECK(r.peak_ssd_bytes == 0.0);
    }
  }
}

TEST_CASE("M >= total size with always-SSD: no spills, all TCIO saved") {
  Rng rng(2);
  const Trace t = random_trace(rng, 30);
  double total = 0;
  for (const auto& j : t.jobs) total += static_cast<double>(j.peak_bytes);
  AlwaysPolicy ssd(Device::Ssd);
  for (auto m : {FootprintModel::Constant, FootprintModel::LinearGrowth}) {
    const SimResult r = run_with(t, ssd, total, m);
    CHECK(r.spilled == 0);
    CHECK(r.realized_tcio == 0.0);
    CHECK(r.tcio_savings_percent == doctest::Approx(100.0));
    for (const auto& rec : r.records) CHECK_FALSE(rec.spill_start);
  }
}

TEST_CASE("two 60-byte jobs, M = 100: the second spills 20 bytes at arrival") {
  const Trace t = trace_of({job("a", 0, 100, 60, 10), job("b", 10, 80, 60, 10)});
  AlwaysPolicy ssd(Device::Ssd);
  const SimResult r = run_with(t, ssd, 100, FootprintModel::Constant);
  CHECK_FALSE(r.records[0].spill_start);
  REQUIRE(r.records[1].spill_start);
  CHECK(*r.records[1].spill_start == 10);
  CHECK(r.records[1].ssd_bytes_at(20) == 40);
  CHECK(r.records[0].ssd_bytes_at(20) == 60);
  CHECK(r.peak_ssd_bytes == 100);
  CHECK(r.spilled == 1);
  // b held 40 of 60 bytes on SSD.
  CHECK(r.records[1].hdd_fraction == doctest::Approx(20.0 / 60.0));
}

TEST_CASE("always-HDD equals the baseline") {
  Rng rng(3);
  const Trace t = random_trace(rng, 40);
  AlwaysPolicy hdd(Device::Hdd);
  const SimResult r = run_with(t, hdd, kUnlimited, FootprintModel::LinearGrowth);
  CHECK(r.realized_tco == doctest::Approx(r.baseline_tco));
  CHECK(r.realized_tcio == doctest::Approx(r.baseline_tcio));
  CHECK(r.ssd_scheduled == 0);
}

TEST_CASE("spillover_tcio examples") {
  const CostRates rates;
  const Job j = job("a", 0, 100, 10, 200);  // TCIO(100) = 2.0
  PlacementRecord hdd;
  hdd.scheduled = Device::Hdd;
  CHECK(spillover_tcio(hdd, j, 100, rates) == 0.0);

  PlacementRecord full;
  full.scheduled = Device::Ssd;
  full.spill_start = 50;
  full.ssd_residency = {{0, 0, 0}};
  CHECK(spillover_tcio(full, j, 50, rates) == 0.0);
  CHECK(spillover_tcio(full, j, 100, rates) == doctest::Approx(1.0));
  CHECK_THROWS_AS(spillover_tcio(full, j, -1, rates), SimError);

  // Half the bytes stayed on SSD: half the share.
  PlacementRecord half = full;
  half.ssd_residency = {{0, 5, 0}};
  CHECK(spillover_tcio(half, j, 100, rates) == doctest::Approx(0.5));
}

TEST_CASE("spillover_percentage and observe_window") {
  const CostRates rates;
  CHECK(spillover_percentage({}, 10, rates) == 0.0);

  const Job a = job("a", 0, 100, 10, 200);
  PlacementRecord ra;
  ra.scheduled = Device::Ssd;
  ra.spill_start = 0;
  ra.ssd_residency = {{0, 0, 0}};
  CHECK(spillover_percentage({{&ra, &a}}, 60, rates) == doctest::Approx(1.0));

  PlacementRecord clean;
  clean.scheduled = Device::Ssd;
  clean.ssd_residency = {{0, 10, 0}};
  CHECK(spillover_percentage({{&clean, &a}}, 60, rates) == 0.0);

  // a spilled, b clean; windows pick out arrivals in (t - w, t].
  const std::vector<Job> jobs = {a, job("b", 50, 100, 10, 200)};
  PlacementRecord rb = clean;
  rb.ssd_residency = {{50, 10, 0}};
  const std::vector<PlacementRecord> recs = {ra, rb};
  CHECK(observe_window(jobs, recs, 90, 30, rates, FootprintModel::Constant) == 0.0);
  CHECK(observe_window(jobs, recs, 90, 5, rates, FootprintModel::Constant) == 0.0);
  CHECK(observe_window(jobs, recs, 90, 100, rates, FootprintModel::Constant) ==
        doctest::Approx(spillover_percentage({{&ra, &jobs[0]}, {&rb, &jobs[1]}}, 90, rates)));
  // a alone: the singleton ratio.
  CHECK(observe_window(jobs, recs, 40, 41, rates, FootprintModel::Constant) ==
        doctest::Approx(spillover_percentage({{&ra, &jobs[0]}}, 40, rates)));
  // Arrival exactly at t - w is outside the window.
  CHECK(observe_window(jobs, recs, 40, 40, rates, FootprintModel::Constant) == 0.0);
  CHECK_THROWS_AS(observe_window(jobs, recs, 40, 0, rates, FootprintModel::Constant), SimError);
}

TEST_CASE("property: capacity, spillover range, accounting on random traces") {
  Rng rng(4);
  for (int it = 0; it < 60; ++it) {
    const Trace t = random_trace(rng, 5 + static_cast<int>(rng.below(40)));
    const double quota = std::floor(rng.uniform(0, 4000));
    const auto m = rng.uniform() < 0.5 ? FootprintModel::Constant : FootprintModel::LinearGrowth;
    AlwaysPolicy ssd(Device::Ssd);
    FirstFitPolicy ff;
    for (PlacementPolicy* p : std::initializer_list<PlacementPolicy*>{&ssd, &ff}) {
      SimConfig c;
      c.ssd_quota = quota;
      c.footprint = m;
      c.sample_interval = 100;
      c.sample_window = 300;
      const SimResult r = run(t, feats(t), *p, c);
      CHECK(r.peak_ssd_bytes <= quota * (1 + 1e-12) + 1e-9);
      for (const auto& s : r.spillover_series) {
        CHECK(s.value >= 0.0);
        CHECK(s.value <= 1.0);
      }
      for (std::size_t i = 0; i < r.records.size(); ++i) {
        const auto& rec = r.records[i];
        CHECK(rec.hdd_fraction >= 0.0);
        CHECK(rec.hdd_fraction <= 1.0 + 1e-12);
        for (double q = t.jobs[i].arrival_time; q <= t.jobs[i].end_time; q += 37)
          CHECK(rec.ssd_bytes_at(q) <= footprint_at(t.jobs[i], m, q) * (1 + 1e-12) + 1e-9);
        if (rec.scheduled == Device::Hdd) CHECK(rec.realized_tcio == doctest::Approx(rec.baseline_tcio));
      }
      double tco = 0;
      for (const auto& rec : r.records) tco += rec.realized_tco;
      CHECK(r.realized_tco == doctest::Approx(tco));
      // FirstFit never spills in constant mode.
      if (p == &ff && m == FootprintModel::Constant) CHECK(r.spilled == 0);
    }
  }
}

TEST_CASE("determinism and misaligned features") {
  Rng rng(5);
  const Trace t = random_trace(rng, 30);
  FirstFitPolicy a, b;
  SimConfig c;
  c.ssd_quota = 1500;
  std::ostringstream x, y;
  write_placements_csv(run(t, feats(t), a, c), x);
  write_placements_csv(run(t, feats(t), b, c), y);
  CHECK(x.str() == y.str());
  auto f = feats(t);
  f.pop_back();
  FirstFitPolicy d;
  CHECK_THROWS_AS(run(t, f, d, c), SimError);
}

TEST_CASE("tiny quota with fast writers late in the trace stays within the quota") {
  // One ulp of t near 1.2e6 s times ~1e9 B/s growth exceeds a 1-byte quota.
  std::vector<Job> jobs;
  Rng rng(6);
  for (int i = 0; i < 200; ++i) {
    const double a = 1.2e6 + std::floor(rng.uniform(0, 5000)) + rng.uniform();
    Job j = job("f" + std::to_string(i), a, a + 50 + rng.uniform(0, 200), 100'000'000'000ull + rng.below(1'000'000'000),
                10);
    j.write_phase_fraction = rng.uniform(0.2, 1.0);
    jobs.push_back(j);
  }
  const Trace t = trace_of(jobs);
  for (double quota : {1.0, 3.0, 1e6}) {
    AlwaysPolicy ssd(Device::Ssd);
    SimResult r;
    REQUIRE_NOTHROW(r = run_with(t, ssd, quota, FootprintModel::LinearGrowth));
    CHECK(r.peak_ssd_bytes <= quota + 1.0);
    for (const auto& rec : r.records)
      for (const auto& p : rec.ssd_residency) CHECK(p.bytes <= quota);
  }
}
