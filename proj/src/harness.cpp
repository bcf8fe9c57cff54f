#include "tierlab/harness.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <set>
#include <sstream>

#include "tierlab/config_file.hpp"
#include "tierlab/csv.hpp"
#include "tierlab/kernels.hpp"

namespace tierlab {

OracleSolution brute_force_oracle(const OracleInstance& inst) {
  const std::size_t n = inst.jobs.size();
  if (n > kBruteForceMaxJobs)
    throw HarnessError("brute force oracle takes at most " + std::to_string(kBruteForceMaxJobs) + " jobs, got " +
                       std::to_string(n));
  kernels::SubsetProblem p;
  p.capacity = inst.quota;
  std::set<double> points;
  for (const auto& j : inst.jobs) {
    p.gain.push_back(j.gain);
    p.size.push_back(j.size);
    points.insert(j.arrival);
  }
  for (double t : points) {
    std::uint64_t m = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (inst.jobs[i].arrival <= t && t <= inst.jobs[i].end) m |= std::uint64_t{1} << i;
    p.point_masks.push_back(m);
  }
  const kernels::SubsetBest best = kernels::best_subset_omp(p);
  OracleSolution s;
  s.x.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) s.x[i] = (best.mask >> i) & 1U ? 1 : 0;
  s.objective_value = objective_of(inst, s.x);
  s.status = OracleStatus::Optimal;
  s.bound = s.objective_value;
  s.nodes_explored = std::uint64_t{1} << n;
  s.components = 1;
  return s;
}

namespace {

std::optional<double> optional_time(const ConfigSection& s, const std::string& key) {
  const std::string v = s.get_string(key);
  if (v == "none") return std::nullopt;
  return s.get_double(key);
}

}  // namespace

MicroScript load_micro_script(const std::filesystem::path& path) {
  const ConfigFile cfg = load_config(path);
  const ConfigSection& g = cfg.global();
  g.require_known({"policy", "categories", "quota", "footprint", "act_range", "tw", "tl", "ttl", "rebuild_interval"});
  MicroScript s;
  s.name = path.stem().string();
  s.policy = g.get_string("policy");
  s.categories = static_cast<int>(g.get_int("categories", 2));
  const std::string q = g.get_string("quota", "inf");
  s.sim.ssd_quota = q == "inf" ? kUnlimited : g.get_double("quota");
  s.sim.footprint = footprint_model_from_string(g.get_string("footprint", "constant"));
  if (g.has("act_range")) {
    const auto r = g.get_double_list("act_range");
    if (r.size() != 2) throw HarnessError(path.string() + ": act_range needs two values");
    s.adaptive.lower = r[0];
    s.adaptive.upper = r[1];
  }
  s.adaptive.window = g.get_double("tw", s.adaptive.window);
  s.adaptive.interval = g.get_double("tl", s.adaptive.interval);
  s.ttl = g.get_double("ttl", s.ttl);
  s.heuristic.rebuild_interval = g.get_double("rebuild_interval", s.heuristic.rebuild_interval);

  for (const ConfigSection* js : cfg.of_kind("job")) {
    js->require_known({"arrival", "end", "size", "write_phase", "read_ops", "pipeline", "step", "category", "mu",
                       "sigma"});
    Job j;
    j.job_id = js->name;
    j.pipeline_id = js->get_string("pipeline", "p-" + js->name);
    j.user_id = "u0";
    j.step_name = js->get_string("step", "step");
    j.arrival_time = js->get_double("arrival");
    j.end_time = js->get_double("end");
    j.peak_bytes = static_cast<std::uint64_t>(js->get_int("size"));
    j.write_phase_fraction = js->get_double("write_phase", 1.0);
    j.raw_io.read_ops = static_cast<std::uint64_t>(js->get_int("read_ops"));
    if (js->has("category")) s.category[j.job_id] = static_cast<int>(js->get_int("category"));
    if (js->has("mu")) s.lifetime[j.job_id] = {js->get_double("mu"), js->get_double("sigma", 0.0)};
    s.trace.jobs.push_back(std::move(j));
  }
  if (s.trace.jobs.empty()) throw HarnessError(path.string() + ": no jobs");
  if (s.trace.jobs.size() > kBruteForceMaxJobs) throw HarnessError(path.string() + ": more than 20 jobs");
  sort_jobs(s.trace.jobs);
  return s;
}

MicroExpect load_micro_expect(const std::filesystem::path& path) {
  const ConfigFile cfg = load_config(path);
  MicroExpect e;
  for (const ConfigSection* js : cfg.of_kind("job")) {
    js->require_known({"device", "spill_start", "evicted_at"});
    JobExpect je;
    if (js->has("device")) {
      const std::string d = js->get_string("device");
      if (d != "ssd" && d != "hdd") throw HarnessError(path.string() + ": device must be ssd or hdd");
      je.device = d == "ssd" ? Device::Ssd : Device::Hdd;
    }
    if (js->has("spill_start")) {
      je.check_spill = true;
      je.spill_start = optional_time(*js, "spill_start");
    }
    if (js->has("evicted_at")) {
      je.check_evict = true;
      je.evicted_at = optional_time(*js, "evicted_at");
    }
    e.jobs[js->name] = je;
  }
  for (const ConfigSection* as : cfg.of_kind("act")) {
    as->require_known({"sequence", "times"});
    std::vector<int> seq;
    for (double v : as->get_double_list("sequence")) seq.push_back(static_cast<int>(v));
    e.act = seq;
    if (as->has("times")) e.act_times = as->get_double_list("times");
  }
  for (const ConfigSection* ss : cfg.of_kind("spillover")) {
    ss->require_known({"time", "window", "value"});
    e.spillover.push_back({ss->get_double("time"), ss->get_double("window"), ss->get_double("value")});
  }
  return e;
}

namespace {

std::unique_ptr<PlacementPolicy> make_script_policy(const MicroScript& s) {
  if (s.policy == "always-ssd") return std::make_unique<AlwaysPolicy>(Device::Ssd);
  if (s.policy == "always-hdd") return std::make_unique<AlwaysPolicy>(Device::Hdd);
  if (s.policy == "firstfit") return std::make_unique<FirstFitPolicy>();
  if (s.policy == "heuristic") return std::make_unique<HeuristicPolicy>(s.sim.rates, s.heuristic);
  if (s.policy == "lifetime")
    return std::make_unique<LifetimeTtlPolicy>(std::make_shared<ScriptedLifetime>(s.lifetime), s.ttl);
  if (s.policy == "adaptive")
    return std::make_unique<AdaptivePolicy>(std::make_shared<ScriptedCategoryModel>(s.category, s.categories),
                                            s.adaptive, "adaptive-scripted");
  throw HarnessError("script " + s.name + ": unknown policy '" + s.policy + "'");
}

std::string show(const std::optional<double>& v) { return v ? fmt_double(*v) : "none"; }

template <class T>
std::string join(const std::vector<T>& v) {
  std::ostringstream o;
  for (std::size_t i = 0; i < v.size(); ++i) o << (i ? ", " : "") << v[i];
  return o.str();
}

}  // namespace

ScriptOutcome scripted_policy_trace(const MicroScript& script, const MicroExpect& expect) {
  std::vector<FeatureVector> features;
  for (const Job& j : script.trace.jobs) features.push_back(make_features(j, {}));
  auto policy = make_script_policy(script);
  SimConfig cfg = script.sim;
  cfg.record_act_series = true;

  ScriptOutcome out;
  out.result = run(script.trace, features, *policy, cfg);
  const auto& jobs = script.trace.jobs;
  const auto& recs = out.result.records;

  for (const auto& [id, je] : expect.jobs) {
    auto it = std::find_if(jobs.begin(), jobs.end(), [&](const Job& j) { return j.job_id == id; });
    if (it == jobs.end()) {
      out.diffs.push_back(id + ": expected job is not in the script");
      continue;
    }
    const PlacementRecord& r = recs[static_cast<std::size_t>(it - jobs.begin())];
    if (je.device && *je.device != r.scheduled)
      out.diffs.push_back(id + ": device expected " + to_string(*je.device) + " got " + to_string(r.scheduled));
    if (je.check_spill && je.spill_start != r.spill_start)
      out.diffs.push_back(id + ": spill_start expected " + show(je.spill_start) + " got " + show(r.spill_start));
    if (je.check_evict && je.evicted_at != r.evicted_at)
      out.diffs.push_back(id + ": evicted_at expected " + show(je.evicted_at) + " got " + show(r.evicted_at));
  }

  if (expect.act) {
    std::vector<int> got;
    std::vector<double> times;
    for (const auto& p : out.result.act_series) {
      got.push_back(p.act);
      times.push_back(p.time);
    }
    if (got != *expect.act) out.diffs.push_back("act: expected [" + join(*expect.act) + "] got [" + join(got) + "]");
    if (expect.act_times && times != *expect.act_times)
      out.diffs.push_back("act times: expected [" + join(*expect.act_times) + "] got [" + join(times) + "]");
  }

  for (const auto& p : expect.spillover) {
    const double v = observe_window(jobs, recs, p.time, p.window, cfg.rates, cfg.footprint);
    if (v != p.value)
      out.diffs.push_back("spillover at t=" + fmt_double(p.time) + " window=" + fmt_double(p.window) + ": expected " +
                          fmt_double(p.value) + " got " + fmt_double(v));
  }
  return out;
}

}  // namespace tierlab
