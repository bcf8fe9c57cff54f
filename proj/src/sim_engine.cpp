#include "tierlab/sim_engine.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <queue>

#include "tierlab/csv.hpp"

namespace tierlab {

const char* to_string(FootprintModel m) { return m == FootprintModel::Constant ? "constant" : "linear_growth"; }

FootprintModel footprint_model_from_string(const std::string& s) {
  if (s == "constant") return FootprintModel::Constant;
  if (s == "linear_growth") return FootprintModel::LinearGrowth;
  throw SimError("unknown footprint model '" + s + "' (constant|linear_growth)");
}

double PlacementRecord::ssd_bytes_at(double t) const {
  auto it = std::upper_bound(ssd_residency.begin(), ssd_residency.end(), t,
                             [](double v, const ResidencyPoint& p) { return v < p.time; });
  if (it == ssd_residency.begin()) return 0.0;
  --it;
  return it->bytes + it->slope * (t - it->time);
}

double footprint_at(const Job& job, FootprintModel model, double t) {
  const double s = static_cast<double>(job.peak_bytes);
  if (t < job.arrival_time) return 0.0;
  if (model == FootprintModel::Constant) return s;
  const double grow = job.write_phase_fraction * job.lifetime();
  const double x = t - job.arrival_time;
  return x >= grow ? s : s * x / grow;
}

static double footprint_byte_seconds(const Job& job, FootprintModel model) {
  const double s = static_cast<double>(job.peak_bytes);
  const double d = job.lifetime();
  return model == FootprintModel::Constant ? s * d : s * d * (1.0 - job.write_phase_fraction / 2.0);
}

double spillover_tcio(const PlacementRecord& record, const Job& job, double t, const CostRates& rates,
                      FootprintModel model) {
  if (t < job.arrival_time) throw SimError("spillover_tcio: t precedes arrival of " + job.job_id);
  if (record.scheduled != Device::Ssd || !record.spill_start) return 0.0;
  const double ts = *record.spill_start;
  if (t <= ts || t <= job.arrival_time) return 0.0;
  // Byte share on HDD because of the spill; a TTL release is not a spill,
  // so the share is frozen at the release instant.
  double at = t;
  if (record.evicted_at && *record.evicted_at < at) at = *record.evicted_at;
  at = std::min(at, job.end_time);
  double fraction = 1.0;
  const double fp = footprint_at(job, model, at);
  if (fp > 0.0) {
    const double ssd = record.evicted_at && *record.evicted_at <= at
                           ? record.ssd_bytes_at(std::nextafter(at, -kUnlimited))
                           : record.ssd_bytes_at(at);
    fraction = std::clamp(1.0 - ssd / fp, 0.0, 1.0);
  }
  const double time_fraction = (t - ts) / (t - job.arrival_time);
  return fraction * time_fraction * tcio_total(job, Device::Hdd, rates, t);
}

double spillover_percentage(const std::vector<std::pair<const PlacementRecord*, const Job*>>& history, double t,
                            const CostRates& rates, FootprintModel model) {
  double num = 0.0, den = 0.0;
  for (const auto& [rec, job] : history) {
    if (rec->scheduled != Device::Ssd || t < job->arrival_time) continue;
    num += spillover_tcio(*rec, *job, t, rates, model);
    den += tcio_total(*job, Device::Hdd, rates, t);
  }
  if (!(den > 0.0)) return 0.0;
  return std::clamp(num / den, 0.0, 1.0);
}

double observe_window(const std::vector<Job>& jobs, const std::vector<PlacementRecord>& records, double t,
                      double window, const CostRates& rates, FootprintModel model) {
  if (!(window > 0.0)) throw SimError("look-back window must be > 0");
  auto lo = std::upper_bound(jobs.begin(), jobs.end(), t - window,
                             [](double v, const Job& j) { return v < j.arrival_time; });
  auto hi = std::upper_bound(jobs.begin(), jobs.end(), t, [](double v, const Job& j) { return v < j.arrival_time; });
  std::vector<std::pair<const PlacementRecord*, const Job*>> hist;
  for (auto it = lo; it != hi; ++it) {
    const auto i = static_cast<std::size_t>(it - jobs.begin());
    hist.emplace_back(&records[i], &jobs[i]);
  }
  return spillover_percentage(hist, t, rates, model);
}

namespace {

enum EventKind : int { kGrowthEnd = 1, kEvict = 2, kEnd = 3 };

struct Event {
  double time;
  int kind;
  std::size_t job;
  bool operator>(const Event& o) const {
    if (time != o.time) return time > o.time;
    if (kind != o.kind) return kind > o.kind;
    return job > o.job;
  }
};

struct JobState {
  bool active = false;   // holds or grows SSD bytes
  bool growing = false;  // current growth lands on SSD
  double rate = 0.0;     // bytes/s while growing
  double grow_end = 0.0;
  double frozen = 0.0;   // SSD bytes when not growing
};

class Simulator {
 public:
  Simulator(const Trace& trace, const std::vector<FeatureVector>& features, PlacementPolicy& policy,
            const SimConfig& cfg)
      : jobs_(trace.jobs), features_(features), policy_(policy), cfg_(cfg) {
    if (features.size() != jobs_.size()) throw SimError("features are not aligned with the trace");
    if (!(cfg.ssd_quota >= 0.0)) throw SimError("ssd_quota must be >= 0");
    validate_rates(cfg.rates);
    state_.resize(jobs_.size());
    result_.records.resize(jobs_.size());
    result_.policy = policy.name();
    result_.config = cfg;
  }

  SimResult run() {
    const double inf = kUnlimited;
    std::size_t next_arrival = 0;
    while (true) {
      const double t_arr = next_arrival < jobs_.size() ? jobs_[next_arrival].arrival_time : inf;
      const double t_evt = queue_.empty() ? inf : queue_.top().time;
      const double t_next = std::min(t_arr, t_evt);
      double t_fill = inf;
      double rate = 0.0;
      const double used = used_bytes(now_, &rate);
      if (rate > 0.0 && std::isfinite(cfg_.ssd_quota))
        t_fill = now_ + std::max(0.0, cfg_.ssd_quota - used) / rate;
      if (t_next == inf && t_fill == inf) break;
      if (t_fill <= t_next) {
        fill(t_fill);
        continue;
      }
      advance(t_next);
      if (t_arr <= t_evt) {
        arrive(next_arrival++);
      } else {
        const Event e = queue_.top();
        queue_.pop();
        handle(e);
      }
    }
    finish();
    return std::move(result_);
  }

 private:
  double resident(std::size_t i, double t) const {
    const JobState& s = state_[i];
    if (!s.active) return 0.0;
    if (!s.growing) return s.frozen;
    const double x = std::min(t, s.grow_end) - jobs_[i].arrival_time;
    return std::min(s.rate * x, static_cast<double>(jobs_[i].peak_bytes));
  }

  double used_bytes(double t, double* growth_rate) const {
    double used = 0.0, rate = 0.0;
    for (std::size_t i : active_) {
      used += resident(i, t);
      if (state_[i].growing && t < state_[i].grow_end) rate += state_[i].rate;
    }
    if (growth_rate) *growth_rate = rate;
    return used;
  }

  void advance(double t) {
    now_ = t;
    double rate = 0.0;
    const double used = used_bytes(t, &rate);
    result_.peak_ssd_bytes = std::max(result_.peak_ssd_bytes, used);
    const double cap = cfg_.ssd_quota;
    // Growth times are only exact to one ulp of t; fast writers can overshoot
    // by rate * ulp between a fill and the next event.
    const double slack = 1e-9 * std::max(cap, 1.0) + 1e-6 + 4.0 * rate * (std::nextafter(t, kUnlimited) - t);
    if (std::isfinite(cap) && used > cap + slack)
      throw SimError("internal: SSD allocation exceeds the quota");
  }

  static void truncate_after(PlacementRecord& r, double t) {
    while (!r.ssd_residency.empty() && r.ssd_residency.back().time >= t) r.ssd_residency.pop_back();
  }

  // SSD is full: every job still growing into it spills from now on.
  void fill(double t) {
    now_ = std::max(now_, t);
    std::vector<std::size_t> frozen_now;
    for (std::size_t i : active_) {
      JobState& s = state_[i];
      if (!s.growing || now_ >= s.grow_end) continue;
      s.frozen = resident(i, now_);
      s.growing = false;
      frozen_now.push_back(i);
    }
    // Rounding in the fill time can leave the total a hair above the quota;
    // take it back from the latest arrivals.
    double over = used_bytes(now_, nullptr) - cfg_.ssd_quota;
    for (auto it = frozen_now.rbegin(); it != frozen_now.rend() && over > 0.0; ++it) {
      const double cut = std::min(over, state_[*it].frozen);
      state_[*it].frozen -= cut;
      over -= cut;
    }
    for (std::size_t i : frozen_now) {
      auto& r = result_.records[i];
      r.spill_start = now_;
      ++result_.spilled;
      truncate_after(r, now_);
      r.ssd_residency.push_back({now_, state_[i].frozen, 0.0});
    }
    advance(now_);
  }

  void arrive(std::size_t i) {
    const Job& job = jobs_[i];
    if (features_[i].job_id != job.job_id) throw SimError("features are not aligned with the trace at " + job.job_id);
    Observation obs;
    obs.now = now_;
    obs.capacity = cfg_.ssd_quota;
    obs.free_bytes = std::max(0.0, cfg_.ssd_quota - used_bytes(now_, nullptr));
    obs.spillover = [this](double window) {
      return observe_window(jobs_, result_.records, now_, window, cfg_.rates, cfg_.footprint);
    };
    const Decision d = policy_.on_arrival(job, features_[i], obs);
    if (d.device != Device::Hdd && d.device != Device::Ssd)
      throw SimError("policy " + policy_.name() + " returned an invalid device for " + job.job_id);

    auto& r = result_.records[i];
    r.job_id = job.job_id;
    r.scheduled = d.device;
    queue_.push({job.end_time, kEnd, i});
    if (d.device != Device::Ssd) return;

    ++result_.ssd_scheduled;
    if (d.evict_at) {
      if (!(*d.evict_at >= job.arrival_time))
        throw SimError("policy " + policy_.name() + " scheduled eviction before arrival for " + job.job_id);
      if (*d.evict_at < job.end_time) queue_.push({*d.evict_at, kEvict, i});
    }
    const double s = static_cast<double>(job.peak_bytes);
    const double free = obs.free_bytes;
    JobState& st = state_[i];
    if (cfg_.footprint == FootprintModel::Constant) {
      const double alloc = std::min(s, free);
      if (alloc < s) {
        r.spill_start = job.arrival_time;
        ++result_.spilled;
      }
      r.ssd_residency.push_back({job.arrival_time, alloc, 0.0});
      if (alloc > 0.0) {
        st.active = true;
        st.frozen = alloc;
        active_.push_back(i);
      }
      return;
    }
    const double grow = job.write_phase_fraction * job.lifetime();
    if (!(free > 0.0)) {
      r.spill_start = job.arrival_time;
      ++result_.spilled;
      r.ssd_residency.push_back({job.arrival_time, 0.0, 0.0});
      return;
    }
    st.active = true;
    st.growing = true;
    st.rate = s / grow;
    st.grow_end = job.arrival_time + grow;
    active_.push_back(i);
    r.ssd_residency.push_back({job.arrival_time, 0.0, st.rate});
    if (st.grow_end < job.end_time) {
      r.ssd_residency.push_back({st.grow_end, s, 0.0});
      queue_.push({st.grow_end, kGrowthEnd, i});
    }
  }

  void release(std::size_t i) {
    state_[i].active = false;
    state_[i].growing = false;
    active_.erase(std::find(active_.begin(), active_.end(), i));
  }

  void handle(const Event& e) {
    const std::size_t i = e.job;
    JobState& st = state_[i];
    auto& r = result_.records[i];
    switch (e.kind) {
      case kGrowthEnd:
        if (st.active && st.growing) {
          st.growing = false;
          st.frozen = static_cast<double>(jobs_[i].peak_bytes);
        }
        break;
      case kEvict:
        if (st.active) {
          release(i);
          r.evicted_at = e.time;
          ++result_.evicted;
          truncate_after(r, e.time);
          r.ssd_residency.push_back({e.time, 0.0, 0.0});
        }
        break;
      case kEnd:
        if (st.active) release(i);
        finalize(i);
        policy_.on_end(jobs_[i], r);
        break;
      default:
        break;
    }
  }

  void finalize(std::size_t i) {
    const Job& job = jobs_[i];
    auto& r = result_.records[i];
    r.job_id = job.job_id;
    truncate_after(r, job.end_time);
    const auto io = effective_io(job, cfg_.rates);
    const double tco_hdd = tco_terms(io, job.peak_bytes, Device::Hdd, cfg_.rates).total();
    r.baseline_tco = tco_hdd;
    r.baseline_tcio = tcio_total(io, job.arrival_time, job.end_time, Device::Hdd, job.end_time);
    r.footprint_byte_seconds = footprint_byte_seconds(job, cfg_.footprint);
    if (r.scheduled != Device::Ssd) {
      r.hdd_fraction = 1.0;
      r.realized_tco = r.baseline_tco;
      r.realized_tcio = r.baseline_tcio;
      return;
    }
    double ssd = 0.0;
    for (std::size_t k = 0; k < r.ssd_residency.size(); ++k) {
      const auto& p = r.ssd_residency[k];
      const double until = k + 1 < r.ssd_residency.size() ? r.ssd_residency[k + 1].time : job.end_time;
      const double dt = until - p.time;
      ssd += p.bytes * dt + 0.5 * p.slope * dt * dt;
    }
    r.ssd_byte_seconds = ssd;
    if (!r.spill_start && !r.evicted_at) {
      r.hdd_fraction = 0.0;
    } else {
      r.hdd_fraction = std::clamp(1.0 - ssd / r.footprint_byte_seconds, 0.0, 1.0);
    }
    const double tco_ssd = tco_terms(io, job.peak_bytes, Device::Ssd, cfg_.rates).total();
    const double phi = r.hdd_fraction;
    if (phi == 1.0) {
      r.realized_tco = tco_hdd;
    } else if (phi == 0.0) {
      r.realized_tco = tco_ssd;
    } else {
      r.realized_tco = (1.0 - phi) * tco_ssd + phi * tco_hdd;
    }
    r.realized_tcio = phi * r.baseline_tcio;
  }

  void finish() {
    double last = 0.0;
    for (std::size_t i = 0; i < jobs_.size(); ++i) {
      const auto& r = result_.records[i];
      result_.baseline_tco += r.baseline_tco;
      result_.realized_tco += r.realized_tco;
      result_.baseline_tcio += r.baseline_tcio;
      result_.realized_tcio += r.realized_tcio;
      last = std::max(last, jobs_[i].end_time);
    }
    result_.tco_savings_percent =
        result_.baseline_tco != 0.0 ? 100.0 * (1.0 - result_.realized_tco / result_.baseline_tco) : 0.0;
    result_.tcio_savings_percent =
        result_.baseline_tcio != 0.0 ? 100.0 * (1.0 - result_.realized_tcio / result_.baseline_tcio) : 0.0;
    if (cfg_.sample_interval > 0.0) {
      for (double t = cfg_.sample_interval; t <= last; t += cfg_.sample_interval)
        result_.spillover_series.push_back(
            {t, observe_window(jobs_, result_.records, t, cfg_.sample_window, cfg_.rates, cfg_.footprint)});
    }
    if (cfg_.record_act_series) result_.act_series = policy_.act_series();
  }

  const std::vector<Job>& jobs_;
  const std::vector<FeatureVector>& features_;
  PlacementPolicy& policy_;
  const SimConfig& cfg_;
  std::vector<JobState> state_;
  std::vector<std::size_t> active_;
  std::priority_queue<Event, std::vector<Event>, std::greater<Event>> queue_;
  double now_ = 0.0;
  SimResult result_;
};

std::string opt(const std::optional<double>& v) { return v ? fmt_double(*v) : ""; }

}  // namespace

SimResult run(const Trace& trace, const std::vector<FeatureVector>& features, PlacementPolicy& policy,
              const SimConfig& config) {
  Simulator sim(trace, features, policy, config);
  return sim.run();
}

void write_placements_csv(const SimResult& result, std::ostream& out) {
  out << "job_id,scheduled,spill_start,evicted_at,hdd_fraction,baseline_tco,realized_tco,baseline_tcio,"
         "realized_tcio\n";
  for (const auto& r : result.records) {
    out << csv_escape(r.job_id) << ',' << to_string(r.scheduled) << ',' << opt(r.spill_start) << ','
        << opt(r.evicted_at) << ',' << fmt_double(r.hdd_fraction) << ',' << fmt_double(r.baseline_tco) << ','
        << fmt_double(r.realized_tco) << ',' << fmt_double(r.baseline_tcio) << ',' << fmt_double(r.realized_tcio)
        << '\n';
  }
}

void write_summary_csv_header(std::ostream& out) {
  out << "policy,footprint,ssd_quota,jobs,ssd_scheduled,spilled,evicted,baseline_tco,realized_tco,"
         "tco_savings_pct,baseline_tcio,realized_tcio,tcio_savings_pct,peak_ssd_bytes\n";
}

void write_summary_csv_row(const SimResult& r, std::ostream& out) {
  out << csv_escape(r.policy) << ',' << to_string(r.config.footprint) << ',' << fmt_double(r.config.ssd_quota) << ','
      << r.records.size() << ',' << r.ssd_scheduled << ',' << r.spilled << ',' << r.evicted << ','
      << fmt_double(r.baseline_tco) << ',' << fmt_double(r.realized_tco) << ',' << fmt_double(r.tco_savings_percent)
      << ',' << fmt_double(r.baseline_tcio) << ',' << fmt_double(r.realized_tcio) << ','
      << fmt_double(r.tcio_savings_percent) << ',' << fmt_double(r.peak_ssd_bytes) << '\n';
}

}  // namespace tierlab
