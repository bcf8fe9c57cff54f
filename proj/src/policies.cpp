#include "tierlab/policies.hpp"

#include <algorithm>
#include <cmath>

namespace tierlab {

Decision FirstFitPolicy::on_arrival(const Job& job, const FeatureVector&, const Observation& obs) {
  return {static_cast<double>(job.peak_bytes) <= obs.free_bytes ? Device::Ssd : Device::Hdd, {}};
}

std::set<std::string> admission_set_rebuild(std::vector<CategoryStats> stats, double quota) {
  std::sort(stats.begin(), stats.end(), [](const CategoryStats& a, const CategoryStats& b) {
    if (a.savings != b.savings) return a.savings > b.savings;
    return a.key < b.key;
  });
  std::set<std::string> out;
  double used = 0.0;
  for (const auto& c : stats) {
    if (!(c.savings > 0.0)) break;
    if (used + c.peak_space > quota) break;
    used += c.peak_space;
    out.insert(c.key);
  }
  return out;
}

HeuristicPolicy::HeuristicPolicy(CostRates rates, HeuristicParams params) : rates_(rates), params_(params) {
  if (!(params_.rebuild_interval > 0.0)) throw PolicyError("rebuild interval must be > 0");
  if (!(params_.history_window > 0.0)) throw PolicyError("history window must be > 0");
}

std::vector<CategoryStats> HeuristicPolicy::trailing_stats(double now) const {
  std::map<std::string, std::vector<const Done*>> by_key;
  for (const auto& d : done_)
    if (d.end > now - params_.history_window && d.end <= now) by_key[d.key].push_back(&d);
  std::vector<CategoryStats> out;
  for (auto& [key, v] : by_key) {
    CategoryStats c;
    c.key = key;
    std::vector<std::pair<double, double>> ev;  // (time, +/-size), adds before removes at ties
    for (const Done* d : v) {
      c.savings += d->savings;
      ev.emplace_back(d->arrival, d->size);
      ev.emplace_back(d->end, -d->size);
    }
    std::sort(ev.begin(), ev.end(), [](const auto& a, const auto& b) {
      if (a.first != b.first) return a.first < b.first;
      return a.second > b.second;
    });
    double cur = 0.0;
    for (const auto& e : ev) {
      cur += e.second;
      c.peak_space = std::max(c.peak_space, cur);
    }
    out.push_back(c);
  }
  return out;
}

Decision HeuristicPolicy::on_arrival(const Job& job, const FeatureVector&, const Observation& obs) {
  if (obs.now >= next_rebuild_) {
    const double cutoff = obs.now - params_.history_window;
    std::erase_if(done_, [&](const Done& d) { return d.end <= cutoff; });
    admitted_ = admission_set_rebuild(trailing_stats(obs.now), obs.capacity);
    next_rebuild_ = obs.now + params_.rebuild_interval;
  }
  return {admitted_.count(key_of(job)) ? Device::Ssd : Device::Hdd, {}};
}

void HeuristicPolicy::on_end(const Job& job, const PlacementRecord&) {
  done_.push_back({key_of(job), job.arrival_time, job.end_time, static_cast<double>(job.peak_bytes),
                   tco_savings(job, rates_)});
}

LifetimeTtlPolicy::LifetimeTtlPolicy(std::shared_ptr<const LifetimePredictor> model, double ttl)
    : model_(std::move(model)), ttl_(ttl) {
  if (!model_) throw PolicyError("lifetime policy needs a trained lifetime model");
  if (!(ttl_ > 0.0)) throw PolicyError("ttl must be > 0");
}

Decision LifetimeTtlPolicy::on_arrival(const Job& job, const FeatureVector& features, const Observation&) {
  const double horizon = model_->mu(features) + model_->sigma(features);
  if (horizon < ttl_) return {Device::Ssd, job.arrival_time + horizon};
  return {Device::Hdd, {}};
}

void validate_adaptive_params(const AdaptiveParams& p) {
  if (!(p.lower >= 0.0 && p.lower < p.upper && p.upper <= 1.0))
    throw PolicyError("spillover range must satisfy 0 <= lower < upper <= 1");
  if (!(p.window > 0.0)) throw PolicyError("look-back window must be > 0");
  if (!(p.interval > 0.0)) throw PolicyError("decision interval must be > 0");
}

AdaptivePolicy::AdaptivePolicy(std::shared_ptr<const CategoryModel> model, AdaptiveParams params, std::string label)
    : model_(std::move(model)), params_(params), label_(std::move(label)) {
  if (!model_) throw PolicyError("adaptive policy needs a category model");
  validate_adaptive_params(params_);
  if (model_->categories() < 2) throw PolicyError("adaptive policy needs N >= 2");
  if (label_.empty()) label_ = "adaptive-" + model_->name();
}

Decision AdaptivePolicy::on_arrival(const Job& job, const FeatureVector& features, const Observation& obs) {
  const int n = model_->categories();
  if (obs.now >= last_decision_ + params_.interval) {
    const double h = obs.spillover(params_.window);
    if (h < params_.lower) act_ = std::max(1, act_ - 1);
    if (h > params_.upper) act_ = std::min(n - 1, act_ + 1);
    last_decision_ = obs.now;
    series_.push_back({obs.now, act_, h});
  }
  const int c = model_->predict(features);
  if (c < 0 || c >= n)
    throw PolicyError("model " + model_->name() + " predicted category " + std::to_string(c) + " for " + job.job_id);
  return {c >= act_ ? Device::Ssd : Device::Hdd, {}};
}

OracleReplayPolicy::OracleReplayPolicy(std::map<std::string, bool> on_ssd, std::string label)
    : on_ssd_(std::move(on_ssd)), label_(std::move(label)) {}

Decision OracleReplayPolicy::on_arrival(const Job& job, const FeatureVector&, const Observation&) {
  auto it = on_ssd_.find(job.job_id);
  if (it == on_ssd_.end()) throw PolicyError("oracle placement has no entry for job '" + job.job_id + "'");
  return {it->second ? Device::Ssd : Device::Hdd, {}};
}

}  // namespace tierlab
