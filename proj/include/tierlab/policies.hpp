#pragma once

#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "tierlab/category_model.hpp"
#include "tierlab/cost_model.hpp"
#include "tierlab/sim_engine.hpp"

namespace tierlab {

class PolicyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class AlwaysPolicy final : public PlacementPolicy {
 public:
  explicit AlwaysPolicy(Device d) : device_(d) {}
  std::string name() const override { return device_ == Device::Ssd ? "always-ssd" : "always-hdd"; }
  Decision on_arrival(const Job&, const FeatureVector&, const Observation&) override { return {device_, {}}; }

 private:
  Device device_;
};

// SSD iff the whole peak footprint fits in the free space right now.
class FirstFitPolicy final : public PlacementPolicy {
 public:
  std::string name() const override { return "firstfit"; }
  Decision on_arrival(const Job& job, const FeatureVector&, const Observation& obs) override;
};

struct CategoryStats {
  std::string key;
  double savings = 0.0;     // trailing TCO savings
  double peak_space = 0.0;  // trailing peak concurrent footprint, bytes
};

// Highest-savings categories first (ties by key); only positive savings;
// stops at the first category whose space would push the total past M.
std::set<std::string> admission_set_rebuild(std::vector<CategoryStats> stats, double quota);

struct HeuristicParams {
  double rebuild_interval = 900.0;
  double history_window = 86400.0;
};

// Admission set over (pipeline_id, step_name) keys, rebuilt periodically
// from completed jobs.
class HeuristicPolicy final : public PlacementPolicy {
 public:
  HeuristicPolicy(CostRates rates, HeuristicParams params = {});
  std::string name() const override { return "heuristic"; }
  Decision on_arrival(const Job& job, const FeatureVector& features, const Observation& obs) override;
  void on_end(const Job& job, const PlacementRecord& record) override;

  static std::string key_of(const Job& job) { return job.pipeline_id + "/" + job.step_name; }
  const std::set<std::string>& admission_set() const { return admitted_; }
  std::vector<CategoryStats> trailing_stats(double now) const;

 private:
  struct Done {
    std::string key;
    double arrival, end, size, savings;
  };
  CostRates rates_;
  HeuristicParams params_;
  std::vector<Done> done_;
  std::set<std::string> admitted_;
  double next_rebuild_ = 0.0;
};

// Admit when the predicted lifetime mu + sigma is strictly below the TTL;
// release the SSD bytes at arrival + mu + sigma.
class LifetimeTtlPolicy final : public PlacementPolicy {
 public:
  LifetimeTtlPolicy(std::shared_ptr<const LifetimePredictor> model, double ttl = 3600.0);
  std::string name() const override { return "lifetime"; }
  Decision on_arrival(const Job& job, const FeatureVector& features, const Observation& obs) override;

 private:
  std::shared_ptr<const LifetimePredictor> model_;
  double ttl_;
};

struct AdaptiveParams {
  double lower = 0.01;   // T_l
  double upper = 0.15;   // T_u
  double window = 900.0;  // t_w
  double interval = 900.0;  // t_l

  bool operator==(const AdaptiveParams&) const = default;
};

void validate_adaptive_params(const AdaptiveParams& p);

// Adaptive category selection: jobs whose predicted category reaches the
// admission category threshold (ACT) go to SSD. Every `interval` seconds
// the spillover share of recent SSD-scheduled jobs moves ACT by one step:
// down when below `lower` (admit more), up when above `upper`.
class AdaptivePolicy final : public PlacementPolicy {
 public:
  AdaptivePolicy(std::shared_ptr<const CategoryModel> model, AdaptiveParams params = {}, std::string label = "");
  std::string name() const override { return label_; }
  Decision on_arrival(const Job& job, const FeatureVector& features, const Observation& obs) override;
  std::vector<ActPoint> act_series() const override { return series_; }

  int act() const { return act_; }

 private:
  std::shared_ptr<const CategoryModel> model_;
  AdaptiveParams params_;
  std::string label_;
  int act_ = 1;
  double last_decision_ = 0.0;
  std::vector<ActPoint> series_;
};

// Replays precomputed placements by job_id.
class OracleReplayPolicy final : public PlacementPolicy {
 public:
  explicit OracleReplayPolicy(std::map<std::string, bool> on_ssd, std::string label = "oracle-replay");
  std::string name() const override { return label_; }
  Decision on_arrival(const Job& job, const FeatureVector& features, const Observation& obs) override;

 private:
  std::map<std::string, bool> on_ssd_;
  std::string label_;
};

}  // namespace tierlab
