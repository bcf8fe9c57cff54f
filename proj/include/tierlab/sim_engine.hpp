#pragma once

#include <functional>
#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tierlab/cost_model.hpp"
#include "tierlab/features.hpp"
#include "tierlab/trace.hpp"

namespace tierlab {

class SimError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// constant: a job holds its full peak footprint for its whole lifetime.
// linear_growth: the footprint grows linearly from 0 to peak over the first
// write_phase_fraction of the lifetime, then stays at peak.
enum class FootprintModel { Constant, LinearGrowth };

const char* to_string(FootprintModel m);
FootprintModel footprint_model_from_string(const std::string& s);

inline constexpr double kUnlimited = std::numeric_limits<double>::infinity();

struct SimConfig {
  double ssd_quota = kUnlimited;  // bytes
  FootprintModel footprint = FootprintModel::LinearGrowth;
  CostRates rates;
  bool record_act_series = false;
  double sample_interval = 3600.0;  // spillover_series spacing, seconds
  double sample_window = 900.0;     // look-back window of each sample
};

// SSD bytes held from `time` until the next point: bytes + slope * (t - time).
struct ResidencyPoint {
  double time = 0.0;
  double bytes = 0.0;
  double slope = 0.0;
};

struct PlacementRecord {
  std::string job_id;
  Device scheduled = Device::Hdd;
  std::optional<double> spill_start;  // t_s
  std::optional<double> evicted_at;   // TTL release of SSD bytes
  std::vector<ResidencyPoint> ssd_residency;
  double footprint_byte_seconds = 0.0;
  double ssd_byte_seconds = 0.0;
  double hdd_fraction = 1.0;  // share of byte-seconds held on HDD
  double baseline_tco = 0.0;  // all-HDD
  double baseline_tcio = 0.0;
  double realized_tco = 0.0;
  double realized_tcio = 0.0;

  double ssd_bytes_at(double t) const;
};

double footprint_at(const Job& job, FootprintModel model, double t);

struct SpilloverSample {
  double time = 0.0;
  double value = 0.0;
};

struct ActPoint {
  double time = 0.0;
  int act = 1;
  double spillover = 0.0;
};

struct SimResult {
  std::string policy;
  SimConfig config;
  std::vector<PlacementRecord> records;  // aligned with trace.jobs
  double baseline_tco = 0.0;
  double realized_tco = 0.0;
  double baseline_tcio = 0.0;
  double realized_tcio = 0.0;
  double tco_savings_percent = 0.0;   // 100 * (1 - realized / baseline)
  double tcio_savings_percent = 0.0;
  double peak_ssd_bytes = 0.0;
  std::size_t ssd_scheduled = 0;
  std::size_t spilled = 0;
  std::size_t evicted = 0;
  std::vector<SpilloverSample> spillover_series;
  std::vector<ActPoint> act_series;
};

struct Observation {
  double now = 0.0;
  double free_bytes = 0.0;
  double capacity = 0.0;
  // P_SpilloverTCIO over jobs with arrival in (now - window, now].
  std::function<double(double window)> spillover;
};

struct Decision {
  Device device = Device::Hdd;
  std::optional<double> evict_at;  // absolute time to release SSD bytes
};

class PlacementPolicy {
 public:
  virtual ~PlacementPolicy() = default;
  virtual std::string name() const = 0;
  virtual Decision on_arrival(const Job& job, const FeatureVector& features, const Observation& obs) = 0;
  virtual void on_end(const Job&, const PlacementRecord&) {}
  virtual std::vector<ActPoint> act_series() const { return {}; }
};

// `features` must be aligned with trace.jobs. At equal times arrivals are
// processed before releases, so intervals are closed like the oracle's.
SimResult run(const Trace& trace, const std::vector<FeatureVector>& features, PlacementPolicy& policy,
              const SimConfig& config);

// TCIO-seconds of an SSD-scheduled job that ended up on HDD by time t.
double spillover_tcio(const PlacementRecord& record, const Job& job, double t, const CostRates& rates,
                      FootprintModel model = FootprintModel::Constant);

// Sum of spillover_tcio over the history divided by the HDD TCIO the
// SSD-scheduled jobs would have accumulated by t; 0 when that is 0.
double spillover_percentage(const std::vector<std::pair<const PlacementRecord*, const Job*>>& history, double t,
                            const CostRates& rates, FootprintModel model = FootprintModel::Constant);

// spillover_percentage over the jobs with arrival in (t - window, t].
// `jobs` and `records` are aligned and sorted by arrival.
double observe_window(const std::vector<Job>& jobs, const std::vector<PlacementRecord>& records, double t,
                      double window, const CostRates& rates, FootprintModel model);

void write_placements_csv(const SimResult& result, std::ostream& out);
void write_summary_csv_header(std::ostream& out);
void write_summary_csv_row(const SimResult& result, std::ostream& out);

}  // namespace tierlab
