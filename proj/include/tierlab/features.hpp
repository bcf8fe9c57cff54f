#pragma once

#include <array>
#include <string>
#include <string_view>
#include <vector>

#include "tierlab/cost_model.hpp"
#include "tierlab/trace.hpp"

namespace tierlab {

// A: historical system metrics, B: execution metadata, C: allocated
// resources, T: job timestamp.
enum class FeatureGroup : std::uint8_t { Historical = 0, Metadata = 1, Resources = 2, Timestamp = 3 };

inline constexpr std::array<FeatureGroup, 4> kAllFeatureGroups = {FeatureGroup::Historical, FeatureGroup::Metadata,
                                                                  FeatureGroup::Resources, FeatureGroup::Timestamp};

const char* to_string(FeatureGroup g);

struct NumericFeature {
  const char* name;
  FeatureGroup group;
};

// Layout of FeatureVector::numeric.
const std::vector<NumericFeature>& numeric_feature_layout();

enum NumericIndex : std::size_t {
  kHistAvgTcio = 0,
  kHistAvgSize,
  kHistAvgLifetime,
  kHistAvgIoDensity,
  kHistCount,
  kHistMissing,
  kNumWorkers,
  kNumWorkerThreads,
  kNumBuckets,
  kInitialNumBuckets,
  kNumShards,
  kRecordsWritten,
  kWeekday,
  kHourOfDay,
  kNumNumericFeatures
};

// Pre-execution view of a job. Token features carry a field prefix:
// "p:" pipeline, "u:" user, "s:" step, "m:" metadata substring.
struct FeatureVector {
  std::string job_id;
  std::string pipeline_id;
  std::vector<double> numeric;
  std::vector<std::string> tokens;

  bool operator==(const FeatureVector&) const = default;
};

// Splits on ASCII non-alphanumeric bytes. Bytes >= 0x80 count as
// alphanumeric so UTF-8 words stay whole.
std::vector<std::string> split_metadata(std::string_view s);

struct HistoryAggregate {
  double count = 0.0;
  double avg_tcio = 0.0;
  double avg_size = 0.0;
  double avg_lifetime = 0.0;
  double avg_io_density = 0.0;
};

FeatureVector make_features(const Job& job, const HistoryAggregate& history);

// One FeatureVector per job, aligned with trace.jobs. History aggregates
// use only same-pipeline jobs with end_time < arrival_time of the job.
std::vector<FeatureVector> build_features(const Trace& trace, const CostRates& rates);

}  // namespace tierlab
