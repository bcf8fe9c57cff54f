#include "tierlab/features.hpp"

#include <algorithm>
#include <cctype>
#include <map>

#include "tierlab/labeling.hpp"

namespace tierlab {

const char* to_string(FeatureGroup g) {
  switch (g) {
    case FeatureGroup::Historical: return "A_historical";
    case FeatureGroup::Metadata: return "B_metadata";
    case FeatureGroup::Resources: return "C_resources";
    case FeatureGroup::Timestamp: return "T_timestamp";
  }
  return "?";
}

const std::vector<NumericFeature>& numeric_feature_layout() {
  static const std::vector<NumericFeature> layout = {
      {"hist_avg_tcio", FeatureGroup::Historical},
      {"hist_avg_size", FeatureGroup::Historical},
      {"hist_avg_lifetime", FeatureGroup::Historical},
      {"hist_avg_io_density", FeatureGroup::Historical},
      {"hist_count", FeatureGroup::Historical},
      {"hist_missing", FeatureGroup::Historical},
      {"num_workers", FeatureGroup::Resources},
      {"num_worker_threads", FeatureGroup::Resources},
      {"num_buckets", FeatureGroup::Resources},
      {"initial_num_buckets", FeatureGroup::Resources},
      {"num_shards", FeatureGroup::Resources},
      {"records_written", FeatureGroup::Resources},
      {"weekday", FeatureGroup::Timestamp},
      {"hour_of_day", FeatureGroup::Timestamp},
  };
  return layout;
}

std::vector<std::string> split_metadata(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (unsigned char c : s) {
    if (c >= 0x80 || std::isalnum(c)) {
      cur.push_back(static_cast<char>(c));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

FeatureVector make_features(const Job& job, const HistoryAggregate& h) {
  FeatureVector f;
  f.job_id = job.job_id;
  f.pipeline_id = job.pipeline_id;
  f.numeric.assign(kNumNumericFeatures, 0.0);
  if (h.count > 0.0) {
    f.numeric[kHistAvgTcio] = h.avg_tcio;
    f.numeric[kHistAvgSize] = h.avg_size;
    f.numeric[kHistAvgLifetime] = h.avg_lifetime;
    f.numeric[kHistAvgIoDensity] = h.avg_io_density;
    f.numeric[kHistCount] = h.count;
  } else {
    f.numeric[kHistMissing] = 1.0;
  }
  const auto& r = job.resources;
  f.numeric[kNumWorkers] = static_cast<double>(r.num_workers);
  f.numeric[kNumWorkerThreads] = static_cast<double>(r.num_worker_threads);
  f.numeric[kNumBuckets] = static_cast<double>(r.num_buckets);
  f.numeric[kInitialNumBuckets] = static_cast<double>(r.initial_num_buckets);
  f.numeric[kNumShards] = static_cast<double>(r.num_shards);
  f.numeric[kRecordsWritten] = static_cast<double>(r.records_written);
  f.numeric[kWeekday] = r.weekday;
  f.numeric[kHourOfDay] = r.hour_of_day;

  f.tokens.push_back("p:" + job.pipeline_id);
  f.tokens.push_back("u:" + job.user_id);
  f.tokens.push_back("s:" + job.step_name);
  for (const auto& m : job.metadata_tokens)
    for (auto& piece : split_metadata(m)) f.tokens.push_back("m:" + piece);
  std::sort(f.tokens.begin(), f.tokens.end());
  f.tokens.erase(std::unique(f.tokens.begin(), f.tokens.end()), f.tokens.end());
  return f;
}

std::vector<FeatureVector> build_features(const Trace& trace, const CostRates& rates) {
  struct Done {
    double end;
    double tcio, size, lifetime, density;
  };
  struct PipelineHistory {
    std::vector<Done> done;  // sorted by end
    std::vector<double> s_tcio, s_size, s_life, s_density;
  };

  const auto& jobs = trace.jobs;
  std::map<std::string, PipelineHistory> by_pipeline;
  for (const auto& j : jobs) {
    const auto io = effective_io(j, rates);
    by_pipeline[j.pipeline_id].done.push_back({j.end_time, tcio_total(io, j.arrival_time, j.end_time, Device::Hdd, j.end_time),
                                               static_cast<double>(j.peak_bytes), j.lifetime(),
                                               io_density(j, rates)});
  }
  for (auto& [id, h] : by_pipeline) {
    std::stable_sort(h.done.begin(), h.done.end(), [](const Done& a, const Done& b) { return a.end < b.end; });
    const std::size_t n = h.done.size();
    h.s_tcio.assign(n + 1, 0.0);
    h.s_size.assign(n + 1, 0.0);
    h.s_life.assign(n + 1, 0.0);
    h.s_density.assign(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      h.s_tcio[i + 1] = h.s_tcio[i] + h.done[i].tcio;
      h.s_size[i + 1] = h.s_size[i] + h.done[i].size;
      h.s_life[i + 1] = h.s_life[i] + h.done[i].lifetime;
      h.s_density[i + 1] = h.s_density[i] + h.done[i].density;
    }
  }

  std::vector<const PipelineHistory*> hist(jobs.size());
  for (std::size_t i = 0; i < jobs.size(); ++i) hist[i] = &by_pipeline.at(jobs[i].pipeline_id);

  std::vector<FeatureVector> out(jobs.size());
  const auto n = static_cast<std::ptrdiff_t>(jobs.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const Job& j = jobs[static_cast<std::size_t>(i)];
    const PipelineHistory& h = *hist[static_cast<std::size_t>(i)];
    auto it = std::lower_bound(h.done.begin(), h.done.end(), j.arrival_time,
                               [](const Done& d, double t) { return d.end < t; });
    const auto k = static_cast<std::size_t>(it - h.done.begin());
    HistoryAggregate agg;
    if (k > 0) {
      const double c = static_cast<double>(k);
      agg.count = c;
      agg.avg_tcio = h.s_tcio[k] / c;
      agg.avg_size = h.s_size[k] / c;
      agg.avg_lifetime = h.s_life[k] / c;
      agg.avg_io_density = h.s_density[k] / c;
    }
    out[static_cast<std::size_t>(i)] = make_features(j, agg);
  }
  return out;
}

}  // namespace tierlab
