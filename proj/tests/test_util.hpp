#pragma once

#include <filesystem>
#include <string>

#include "tierlab/features.hpp"
#include "tierlab/rng.hpp"
#include "tierlab/trace.hpp"
#include "tierlab/workload_gen.hpp"

namespace testutil {

inline std::filesystem::path fixtures() { return TIERLAB_FIXTURES; }

// A read-only job whose calendar fields agree with `epoch`.
inline tierlab::Job job(const std::string& id, double a, double e, std::uint64_t size, std::uint64_t read_ops = 0,
                        const std::string& pipeline = "p", std::int64_t epoch = 0) {
  tierlab::Job j;
  j.job_id = id;
  j.pipeline_id = pipeline;
  j.user_id = "u";
  j.step_name = "s";
  j.arrival_time = a;
  j.end_time = e;
  j.peak_bytes = size;
  j.raw_io.read_ops = read_ops;
  j.resources.weekday = tierlab::weekday_at(epoch, a);
  j.resources.hour_of_day = tierlab::hour_at(epoch, a);
  return j;
}

inline tierlab::Trace trace_of(std::vector<tierlab::Job> jobs, std::int64_t epoch = 0) {
  tierlab::Trace t;
  t.epoch = epoch;
  t.jobs = std::move(jobs);
  tierlab::sort_jobs(t.jobs);
  return t;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto p = std::filesystem::temp_directory_path() / ("tierlab_test_" + name);
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

// Noise-free reference mix labelled by archetype: the "workload=<tag>"
// metadata token determines the label exactly.
struct Labelled {
  std::vector<tierlab::FeatureVector> x;
  std::vector<int> y;
};

inline Labelled separable_set(std::uint64_t seed, double duration) {
  auto cfg = tierlab::default_mix(seed, duration);
  for (auto& a : cfg.archetypes) a.feature_noise = 0.0;
  const auto t = tierlab::generate(cfg);
  Labelled out;
  const auto f = tierlab::build_features(t, tierlab::CostRates{});
  for (std::size_t i = 0; i < t.jobs.size(); ++i) {
    const std::string tag = t.jobs[i].job_id.substr(0, t.jobs[i].job_id.find('-'));
    int k = 0;
    for (std::size_t a = 0; a < cfg.archetypes.size(); ++a)
      if (tierlab::archetype_tag(cfg.archetypes[a].name) == tag) k = static_cast<int>(a);
    out.x.push_back(f[i]);
    out.y.push_back(k);
  }
  return out;
}

}  // namespace testutil
