#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace tierlab {

// Raw I/O counters as observed by the job, before any cache or write
// coalescing effects are applied.
struct RawIoProfile {
  std::uint64_t read_ops = 0;
  std::uint64_t write_ops = 0;
  std::uint64_t read_bytes = 0;
  std::uint64_t write_bytes = 0;
  double cache_hit_fraction = 0.0;
  double mean_write_op_bytes = 0.0;

  bool operator==(const RawIoProfile&) const = default;
};

// Scheduler-assigned resources, known before the job starts.
struct ResourceFeatures {
  std::uint64_t num_workers = 0;
  std::uint64_t num_worker_threads = 0;
  std::uint64_t num_buckets = 0;
  std::uint64_t initial_num_buckets = 0;
  std::uint64_t num_shards = 0;
  std::uint64_t records_written = 0;
  int weekday = 0;  // 0 = Monday, UTC
  int hour_of_day = 0;

  bool operator==(const ResourceFeatures&) const = default;
};

// One shuffle job. Times are seconds since the trace epoch.
struct Job {
  std::string job_id;
  std::string pipeline_id;
  std::string user_id;
  std::string step_name;
  double arrival_time = 0.0;
  double end_time = 0.0;
  std::uint64_t peak_bytes = 0;
  double write_phase_fraction = 1.0;
  RawIoProfile raw_io;
  ResourceFeatures resources;
  std::vector<std::string> metadata_tokens;

  double lifetime() const { return end_time - arrival_time; }
  bool operator==(const Job&) const = default;
};

struct Trace {
  std::vector<Job> jobs;  // ascending arrival_time, ties by job_id
  std::int64_t epoch = 0;  // unix seconds of t = 0
  std::optional<std::uint64_t> generator_seed;

  bool operator==(const Trace&) const = default;
};

struct Violation {
  std::string job_id;
  std::string rule;
  std::string detail;
};

class TraceError : public std::runtime_error {
 public:
  TraceError(const std::string& msg, int line = 0)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

enum class UnknownFieldMode { Strict, Lenient };

// Weekday (0 = Monday) and hour of `t` seconds after `epoch`, in UTC.
int weekday_at(std::int64_t epoch, double t);
int hour_at(std::int64_t epoch, double t);

// Sorts by (arrival_time, job_id).
void sort_jobs(std::vector<Job>& jobs);

Trace parse_trace(std::istream& in, UnknownFieldMode mode = UnknownFieldMode::Strict);
Trace load_trace(const std::filesystem::path& path, UnknownFieldMode mode = UnknownFieldMode::Strict);
void write_trace(const Trace& trace, std::ostream& out);
void save_trace(const Trace& trace, const std::filesystem::path& path);

std::vector<Violation> validate_trace(const Trace& trace);

}  // namespace tierlab
