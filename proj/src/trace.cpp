#include "tierlab/trace.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "json.hpp"

namespace tierlab {

namespace {

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

constexpr const char* kFormatKey = "tierlab_trace";
constexpr int kFormatVersion = 1;

const std::set<std::string> kHeaderKeys = {kFormatKey, "epoch", "generator_seed"};
const std::set<std::string> kJobKeys = {"job_id",     "pipeline_id",          "user_id", "step_name",
                                        "arrival_time", "end_time",           "peak_bytes",
                                        "write_phase_fraction", "raw_io", "resources", "metadata_tokens"};
const std::set<std::string> kIoKeys = {"read_ops",   "write_ops",          "read_bytes",
                                       "write_bytes", "cache_hit_fraction", "mean_write_op_bytes"};
const std::set<std::string> kResourceKeys = {"num_workers", "num_worker_threads", "num_buckets",
                                             "initial_num_buckets", "num_shards", "records_written",
                                             "weekday", "hour_of_day"};

void check_keys(const json& obj, const std::set<std::string>& known, const char* what, UnknownFieldMode mode,
                int line) {
  for (const auto& [k, v] : obj.items()) {
    if (known.count(k)) continue;
    if (mode == UnknownFieldMode::Strict) throw TraceError(std::string("unknown field '") + k + "' in " + what, line);
    std::cerr << "warning: line " << line << ": ignoring unknown field '" << k << "' in " << what << "\n";
  }
}

const json& field(const json& obj, const char* key, int line) {
  auto it = obj.find(key);
  if (it == obj.end()) throw TraceError(std::string("missing field '") + key + "'", line);
  return *it;
}

std::uint64_t get_u64(const json& obj, const char* key, int line) {
  const json& v = field(obj, key, line);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) throw TraceError(std::string("field '") + key + "' must be non-negative", line);
  throw TraceError(std::string("field '") + key + "' must be an integer", line);
}

int get_int(const json& obj, const char* key, int line) {
  const json& v = field(obj, key, line);
  if (!v.is_number_integer()) throw TraceError(std::string("field '") + key + "' must be an integer", line);
  return v.get<int>();
}

double get_real(const json& obj, const char* key, int line) {
  const json& v = field(obj, key, line);
  if (!v.is_number()) throw TraceError(std::string("field '") + key + "' must be a number", line);
  double d = v.get<double>();
  if (!std::isfinite(d)) throw TraceError(std::string("field '") + key + "' must be finite", line);
  return d;
}

std::string get_str(const json& obj, const char* key, int line) {
  const json& v = field(obj, key, line);
  if (!v.is_string()) throw TraceError(std::string("field '") + key + "' must be a string", line);
  return v.get<std::string>();
}

Job parse_job(const json& obj, UnknownFieldMode mode, int line) {
  if (!obj.is_object()) throw TraceError("job record must be a JSON object", line);
  check_keys(obj, kJobKeys, "job", mode, line);
  Job j;
  j.job_id = get_str(obj, "job_id", line);
  j.pipeline_id = get_str(obj, "pipeline_id", line);
  j.user_id = get_str(obj, "user_id", line);
  j.step_name = get_str(obj, "step_name", line);
  j.arrival_time = get_real(obj, "arrival_time", line);
  j.end_time = get_real(obj, "end_time", line);
  j.peak_bytes = get_u64(obj, "peak_bytes", line);
  j.write_phase_fraction = get_real(obj, "write_phase_fraction", line);

  const json& io = field(obj, "raw_io", line);
  if (!io.is_object()) throw TraceError("field 'raw_io' must be an object", line);
  check_keys(io, kIoKeys, "raw_io", mode, line);
  j.raw_io.read_ops = get_u64(io, "read_ops", line);
  j.raw_io.write_ops = get_u64(io, "write_ops", line);
  j.raw_io.read_bytes = get_u64(io, "read_bytes", line);
  j.raw_io.write_bytes = get_u64(io, "write_bytes", line);
  j.raw_io.cache_hit_fraction = get_real(io, "cache_hit_fraction", line);
  j.raw_io.mean_write_op_bytes = get_real(io, "mean_write_op_bytes", line);

  const json& res = field(obj, "resources", line);
  if (!res.is_object()) throw TraceError("field 'resources' must be an object", line);
  check_keys(res, kResourceKeys, "resources", mode, line);
  j.resources.num_workers = get_u64(res, "num_workers", line);
  j.resources.num_worker_threads = get_u64(res, "num_worker_threads", line);
  j.resources.num_buckets = get_u64(res, "num_buckets", line);
  j.resources.initial_num_buckets = get_u64(res, "initial_num_buckets", line);
  j.resources.num_shards = get_u64(res, "num_shards", line);
  j.resources.records_written = get_u64(res, "records_written", line);
  j.resources.weekday = get_int(res, "weekday", line);
  j.resources.hour_of_day = get_int(res, "hour_of_day", line);

  const json& toks = field(obj, "metadata_tokens", line);
  if (!toks.is_array()) throw TraceError("field 'metadata_tokens' must be an array", line);
  for (const auto& t : toks) {
    if (!t.is_string()) throw TraceError("metadata token must be a string", line);
    j.metadata_tokens.push_back(t.get<std::string>());
  }
  return j;
}

ordered_json job_to_json(const Job& j) {
  ordered_json io;
  io["read_ops"] = j.raw_io.read_ops;
  io["write_ops"] = j.raw_io.write_ops;
  io["read_bytes"] = j.raw_io.read_bytes;
  io["write_bytes"] = j.raw_io.write_bytes;
  io["cache_hit_fraction"] = j.raw_io.cache_hit_fraction;
  io["mean_write_op_bytes"] = j.raw_io.mean_write_op_bytes;

  ordered_json res;
  res["num_workers"] = j.resources.num_workers;
  res["num_worker_threads"] = j.resources.num_worker_threads;
  res["num_buckets"] = j.resources.num_buckets;
  res["initial_num_buckets"] = j.resources.initial_num_buckets;
  res["num_shards"] = j.resources.num_shards;
  res["records_written"] = j.resources.records_written;
  res["weekday"] = j.resources.weekday;
  res["hour_of_day"] = j.resources.hour_of_day;

  ordered_json o;
  o["job_id"] = j.job_id;
  o["pipeline_id"] = j.pipeline_id;
  o["user_id"] = j.user_id;
  o["step_name"] = j.step_name;
  o["arrival_time"] = j.arrival_time;
  o["end_time"] = j.end_time;
  o["peak_bytes"] = j.peak_bytes;
  o["write_phase_fraction"] = j.write_phase_fraction;
  o["raw_io"] = std::move(io);
  o["resources"] = std::move(res);
  o["metadata_tokens"] = j.metadata_tokens;
  return o;
}

}  // namespace

int weekday_at(std::int64_t epoch, double t) {
  const double abs = static_cast<double>(epoch) + t;
  auto day = static_cast<std::int64_t>(std::floor(abs / 86400.0));
  // 1970-01-01 was a Thursday (index 3 with Monday = 0).
  auto w = (day + 3) % 7;
  return static_cast<int>(w < 0 ? w + 7 : w);
}

int hour_at(std::int64_t epoch, double t) {
  const double abs = static_cast<double>(epoch) + t;
  double sod = abs - 86400.0 * std::floor(abs / 86400.0);
  return std::clamp(static_cast<int>(sod / 3600.0), 0, 23);
}

void sort_jobs(std::vector<Job>& jobs) {
  std::sort(jobs.begin(), jobs.end(), [](const Job& a, const Job& b) {
    if (a.arrival_time != b.arrival_time) return a.arrival_time < b.arrival_time;
    return a.job_id < b.job_id;
  });
}

Trace parse_trace(std::istream& in, UnknownFieldMode mode) {
  Trace trace;
  std::string line;
  int lineno = 0;
  bool have_header = false;
  std::map<std::string, int> seen;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw TraceError(std::string("malformed JSON: ") + e.what(), lineno);
    }
    if (!have_header) {
      if (!obj.is_object() || !obj.contains(kFormatKey))
        throw TraceError("first record must be the trace header", lineno);
      check_keys(obj, kHeaderKeys, "header", mode, lineno);
      if (get_int(obj, kFormatKey, lineno) != kFormatVersion)
        throw TraceError("unsupported trace format version", lineno);
      const json& ep = field(obj, "epoch", lineno);
      if (!ep.is_number_integer()) throw TraceError("field 'epoch' must be an integer", lineno);
      trace.epoch = ep.get<std::int64_t>();
      if (auto it = obj.find("generator_seed"); it != obj.end() && !it->is_null()) {
        if (!it->is_number_unsigned()) throw TraceError("field 'generator_seed' must be a non-negative integer", lineno);
        trace.generator_seed = it->get<std::uint64_t>();
      }
      have_header = true;
      continue;
    }
    Job job = parse_job(obj, mode, lineno);
    if (auto [it, inserted] = seen.emplace(job.job_id, lineno); !inserted)
      throw TraceError("duplicate job_id '" + job.job_id + "' (first seen on line " + std::to_string(it->second) + ")",
                       lineno);
    if (!(job.end_time > job.arrival_time))
      throw TraceError("job '" + job.job_id + "' has end_time <= arrival_time", lineno);
    trace.jobs.push_back(std::move(job));
  }
  if (!have_header) throw TraceError("missing trace header");
  sort_jobs(trace.jobs);
  auto violations = validate_trace(trace);
  if (!violations.empty()) {
    const auto& v = violations.front();
    throw TraceError("job '" + v.job_id + "' violates " + v.rule + ": " + v.detail, seen[v.job_id]);
  }
  return trace;
}

Trace load_trace(const std::filesystem::path& path, UnknownFieldMode mode) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw TraceError("cannot open trace file " + path.string());
  return parse_trace(in, mode);
}

void write_trace(const Trace& trace, std::ostream& out) {
  ordered_json header;
  header[kFormatKey] = kFormatVersion;
  header["epoch"] = trace.epoch;
  if (trace.generator_seed)
    header["generator_seed"] = *trace.generator_seed;
  else
    header["generator_seed"] = nullptr;
  out << header.dump() << '\n';
  for (const auto& j : trace.jobs) out << job_to_json(j).dump() << '\n';
}

void save_trace(const Trace& trace, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw TraceError("cannot open " + path.string() + " for writing");
  write_trace(trace, out);
  out.flush();
  if (!out) throw TraceError("write failed for " + path.string());
}

std::vector<Violation> validate_trace(const Trace& trace) {
  std::vector<Violation> out;
  std::map<std::string, std::vector<std::size_t>> ids;
  for (std::size_t i = 0; i < trace.jobs.size(); ++i) ids[trace.jobs[i].job_id].push_back(i);
  for (const auto& [id, where] : ids) {
    if (where.size() < 2) continue;
    std::string positions;
    for (auto w : where) positions += (positions.empty() ? "" : ", ") + std::to_string(w);
    out.push_back({id, "unique_job_id", "job_id appears at positions " + positions});
  }

  for (std::size_t i = 0; i < trace.jobs.size(); ++i) {
    const Job& j = trace.jobs[i];
    auto add = [&](const char* rule, std::string detail) { out.push_back({j.job_id, rule, std::move(detail)}); };
    if (!(j.arrival_time >= 0.0) || !std::isfinite(j.arrival_time)) add("arrival_nonnegative", "arrival_time < 0");
    if (!(j.end_time > j.arrival_time) || !std::isfinite(j.end_time)) add("end_after_arrival", "end_time <= arrival_time");
    if (j.peak_bytes == 0) add("positive_size", "peak_bytes must be > 0");
    if (!(j.write_phase_fraction > 0.0 && j.write_phase_fraction <= 1.0))
      add("write_phase_fraction_range", "write_phase_fraction must lie in (0, 1]");
    const auto& io = j.raw_io;
    if (!(io.cache_hit_fraction >= 0.0 && io.cache_hit_fraction <= 1.0))
      add("cache_hit_fraction_range", "cache_hit_fraction must lie in [0, 1]");
    if (!(io.mean_write_op_bytes >= 0.0)) add("mean_write_op_bytes_nonnegative", "mean_write_op_bytes < 0");
    const double implied = static_cast<double>(io.write_ops) * io.mean_write_op_bytes;
    const double wb = static_cast<double>(io.write_bytes);
    if (std::abs(implied - wb) > std::max(1.0, 1e-9 * wb) + 0.5 * static_cast<double>(io.write_ops))
      add("write_bytes_consistency", "write_bytes != write_ops * mean_write_op_bytes");
    if (j.resources.weekday < 0 || j.resources.weekday > 6) add("weekday_range", "weekday outside 0..6");
    if (j.resources.hour_of_day < 0 || j.resources.hour_of_day > 23) add("hour_range", "hour_of_day outside 0..23");
    if (std::isfinite(j.arrival_time) && j.arrival_time >= 0.0) {
      if (j.resources.weekday != weekday_at(trace.epoch, j.arrival_time))
        add("weekday_consistency", "weekday does not match arrival_time under the trace epoch");
      if (j.resources.hour_of_day != hour_at(trace.epoch, j.arrival_time))
        add("hour_consistency", "hour_of_day does not match arrival_time under the trace epoch");
    }
    if (i > 0) {
      const Job& p = trace.jobs[i - 1];
      if (p.arrival_time > j.arrival_time || (p.arrival_time == j.arrival_time && p.job_id > j.job_id))
        add("sort_order", "jobs not sorted by (arrival_time, job_id)");
    }
  }
  return out;
}

}  // namespace tierlab
