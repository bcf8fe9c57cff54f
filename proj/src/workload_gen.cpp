#include "tierlab/workload_gen.hpp"

#include <algorithm>
#include <cmath>
#include <cctype>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <set>

#include "tierlab/config_file.hpp"
#include "tierlab/rng.hpp"

namespace tierlab {

namespace {

constexpr double kMiB = 1024.0 * 1024.0;

const char* const kBinaries[] = {"join", "sort", "aggregate", "transcode", "index", "train", "export", "scan"};

struct PipelineProfile {
  std::string id;
  std::string user;
  std::string binary;
  double size_offset = 0.0;
  double life_offset = 0.0;
  double io_offset = 0.0;
  double worker_mult = 1.0;
  double record_bytes = 1000.0;
  std::uint64_t threads_per_worker = 1;
  std::vector<double> step_io_offset;
  std::vector<double> step_size_offset;
};

std::string zero_pad(std::uint64_t v, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%0*llu", width, static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t round_u64(double x) { return x <= 0.0 ? 0 : static_cast<std::uint64_t>(std::llround(x)); }

std::vector<Job> generate_archetype(const ArchetypeConfig& a, const GeneratorConfig& cfg) {
  Rng rng = Rng::substream(cfg.seed, a.name);
  const std::string tag = archetype_tag(a.name);

  // Pipeline-level variance carries 60% of the std-dev, so trailing history
  // and identity features are informative about a new execution.
  std::vector<PipelineProfile> pipes(static_cast<std::size_t>(a.pipeline_count));
  for (std::size_t p = 0; p < pipes.size(); ++p) {
    auto& pp = pipes[p];
    pp.id = tag + "-p" + zero_pad(p, 2);
    pp.user = tag + "-u" + zero_pad(p / 2, 2);
    pp.binary = kBinaries[rng.below(std::size(kBinaries))];
    pp.size_offset = 0.6 * a.size.sigma * rng.normal();
    pp.life_offset = 0.6 * a.lifetime.sigma * rng.normal();
    pp.io_offset = 0.5 * rng.normal();
    pp.worker_mult = std::exp(0.3 * rng.normal());
    pp.record_bytes = std::exp(rng.uniform(std::log(100.0), std::log(10000.0)));
    pp.threads_per_worker = std::uint64_t{1} << rng.below(4);
    const auto steps = 1 + rng.below(3);
    for (std::uint64_t s = 0; s < steps; ++s) {
      pp.step_io_offset.push_back(0.25 * rng.normal());
      pp.step_size_offset.push_back(0.2 * rng.normal());
    }
  }

  const double job_size_sigma = 0.8 * a.size.sigma;
  const double job_life_sigma = 0.8 * a.lifetime.sigma;
  const double io_job_sigma = 0.6;
  const double io_mean_shift = 0.5 * (0.5 * 0.5 + 0.25 * 0.25 + io_job_sigma * io_job_sigma);
  const double token_noise = std::min(1.0, a.feature_noise);

  std::vector<Job> jobs;
  const double peak_rate = a.arrival_rate / 3600.0 * (1.0 + a.diurnal_amplitude);
  double t = 0.0;
  std::uint64_t seq = 0;
  while (peak_rate > 0.0) {
    t += rng.exponential(peak_rate);
    if (t >= cfg.duration) break;
    const double intensity = 1.0 + a.diurnal_amplitude * std::sin(2.0 * M_PI * t / 86400.0);
    if (rng.uniform() * (1.0 + a.diurnal_amplitude) >= intensity) continue;

    const auto& pp = pipes[rng.below(pipes.size())];
    const auto step = rng.below(pp.step_io_offset.size());

    Job j;
    j.job_id = tag + "-" + zero_pad(seq++, 6);
    j.pipeline_id = pp.id;
    j.user_id = pp.user;
    j.step_name = "step" + std::to_string(step);
    j.arrival_time = t;

    const double size = std::exp(a.size.mu + pp.size_offset + pp.step_size_offset[step] + job_size_sigma * rng.normal());
    j.peak_bytes = std::max<std::uint64_t>(4096, round_u64(size));
    const double life = std::exp(a.lifetime.mu + pp.life_offset + job_life_sigma * rng.normal());
    j.end_time = t + std::max(1.0, life);
    j.write_phase_fraction = rng.uniform(0.2, 1.0);

    const double ops_per_mib = a.io_density_level *
                               std::exp(pp.io_offset + pp.step_io_offset[step] + io_job_sigma * rng.normal() - io_mean_shift);
    const double bytes = static_cast<double>(j.peak_bytes);
    const std::uint64_t total_ops = std::max<std::uint64_t>(1, round_u64(ops_per_mib * bytes / kMiB));
    std::uint64_t write_ops = round_u64(static_cast<double>(total_ops) * a.write_fraction);
    if (a.write_fraction > 0.0) write_ops = std::max<std::uint64_t>(1, write_ops);
    write_ops = std::min(write_ops, total_ops);
    const std::uint64_t read_ops = total_ops - write_ops;

    auto& io = j.raw_io;
    io.write_ops = write_ops;
    io.read_ops = read_ops;
    io.write_bytes = write_ops > 0 ? j.peak_bytes : 0;
    io.mean_write_op_bytes = write_ops > 0 ? static_cast<double>(io.write_bytes) / static_cast<double>(write_ops) : 0.0;
    if (read_ops > 0) {
      const double per_op = std::clamp(2.0 * bytes / static_cast<double>(read_ops), 4096.0, 8.0 * kMiB);
      io.read_bytes = read_ops * round_u64(per_op);
    }
    io.cache_hit_fraction = std::clamp(a.cache_hit_fraction + 0.05 * rng.normal(), 0.0, 1.0);

    auto noisy = [&](double x) { return x * std::exp(a.feature_noise * rng.normal()); };
    auto& r = j.resources;
    r.num_workers = std::max<std::uint64_t>(1, round_u64(noisy(std::sqrt(bytes / (16.0 * kMiB)) * pp.worker_mult)));
    r.num_worker_threads = r.num_workers * pp.threads_per_worker;
    r.initial_num_buckets = std::max<std::uint64_t>(1, round_u64(noisy(4.0 * static_cast<double>(r.num_workers))));
    r.num_buckets = r.initial_num_buckets * (1 + rng.below(2));
    r.num_shards = std::max<std::uint64_t>(1, round_u64(noisy(static_cast<double>(total_ops) / 1000.0)));
    r.records_written = round_u64(noisy(static_cast<double>(io.write_bytes) / pp.record_bytes));
    r.weekday = weekday_at(cfg.epoch, t);
    r.hour_of_day = hour_at(cfg.epoch, t);

    const std::string tag_token = rng.uniform() < token_noise ? "misc" + std::to_string(rng.below(8)) : tag;
    j.metadata_tokens = {"workload=" + tag_token, "//" + tag_token + "/" + pp.id + ":" + pp.binary,
                         "exec." + pp.binary + "." + j.step_name, "user:" + pp.user};
    jobs.push_back(std::move(j));
  }
  return jobs;
}

}  // namespace

std::string archetype_tag(const std::string& name) {
  std::string tag;
  for (unsigned char c : name)
    if (std::isalnum(c)) tag.push_back(static_cast<char>(std::tolower(c)));
  return tag;
}

void validate_generator_config(const GeneratorConfig& c) {
  if (c.archetypes.empty()) throw GeneratorError("generator config needs at least one archetype");
  if (!(c.duration > 0.0) || !std::isfinite(c.duration)) throw GeneratorError("duration must be > 0");
  std::set<std::string> tags;
  for (const auto& a : c.archetypes) {
    const std::string tag = archetype_tag(a.name);
    auto fail = [&](const std::string& why) { throw GeneratorError("archetype '" + a.name + "': " + why); };
    if (tag.empty()) fail("name needs at least one alphanumeric character");
    if (!tags.insert(tag).second) fail("name collides with another archetype after normalization");
    if (!(a.arrival_rate > 0.0)) fail("arrival_rate must be > 0");
    if (!(a.diurnal_amplitude >= 0.0 && a.diurnal_amplitude <= 1.0)) fail("diurnal_amplitude must lie in [0, 1]");
    if (!(a.size.sigma >= 0.0) || !(a.lifetime.sigma >= 0.0)) fail("log-normal sigma must be >= 0");
    if (!std::isfinite(a.size.mu) || !std::isfinite(a.lifetime.mu)) fail("log-normal mu must be finite");
    if (!(a.io_density_level > 0.0)) fail("io_density_level must be > 0");
    if (!(a.write_fraction >= 0.0 && a.write_fraction <= 1.0)) fail("write_fraction must lie in [0, 1]");
    if (!(a.cache_hit_fraction >= 0.0 && a.cache_hit_fraction <= 1.0)) fail("cache_hit_fraction must lie in [0, 1]");
    if (!(a.feature_noise >= 0.0)) fail("feature_noise must be >= 0");
    if (a.pipeline_count < 1) fail("pipeline_count must be >= 1");
  }
}

Trace generate(const GeneratorConfig& config) {
  validate_generator_config(config);
  Trace trace;
  trace.epoch = config.epoch;
  trace.generator_seed = config.seed;
  for (const auto& a : config.archetypes) {
    auto jobs = generate_archetype(a, config);
    trace.jobs.insert(trace.jobs.end(), std::make_move_iterator(jobs.begin()), std::make_move_iterator(jobs.end()));
  }
  sort_jobs(trace.jobs);
  return trace;
}

GeneratorConfig default_mix(std::uint64_t seed, double duration) {
  const double MiB = kMiB, GiB = 1024.0 * kMiB;
  auto ln = [](double x) { return std::log(x); };
  GeneratorConfig c;
  c.seed = seed;
  c.duration = duration;
  //              name                   rate  amp   size                  lifetime               io    wf    hit   noise pipes
  c.archetypes = {
      {"hot-short", 20.0, 0.6, {ln(512 * MiB), 1.0}, {ln(600.0), 0.7}, 300.0, 0.10, 0.20, 0.3, 8},
      {"hot-long", 6.0, 0.4, {ln(2 * GiB), 0.9}, {ln(4 * 3600.0), 0.6}, 150.0, 0.20, 0.30, 0.3, 6},
      {"cold-short", 15.0, 0.6, {ln(256 * MiB), 1.0}, {ln(300.0), 0.8}, 40.0, 0.30, 0.50, 0.3, 10},
      {"cold-long", 8.0, 0.3, {ln(4 * GiB), 0.8}, {ln(8 * 3600.0), 0.6}, 80.0, 0.40, 0.40, 0.3, 6},
      {"negative-savings-heavy", 6.0, 0.2, {ln(8 * GiB), 0.7}, {ln(86400.0), 0.5}, 3.0, 0.80, 0.60, 0.3, 5},
  };
  return c;
}

GeneratorConfig parse_generator_config(std::istream& in, const std::string& source) {
  ConfigFile file = parse_config(in, source);
  GeneratorConfig c;
  const auto& g = file.global();
  g.require_known({"duration", "seed", "epoch"});
  c.duration = g.get_double("duration", c.duration);
  c.seed = static_cast<std::uint64_t>(g.get_int("seed", static_cast<std::int64_t>(c.seed)));
  c.epoch = g.get_int("epoch", c.epoch);
  for (std::size_t i = 1; i < file.sections.size(); ++i) {
    const auto& s = file.sections[i];
    if (s.kind != "archetype") throw ConfigError(source + ": unexpected section [" + s.kind + "]");
    s.require_known({"arrival_rate", "diurnal_amplitude", "size_log_mu", "size_log_sigma", "lifetime_log_mu",
                     "lifetime_log_sigma", "io_density_level", "write_fraction", "cache_hit_fraction",
                     "feature_noise", "pipeline_count"});
    ArchetypeConfig a;
    a.name = s.name;
    a.arrival_rate = s.get_double("arrival_rate");
    a.diurnal_amplitude = s.get_double("diurnal_amplitude", 0.0);
    a.size = {s.get_double("size_log_mu"), s.get_double("size_log_sigma")};
    a.lifetime = {s.get_double("lifetime_log_mu"), s.get_double("lifetime_log_sigma")};
    a.io_density_level = s.get_double("io_density_level");
    a.write_fraction = s.get_double("write_fraction");
    a.cache_hit_fraction = s.get_double("cache_hit_fraction", 0.0);
    a.feature_noise = s.get_double("feature_noise", 0.0);
    a.pipeline_count = static_cast<int>(s.get_int("pipeline_count", 1));
    c.archetypes.push_back(std::move(a));
  }
  validate_generator_config(c);
  return c;
}

GeneratorConfig load_generator_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open generator config " + path.string());
  return parse_generator_config(in, path.string());
}

void write_generator_config(const GeneratorConfig& c, std::ostream& out) {
  out << std::setprecision(17);
  out << "# tierlab workload generator config\n";
  out << "duration = " << c.duration << "\n";
  out << "seed = " << c.seed << "\n";
  out << "epoch = " << c.epoch << "\n";
  for (const auto& a : c.archetypes) {
    out << "\n[archetype " << a.name << "]\n";
    out << "arrival_rate = " << a.arrival_rate << "\n";
    out << "diurnal_amplitude = " << a.diurnal_amplitude << "\n";
    out << "size_log_mu = " << a.size.mu << "\n";
    out << "size_log_sigma = " << a.size.sigma << "\n";
    out << "lifetime_log_mu = " << a.lifetime.mu << "\n";
    out << "lifetime_log_sigma = " << a.lifetime.sigma << "\n";
    out << "io_density_level = " << a.io_density_level << "\n";
    out << "write_fraction = " << a.write_fraction << "\n";
    out << "cache_hit_fraction = " << a.cache_hit_fraction << "\n";
    out << "feature_noise = " << a.feature_noise << "\n";
    out << "pipeline_count = " << a.pipeline_count << "\n";
  }
}

}  // namespace tierlab
