#include "tierlab/cost_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>

#include "tierlab/config_file.hpp"

namespace tierlab {

const char* to_string(Device d) { return d == Device::Ssd ? "SSD" : "HDD"; }

void validate_rates(const CostRates& r) {
  const double vals[] = {r.byte_cost_hdd,        r.byte_cost_ssd,        r.network_cost_rate,
                         r.server_cost_rate_hdd, r.server_cost_rate_ssd, r.device_cost_rate_hdd,
                         r.wearout_cost_rate_ssd};
  for (double v : vals)
    if (!(v >= 0.0) || !std::isfinite(v)) throw CostModelError("cost rates must be finite and >= 0");
  if (!(r.hdd_iops_capacity > 0.0)) throw CostModelError("hdd_iops_capacity must be > 0");
  if (r.coalesce_chunk_bytes == 0) throw CostModelError("coalesce_chunk_bytes must be > 0");
}

EffectiveIoProfile effective_io(const Job& job, const CostRates& rates) {
  EffectiveIoProfile p;
  p.duration = job.end_time - job.arrival_time;
  if (!(p.duration > 0.0)) throw CostModelError("job '" + job.job_id + "' has zero duration");
  const auto& io = job.raw_io;
  const double reads = static_cast<double>(io.read_ops);
  p.disk_read_ops = rates.dram_cache_enabled ? reads * (1.0 - io.cache_hit_fraction) : reads;
  const std::uint64_t chunk = rates.coalesce_chunk_bytes;
  p.disk_write_ops = static_cast<double>((io.write_bytes + chunk - 1) / chunk);
  p.tcio_hdd_rate = (p.disk_read_ops + p.disk_write_ops) / (p.duration * rates.hdd_iops_capacity);
  p.io_throughput = (static_cast<double>(io.read_bytes) + static_cast<double>(io.write_bytes)) / p.duration;
  p.total_written_bytes = static_cast<double>(io.write_bytes);
  return p;
}

double tcio_total(const EffectiveIoProfile& io, double arrival, double end, Device device, double until) {
  if (until < arrival) throw CostModelError("tcio_total: until precedes arrival");
  if (device == Device::Ssd) return 0.0;
  return io.tcio_hdd_rate * (std::min(until, end) - arrival);
}

double tcio_total(const Job& job, Device device, const CostRates& rates, double until) {
  if (until < job.arrival_time) throw CostModelError("tcio_total: until precedes arrival");
  if (device == Device::Ssd) return 0.0;
  return tcio_total(effective_io(job, rates), job.arrival_time, job.end_time, device, until);
}

TcoTerms tco_terms(const EffectiveIoProfile& io, std::uint64_t peak_bytes, Device device, const CostRates& r) {
  const double size = static_cast<double>(peak_bytes);
  const double d = io.duration;
  TcoTerms t;
  t.network = r.network_cost_rate * io.io_throughput * d;
  if (device == Device::Hdd) {
    t.byte = r.byte_cost_hdd * size * d;
    t.server = r.server_cost_rate_hdd * io.tcio_hdd_rate * d;
    t.specific = r.device_cost_rate_hdd * io.tcio_hdd_rate * d;
  } else {
    t.byte = r.byte_cost_ssd * size * d;
    // No duration factor here, unlike the network term.
    t.server = r.server_cost_rate_ssd * io.io_throughput;
    t.specific = r.wearout_cost_rate_ssd * io.total_written_bytes;
  }
  return t;
}

TcoTerms tco_terms(const Job& job, Device device, const CostRates& rates) {
  return tco_terms(effective_io(job, rates), job.peak_bytes, device, rates);
}

double tco(const Job& job, Device device, const CostRates& rates) { return tco_terms(job, device, rates).total(); }

double tco_savings(const Job& job, const CostRates& rates) {
  const auto io = effective_io(job, rates);
  return tco_terms(io, job.peak_bytes, Device::Hdd, rates).total() -
         tco_terms(io, job.peak_bytes, Device::Ssd, rates).total();
}

CostRates parse_rates(std::istream& in, const std::string& source) {
  ConfigFile file = parse_config(in, source);
  if (file.sections.size() != 1) throw ConfigError(source + ": rates file takes no sections");
  const auto& g = file.global();
  g.require_known({"byte_cost_hdd", "byte_cost_ssd", "network_cost_rate", "server_cost_rate_hdd",
                   "server_cost_rate_ssd", "device_cost_rate_hdd", "wearout_cost_rate_ssd", "hdd_iops_capacity",
                   "coalesce_chunk_bytes", "dram_cache_enabled"});
  CostRates r;
  r.byte_cost_hdd = g.get_double("byte_cost_hdd", r.byte_cost_hdd);
  r.byte_cost_ssd = g.get_double("byte_cost_ssd", r.byte_cost_ssd);
  r.network_cost_rate = g.get_double("network_cost_rate", r.network_cost_rate);
  r.server_cost_rate_hdd = g.get_double("server_cost_rate_hdd", r.server_cost_rate_hdd);
  r.server_cost_rate_ssd = g.get_double("server_cost_rate_ssd", r.server_cost_rate_ssd);
  r.device_cost_rate_hdd = g.get_double("device_cost_rate_hdd", r.device_cost_rate_hdd);
  r.wearout_cost_rate_ssd = g.get_double("wearout_cost_rate_ssd", r.wearout_cost_rate_ssd);
  r.hdd_iops_capacity = g.get_double("hdd_iops_capacity", r.hdd_iops_capacity);
  const auto chunk = g.get_int("coalesce_chunk_bytes", static_cast<std::int64_t>(r.coalesce_chunk_bytes));
  if (chunk <= 0) throw ConfigError(source + ": coalesce_chunk_bytes must be > 0");
  r.coalesce_chunk_bytes = static_cast<std::uint64_t>(chunk);
  r.dram_cache_enabled = g.get_bool("dram_cache_enabled", r.dram_cache_enabled);
  validate_rates(r);
  return r;
}

CostRates load_rates(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open rates file " + path.string());
  return parse_rates(in, path.string());
}

void write_rates(const CostRates& r, std::ostream& out) {
  const auto flags = out.flags();
  const auto prec = out.precision();
  out << std::setprecision(17);
  out << "byte_cost_hdd = " << r.byte_cost_hdd << "\n"
      << "byte_cost_ssd = " << r.byte_cost_ssd << "\n"
      << "network_cost_rate = " << r.network_cost_rate << "\n"
      << "server_cost_rate_hdd = " << r.server_cost_rate_hdd << "\n"
      << "server_cost_rate_ssd = " << r.server_cost_rate_ssd << "\n"
      << "device_cost_rate_hdd = " << r.device_cost_rate_hdd << "\n"
      << "wearout_cost_rate_ssd = " << r.wearout_cost_rate_ssd << "\n"
      << "hdd_iops_capacity = " << r.hdd_iops_capacity << "\n"
      << "coalesce_chunk_bytes = " << r.coalesce_chunk_bytes << "\n"
      << "dram_cache_enabled = " << (r.dram_cache_enabled ? "true" : "false") << "\n";
  out.flags(flags);
  out.precision(prec);
}

}  // namespace tierlab
