#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include "tierlab/trace.hpp"

namespace tierlab {

enum class Device : std::uint8_t { Hdd = 0, Ssd = 1 };

const char* to_string(Device d);

// Conversion rates from resource usage to dollars. Units:
//   byte_cost_*            $ per (byte * second)
//   network_cost_rate      $ per (byte/s * second)
//   server_cost_rate_hdd   $ per (TCIO * second)
//   server_cost_rate_ssd   $ per (byte/s)
//   device_cost_rate_hdd   $ per (TCIO * second)
//   wearout_cost_rate_ssd  $ per byte written
// TCIO = 1.0 is the I/O one standard HDD sustains: hdd_iops_capacity ops/s.
struct CostRates {
  double byte_cost_hdd = 7.7e-18;
  double byte_cost_ssd = 3.85e-17;
  double network_cost_rate = 1.0e-15;
  double server_cost_rate_hdd = 2.0e-6;
  double server_cost_rate_ssd = 1.0e-12;
  double device_cost_rate_hdd = 1.3e-6;
  double wearout_cost_rate_ssd = 2.0e-13;
  double hdd_iops_capacity = 100.0;
  std::uint64_t coalesce_chunk_bytes = 1024 * 1024;
  bool dram_cache_enabled = true;

  bool operator==(const CostRates&) const = default;
};

class CostModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void validate_rates(const CostRates& rates);

// Disk-level view of a job after the DRAM cache and write coalescing.
struct EffectiveIoProfile {
  double disk_read_ops = 0.0;
  double disk_write_ops = 0.0;
  double tcio_hdd_rate = 0.0;        // TCIO units while the job runs on HDD
  double io_throughput = 0.0;        // bytes/second, reads + writes
  double total_written_bytes = 0.0;
  double duration = 0.0;             // e_i - a_i
};

EffectiveIoProfile effective_io(const Job& job, const CostRates& rates);

// TCIO-seconds accumulated by the job on `device` from a_i until `until`.
double tcio_total(const Job& job, Device device, const CostRates& rates, double until);
double tcio_total(const EffectiveIoProfile& io, double arrival, double end, Device device, double until);

struct TcoTerms {
  double byte = 0.0;
  double network = 0.0;
  double server = 0.0;
  double specific = 0.0;

  double total() const { return byte + network + server + specific; }
};

TcoTerms tco_terms(const Job& job, Device device, const CostRates& rates);
TcoTerms tco_terms(const EffectiveIoProfile& io, std::uint64_t peak_bytes, Device device, const CostRates& rates);
double tco(const Job& job, Device device, const CostRates& rates);
// tco(HDD) - tco(SSD); negative when SSD placement costs more.
double tco_savings(const Job& job, const CostRates& rates);

CostRates parse_rates(std::istream& in, const std::string& source = "<rates>");
CostRates load_rates(const std::filesystem::path& path);
void write_rates(const CostRates& rates, std::ostream& out);

}  // namespace tierlab
