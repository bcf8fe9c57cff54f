#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tierlab/cost_model.hpp"
#include "tierlab/trace.hpp"

namespace tierlab {

class OracleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Objective { Tco, Tcio };

const char* to_string(Objective o);
Objective objective_from_string(const std::string& s);

struct OracleJob {
  std::string id;
  double arrival = 0.0;
  double end = 0.0;
  double size = 0.0;
  double gain = 0.0;  // saving if placed on SSD
};

struct OracleInstance {
  std::vector<OracleJob> jobs;
  double quota = 0.0;
  Objective objective = Objective::Tco;
};

// Constant footprint per job; TCO gains are tco_savings, TCIO gains the
// HDD TCIO over the whole lifetime.
OracleInstance build_instance(const Trace& trace, const CostRates& rates, double quota, Objective objective);

struct OracleLimits {
  std::uint64_t node_budget = 2'000'000;
  double time_budget = 60.0;  // seconds; hitting it makes the result timing-dependent
};

enum class OracleStatus { Optimal, Bounded };

struct OracleSolution {
  std::vector<char> x;        // 1 = SSD
  double objective_value = 0.0;  // sum of selected gains in job order
  OracleStatus status = OracleStatus::Optimal;
  double bound = 0.0;         // proven upper bound on the optimum
  double gap = 0.0;           // bound - objective_value
  std::uint64_t nodes_explored = 0;
  std::size_t components = 0;
  bool time_limited = false;
};

// Branch and bound. Capacity is only checked at arrival instants: between
// them the active set can only shrink.
OracleSolution solve(const OracleInstance& inst, const OracleLimits& limits = {},
                     const std::vector<char>* warm_start = nullptr);

// Rechecks capacity at every arrival instant of the instance and the
// objective value, independently of the solver.
bool verify(const OracleInstance& inst, const OracleSolution& sol);

// Sum of gains of the selected jobs, in job order.
double objective_of(const OracleInstance& inst, const std::vector<char>& x);
bool feasible(const OracleInstance& inst, const std::vector<char>& x);

void write_instance_csv(const OracleInstance& inst, std::ostream& out);
OracleInstance read_instance_csv(std::istream& in, double quota, Objective objective);
void write_solution_csv(const OracleInstance& inst, const OracleSolution& sol, std::ostream& out);

}  // namespace tierlab
