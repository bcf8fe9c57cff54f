#pragma once

// Hot loops with a serial reference and an OpenMP variant. Both variants of a
// kernel return bit-identical results for any thread count: parallel work is
// split so that every floating-point sum is still accumulated in one fixed
// order by a single thread.

#include <cstdint>
#include <span>
#include <vector>

namespace tierlab::kernels {

struct HistBin {
  double g = 0.0;
  double h = 0.0;
  std::uint32_t n = 0;
};

// Column-major bin indices: bins[f * n_rows + r].
struct BinnedColumns {
  const std::uint8_t* bins = nullptr;
  std::size_t n_rows = 0;
  std::size_t n_features = 0;
};

// out[f * stride + b] accumulates (g, h, count) of `rows` whose bin in
// feature f is b. Features with active[f] == 0 are left untouched.
// `out` must be zeroed by the caller.
void build_histograms_serial(const BinnedColumns& cols, std::span<const std::uint32_t> rows, const double* g,
                             const double* h, std::span<const char> active, std::size_t stride, HistBin* out);
void build_histograms_omp(const BinnedColumns& cols, std::span<const std::uint32_t> rows, const double* g,
                          const double* h, std::span<const char> active, std::size_t stride, HistBin* out);

// Exhaustive 0/1 selection of intervals under a capacity checked at a set
// of points. point_masks[p] has bit i set iff job i is active at point p.
struct SubsetProblem {
  std::vector<double> gain;
  std::vector<double> size;
  std::vector<std::uint64_t> point_masks;
  double capacity = 0.0;
};

struct SubsetBest {
  std::uint64_t mask = 0;
  double value = 0.0;
  std::uint64_t feasible_count = 0;
};

// Best feasible mask by value, ties to the numerically smallest mask.
// Values are summed in job-index order. At most 30 jobs.
SubsetBest best_subset_serial(const SubsetProblem& p);
SubsetBest best_subset_omp(const SubsetProblem& p);

bool subset_feasible(const SubsetProblem& p, std::uint64_t mask);
double subset_value(const SubsetProblem& p, std::uint64_t mask);

}  // namespace tierlab::kernels
