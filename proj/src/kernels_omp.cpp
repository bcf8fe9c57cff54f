#include <algorithm>
#include <stdexcept>
#include <vector>

#include <omp.h>

#include "tierlab/kernels.hpp"

namespace tierlab::kernels {

void build_histograms_omp(const BinnedColumns& cols, std::span<const std::uint32_t> rows, const double* g,
                          const double* h, std::span<const char> active, std::size_t stride, HistBin* out) {
  const auto nf = static_cast<std::ptrdiff_t>(cols.n_features);
  // One feature per task: each bin is still summed in row order.
#pragma omp parallel for schedule(dynamic, 1) if (rows.size() > 2048)
  for (std::ptrdiff_t f = 0; f < nf; ++f) {
    if (!active[static_cast<std::size_t>(f)]) continue;
    const std::uint8_t* col = cols.bins + static_cast<std::size_t>(f) * cols.n_rows;
    HistBin* hist = out + static_cast<std::size_t>(f) * stride;
    for (std::uint32_t r : rows) {
      HistBin& b = hist[col[r]];
      b.g += g[r];
      b.h += h[r];
      ++b.n;
    }
  }
}

SubsetBest best_subset_omp(const SubsetProblem& p) {
  if (p.gain.size() > 30) throw std::invalid_argument("best_subset: at most 30 jobs");
  const std::uint64_t total = std::uint64_t{1} << p.gain.size();
  const std::uint64_t chunk = 4096;
  const auto n_chunks = static_cast<std::ptrdiff_t>((total + chunk - 1) / chunk);
  std::vector<SubsetBest> partial(static_cast<std::size_t>(n_chunks));
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t c = 0; c < n_chunks; ++c) {
    SubsetBest best;
    best.value = -1.0;  // sentinel; mask 0 is always feasible and fixes it
    bool any = false;
    const std::uint64_t lo = static_cast<std::uint64_t>(c) * chunk;
    const std::uint64_t hi = std::min(total, lo + chunk);
    for (std::uint64_t mask = lo; mask < hi; ++mask) {
      if (!subset_feasible(p, mask)) continue;
      ++best.feasible_count;
      const double v = subset_value(p, mask);
      if (!any || v > best.value) {
        best.value = v;
        best.mask = mask;
        any = true;
      }
    }
    if (!any) best.value = 0.0;
    partial[static_cast<std::size_t>(c)] = best;
  }
  // Chunks are merged in mask order, so ties resolve as in the serial scan.
  SubsetBest out;
  for (const auto& b : partial) {
    out.feasible_count += b.feasible_count;
    if (b.feasible_count > 0 && b.value > out.value) {
      out.value = b.value;
      out.mask = b.mask;
    }
  }
  return out;
}

}  // namespace tierlab::kernels
