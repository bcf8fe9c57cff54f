#include <stdexcept>

#include "tierlab/kernels.hpp"

namespace tierlab::kernels {

void build_histograms_serial(const BinnedColumns& cols, std::span<const std::uint32_t> rows, const double* g,
                             const double* h, std::span<const char> active, std::size_t stride, HistBin* out) {
  for (std::size_t f = 0; f < cols.n_features; ++f) {
    if (!active[f]) continue;
    const std::uint8_t* col = cols.bins + f * cols.n_rows;
    HistBin* hist = out + f * stride;
    for (std::uint32_t r : rows) {
      HistBin& b = hist[col[r]];
      b.g += g[r];
      b.h += h[r];
      ++b.n;
    }
  }
}

bool subset_feasible(const SubsetProblem& p, std::uint64_t mask) {
  const std::size_t n = p.gain.size();
  for (std::uint64_t pm : p.point_masks) {
    std::uint64_t m = mask & pm;
    if (!m) continue;
    double used = 0.0;
    for (std::size_t i = 0; i < n && m; ++i, m >>= 1)
      if (m & 1) used += p.size[i];
    if (used > p.capacity) return false;
  }
  return true;
}

double subset_value(const SubsetProblem& p, std::uint64_t mask) {
  double v = 0.0;
  for (std::size_t i = 0; i < p.gain.size(); ++i)
    if (mask >> i & 1) v += p.gain[i];
  return v;
}

SubsetBest best_subset_serial(const SubsetProblem& p) {
  if (p.gain.size() > 30) throw std::invalid_argument("best_subset: at most 30 jobs");
  const std::uint64_t total = std::uint64_t{1} << p.gain.size();
  SubsetBest best;
  for (std::uint64_t mask = 0; mask < total; ++mask) {
    if (!subset_feasible(p, mask)) continue;
    ++best.feasible_count;
    const double v = subset_value(p, mask);
    if (v > best.value) {
      best.value = v;
      best.mask = mask;
    }
  }
  return best;
}

}  // namespace tierlab::kernels
