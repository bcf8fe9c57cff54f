#include <doctest.h>

#include <cstring>

#include "test_util.hpp"
#include "tierlab/kernels.hpp"

using namespace tierlab;
using namespace tierlab::kernels;

namespace {

bool same_bins(const std::vector<HistBin>& a, const std::vector<HistBin>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::memcmp(&a[i].g, &b[i].g, sizeof(double)) != 0 || std::memcmp(&a[i].h, &b[i].h, sizeof(double)) != 0 ||
        a[i].n != b[i].n)
      return false;
  return true;
}

SubsetProblem random_problem(Rng& rng, std::size_t n) {
  SubsetProblem p;
  std::vector<double> a, e;
  for (std::size_t i = 0; i < n; ++i) {
    a.push_back(std::floor(rng.uniform(0, 50)));
    e.push_back(a.back() + 1 + std::floor(rng.uniform(0, 30)));
    p.gain.push_back(rng.uniform(-3, 10));
    p.size.push_back(1 + static_cast<double>(rng.below(20)));
  }
  for (std::size_t q = 0; q < n; ++q) {
    std::uint64_t m = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (a[i] <= a[q] && a[q] <= e[i]) m |= std::uint64_t{1} << i;
    p.point_masks.push_back(m);
  }
  p.capacity = std::floor(rng.uniform(0, 60));
  return p;
}

}  // namespace

TEST_CASE("histograms: serial and OpenMP are bit-identical") {
  Rng rng(61);
  for (int it = 0; it < 20; ++it) {
    const std::size_t rows_n = 1 + rng.below(3000), feats = 1 + rng.below(12), stride = 2 + rng.below(60);
    std::vector<std::uint8_t> bins(rows_n * feats);
    for (auto& b : bins) b = static_cast<std::uint8_t>(rng.below(stride));
    std::vector<double> g(rows_n), h(rows_n);
    for (std::size_t i = 0; i < rows_n; ++i) {
      g[i] = rng.normal();
      h[i] = rng.uniform();
    }
    std::vector<std::uint32_t> rows;
    for (std::uint32_t r = 0; r < rows_n; ++r)
      if (rng.uniform() < 0.7) rows.push_back(r);
    std::vector<char> active(feats);
    for (auto& a : active) a = rng.uniform() < 0.8 ? 1 : 0;
    const BinnedColumns cols{bins.data(), rows_n, feats};
    std::vector<HistBin> s(feats * stride), o(feats * stride);
    build_histograms_serial(cols, rows, g.data(), h.data(), active, stride, s.data());
    build_histograms_omp(cols, rows, g.data(), h.data(), active, stride, o.data());
    CHECK(same_bins(s, o));
    // Counts add up per active feature, inactive ones stay zero.
    for (std::size_t f = 0; f < feats; ++f) {
      std::uint64_t n = 0;
      for (std::size_t b = 0; b < stride; ++b) n += s[f * stride + b].n;
      CHECK(n == (active[f] ? rows.size() : 0));
    }
  }
}

TEST_CASE("subsets: serial and OpenMP agree, and match a direct scan") {
  Rng rng(62);
  for (int it = 0; it < 40; ++it) {
    const auto p = random_problem(rng, 1 + rng.below(14));
    const auto s = best_subset_serial(p);
    const auto o = best_subset_omp(p);
    CHECK(s.mask == o.mask);
    CHECK(s.value == o.value);
    CHECK(s.feasible_count == o.feasible_count);
    double best = 0;
    std::uint64_t count = 0;
    for (std::uint64_t m = 0; m < (std::uint64_t{1} << p.gain.size()); ++m) {
      bool ok = true;
      for (auto pm : p.point_masks) {
        double used = 0;
        for (std::size_t i = 0; i < p.gain.size(); ++i)
          if ((m & pm) >> i & 1) used += p.size[i];
        ok = ok && used <= p.capacity;
      }
      if (!ok) continue;
      ++count;
      double v = 0;
      for (std::size_t i = 0; i < p.gain.size(); ++i)
        if (m >> i & 1) v += p.gain[i];
      best = std::max(best, v);
    }
    CHECK(s.value == best);
    CHECK(s.feasible_count == count);
    CHECK(subset_feasible(p, s.mask));
    CHECK(subset_value(p, s.mask) == s.value);
  }
}
