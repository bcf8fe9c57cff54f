// Serial vs OpenMP variants of the two hot kernels.
#include <benchmark/benchmark.h>

#include <vector>

#include "tierlab/kernels.hpp"
#include "tierlab/rng.hpp"

using namespace tierlab;
using namespace tierlab::kernels;

namespace {

struct HistData {
  std::vector<std::uint8_t> bins;
  std::vector<double> g, h;
  std::vector<std::uint32_t> rows;
  std::vector<char> active;
  std::size_t n_rows, n_features, stride = 64;
};

HistData make_hist(std::size_t n_rows, std::size_t n_features) {
  HistData d;
  d.n_rows = n_rows;
  d.n_features = n_features;
  Rng rng(1);
  d.bins.resize(n_rows * n_features);
  for (auto& b : d.bins) b = static_cast<std::uint8_t>(rng.below(d.stride));
  for (std::size_t i = 0; i < n_rows; ++i) {
    d.g.push_back(rng.normal());
    d.h.push_back(rng.uniform());
    d.rows.push_back(static_cast<std::uint32_t>(i));
  }
  d.active.assign(n_features, 1);
  return d;
}

template <auto Kernel>
void BM_Histograms(benchmark::State& st) {
  const auto d = make_hist(static_cast<std::size_t>(st.range(0)), 40);
  const BinnedColumns cols{d.bins.data(), d.n_rows, d.n_features};
  std::vector<HistBin> out(d.n_features * d.stride);
  for (auto _ : st) {
    std::fill(out.begin(), out.end(), HistBin{});
    Kernel(cols, d.rows, d.g.data(), d.h.data(), d.active, d.stride, out.data());
    benchmark::DoNotOptimize(out.data());
  }
  st.SetItemsProcessed(st.iterations() * st.range(0) * 40);
}

SubsetProblem make_subset(std::size_t n) {
  Rng rng(2);
  SubsetProblem p;
  std::vector<double> a, e;
  for (std::size_t i = 0; i < n; ++i) {
    a.push_back(rng.uniform(0, 100));
    e.push_back(a.back() + rng.uniform(5, 40));
    p.gain.push_back(rng.uniform(-1, 10));
    p.size.push_back(rng.uniform(1, 20));
  }
  for (std::size_t q = 0; q < n; ++q) {
    std::uint64_t m = 0;
    for (std::size_t i = 0; i < n; ++i)
      if (a[i] <= a[q] && a[q] <= e[i]) m |= std::uint64_t{1} << i;
    p.point_masks.push_back(m);
  }
  p.capacity = 40;
  return p;
}

template <auto Kernel>
void BM_Subset(benchmark::State& st) {
  const auto p = make_subset(static_cast<std::size_t>(st.range(0)));
  for (auto _ : st) benchmark::DoNotOptimize(Kernel(p));
  st.SetItemsProcessed(st.iterations() * (std::int64_t{1} << st.range(0)));
}

}  // namespace

BENCHMARK(BM_Histograms<build_histograms_serial>)->Arg(10000)->Arg(100000);
BENCHMARK(BM_Histograms<build_histograms_omp>)->Arg(10000)->Arg(100000);
BENCHMARK(BM_Subset<best_subset_serial>)->Arg(14)->Arg(18);
BENCHMARK(BM_Subset<best_subset_omp>)->Arg(14)->Arg(18);

BENCHMARK_MAIN();
