#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tierlab/cost_model.hpp"
#include "tierlab/features.hpp"
#include "tierlab/trace.hpp"

namespace tierlab {

// Total disk-reaching I/O over the lifetime divided by the peak footprint:
// (tcio_hdd_rate * duration) / peak_bytes.
double io_density(const Job& job, const CostRates& rates);

// Category 0 holds negative-savings jobs. Categories 1..N-1 split the
// nonnegative-savings examples into equal-count I/O-density buckets, with
// N-1 the densest. Bucket k covers (thresholds[k-2], thresholds[k-1]].
struct CategoryBoundaries {
  int categories = 2;              // N
  std::vector<double> thresholds;  // N-2 cut points, non-decreasing
  std::size_t training_size = 0;   // D, nonnegative examples used for fitting

  bool operator==(const CategoryBoundaries&) const = default;
};

class LabelingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// `densities` are the io_density values of the nonnegative-savings examples.
CategoryBoundaries fit_boundaries(std::span<const double> densities, int categories);

int assign_category(double savings, double density, const CategoryBoundaries& b);

struct TrainingExample {
  FeatureVector features;
  double savings = 0.0;  // m
  double density = 0.0;  // n
  int category = 0;
  std::string job_id;
};

struct TrainingSet {
  std::vector<TrainingExample> examples;  // aligned with trace.jobs
  CategoryBoundaries boundaries;
};

// Computes m and n per job without assigning categories.
std::vector<TrainingExample> compute_examples(const Trace& trace, const std::vector<FeatureVector>& features,
                                              const CostRates& rates);

// Fits boundaries on the nonnegative examples and labels every example.
TrainingSet build_training_set(const Trace& trace, const CostRates& rates, int categories);
TrainingSet build_training_set(const Trace& trace, const std::vector<FeatureVector>& features,
                               const CostRates& rates, int categories);

// Labels examples with already-fitted boundaries (e.g. an evaluation week).
void apply_boundaries(std::vector<TrainingExample>& examples, const CategoryBoundaries& b);

void write_training_csv(const TrainingSet& set, std::ostream& out);
void write_boundaries(const CategoryBoundaries& b, std::ostream& out);
CategoryBoundaries read_boundaries(std::istream& in);

}  // namespace tierlab
