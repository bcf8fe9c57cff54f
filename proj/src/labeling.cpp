#include "tierlab/labeling.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "tierlab/config_file.hpp"
#include "tierlab/csv.hpp"

namespace tierlab {

double io_density(const Job& job, const CostRates& rates) {
  if (job.peak_bytes == 0) throw LabelingError("io_density: job '" + job.job_id + "' has zero footprint");
  const auto io = effective_io(job, rates);
  return io.tcio_hdd_rate * io.duration / static_cast<double>(job.peak_bytes);
}

CategoryBoundaries fit_boundaries(std::span<const double> densities, int categories) {
  if (categories < 2) throw LabelingError("need at least 2 categories");
  const auto buckets = static_cast<std::size_t>(categories - 1);
  if (densities.size() < buckets)
    throw LabelingError("fit_boundaries: " + std::to_string(densities.size()) +
                        " nonnegative-savings examples cannot fill " + std::to_string(buckets) + " buckets");
  std::vector<double> v(densities.begin(), densities.end());
  std::sort(v.begin(), v.end());
  CategoryBoundaries b;
  b.categories = categories;
  b.training_size = v.size();
  const std::size_t d = v.size();
  for (std::size_t j = 1; j < buckets; ++j) {
    // Cut after the first floor(j*D/(N-1)) values; bucket sizes then differ by <= 1.
    const std::size_t c = j * d / buckets;
    const double lo = v[c - 1], hi = v[c];
    b.thresholds.push_back(lo + (hi - lo) / 2.0);
  }
  return b;
}

int assign_category(double savings, double density, const CategoryBoundaries& b) {
  if (savings < 0.0) return 0;
  // Half-open (low, high]: a value equal to a cut point stays in the lower bucket.
  const auto above = std::lower_bound(b.thresholds.begin(), b.thresholds.end(), density) - b.thresholds.begin();
  return 1 + static_cast<int>(above);
}

std::vector<TrainingExample> compute_examples(const Trace& trace, const std::vector<FeatureVector>& features,
                                              const CostRates& rates) {
  if (features.size() != trace.jobs.size()) throw LabelingError("features are not aligned with the trace");
  std::vector<TrainingExample> out(trace.jobs.size());
  for (std::size_t i = 0; i < trace.jobs.size(); ++i) {
    const Job& j = trace.jobs[i];
    auto& e = out[i];
    e.features = features[i];
    e.savings = tco_savings(j, rates);
    e.density = io_density(j, rates);
    e.job_id = j.job_id;
  }
  return out;
}

void apply_boundaries(std::vector<TrainingExample>& examples, const CategoryBoundaries& b) {
  for (auto& e : examples) e.category = assign_category(e.savings, e.density, b);
}

TrainingSet build_training_set(const Trace& trace, const std::vector<FeatureVector>& features,
                               const CostRates& rates, int categories) {
  TrainingSet set;
  set.examples = compute_examples(trace, features, rates);
  std::vector<double> nonneg;
  for (const auto& e : set.examples)
    if (e.savings >= 0.0) nonneg.push_back(e.density);
  set.boundaries = fit_boundaries(nonneg, categories);
  apply_boundaries(set.examples, set.boundaries);
  return set;
}

TrainingSet build_training_set(const Trace& trace, const CostRates& rates, int categories) {
  return build_training_set(trace, build_features(trace, rates), rates, categories);
}

void write_training_csv(const TrainingSet& set, std::ostream& out) {
  out << "job_id,category,savings,io_density";
  for (const auto& f : numeric_feature_layout()) out << ',' << f.name;
  out << ",tokens\n";
  for (const auto& e : set.examples) {
    out << csv_escape(e.job_id) << ',' << e.category << ',' << fmt_double(e.savings) << ',' << fmt_double(e.density);
    for (double v : e.features.numeric) out << ',' << fmt_double(v);
    std::string joined;
    for (const auto& t : e.features.tokens) joined += (joined.empty() ? "" : "|") + t;
    out << ',' << csv_escape(joined) << '\n';
  }
}

void write_boundaries(const CategoryBoundaries& b, std::ostream& out) {
  out << "categories = " << b.categories << "\n";
  out << "training_size = " << b.training_size << "\n";
  out << "thresholds = ";
  for (std::size_t i = 0; i < b.thresholds.size(); ++i) out << (i ? ", " : "") << fmt_double(b.thresholds[i]);
  out << "\n";
}

CategoryBoundaries read_boundaries(std::istream& in) {
  const ConfigFile f = parse_config(in, "<boundaries>");
  const auto& g = f.global();
  g.require_known({"categories", "training_size", "thresholds"});
  CategoryBoundaries b;
  b.categories = static_cast<int>(g.get_int("categories"));
  b.training_size = static_cast<std::size_t>(g.get_int("training_size"));
  b.thresholds = g.has("thresholds") ? g.get_double_list("thresholds") : std::vector<double>{};
  if (b.categories < 2 || b.thresholds.size() != static_cast<std::size_t>(b.categories - 2))
    throw LabelingError("boundaries file: expected categories-2 thresholds");
  if (!std::is_sorted(b.thresholds.begin(), b.thresholds.end()))
    throw LabelingError("boundaries file: thresholds must be non-decreasing");
  return b;
}

}  // namespace tierlab
