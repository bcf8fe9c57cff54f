#pragma once

// Histogram-based gradient-boosted trees: multiclass softmax classification
// (a single logit when there are two classes) and squared-loss regression.
// Numeric features are quantile-binned; tokens become 0/1 indicator columns.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "tierlab/features.hpp"

namespace tierlab {

class GbtError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct GbtParams {
  int max_trees = 300;  // boosting rounds; one tree per class output per round
  int max_depth = 6;
  double learning_rate = 0.1;
  int histogram_bins = 64;
  double validation_fraction = 0.1;
  int early_stop_rounds = 20;
  std::uint64_t seed = 1;
  double l2 = 1.0;
  int min_child_samples = 10;
  int max_tokens = 256;  // top-K token indicators by training frequency
  std::vector<FeatureGroup> excluded_groups;
  bool parallel = true;

  bool operator==(const GbtParams&) const = default;
};

void validate_gbt_params(const GbtParams& p);

// Column space of a model: numeric features first, then token indicators.
struct FeatureSchema {
  std::vector<std::string> numeric_names;
  std::vector<FeatureGroup> numeric_groups;
  std::vector<std::string> tokens;  // sorted

  std::size_t num_numeric() const { return numeric_names.size(); }
  std::size_t columns() const { return numeric_names.size() + tokens.size(); }
  FeatureGroup group(std::size_t col) const;
  std::string column_name(std::size_t col) const;

  bool operator==(const FeatureSchema&) const = default;
};

FeatureSchema schema_from_layout(const std::vector<NumericFeature>& layout);

// A FeatureVector mapped onto a schema: token columns are sorted indices.
struct EncodedRow {
  const double* numeric = nullptr;
  std::vector<std::uint32_t> token_cols;
};

struct TreeNode {
  std::int32_t feature = -1;  // column, -1 for a leaf
  double threshold = 0.0;     // go left iff value <= threshold
  std::int32_t left = -1;
  std::int32_t right = -1;
  double value = 0.0;         // leaf output

  bool operator==(const TreeNode&) const = default;
};

struct Tree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root; empty means 0

  double predict(const EncodedRow& row, std::size_t num_numeric) const;
  int depth() const;
  bool operator==(const Tree&) const = default;
};

struct GbtTrainingInfo {
  std::vector<double> train_loss;  // after each kept round
  std::vector<double> valid_loss;
  int best_round = 0;              // rounds kept
  double valid_accuracy = 0.0;     // classifier: top-1 on validation split
  std::size_t n_train = 0;
  std::size_t n_valid = 0;
  bool stopped_early = false;

  bool operator==(const GbtTrainingInfo&) const = default;
};

class GbtModel {
 public:
  enum class Kind { Classifier, Regressor };

  Kind kind = Kind::Classifier;
  int num_classes = 1;  // regressor: 1
  GbtParams params;
  FeatureSchema schema;
  std::vector<double> base_score;          // per output
  std::vector<std::vector<Tree>> rounds;   // rounds[r][output]
  GbtTrainingInfo info;

  std::size_t num_outputs() const { return base_score.size(); }
  std::size_t tree_count() const;
  int max_tree_depth() const;

  EncodedRow encode(const FeatureVector& f) const;
  std::vector<double> raw_scores(const FeatureVector& f) const;
  // Classifier only.
  std::vector<double> predict_proba(const FeatureVector& f) const;
  int predict_class(const FeatureVector& f) const;
  // Regressor only.
  double predict_value(const FeatureVector& f) const;

  std::vector<int> predict_classes(const std::vector<FeatureVector>& rows, bool parallel = true) const;

  std::string to_json() const;
  static GbtModel from_json(const std::string& text);

  bool operator==(const GbtModel&) const = default;
};

// Labels in [0, num_classes). Deterministic for fixed params.seed.
GbtModel train_gbt_classifier(const std::vector<FeatureVector>& x, const std::vector<int>& y, int num_classes,
                              const GbtParams& params,
                              const std::vector<NumericFeature>& layout = numeric_feature_layout());

GbtModel train_gbt_regressor(const std::vector<FeatureVector>& x, const std::vector<double>& y,
                             const GbtParams& params,
                             const std::vector<NumericFeature>& layout = numeric_feature_layout());

// Shuffled split used for early stopping: returns (train, valid) indices.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_rows(std::size_t n, double valid_fraction,
                                                                         std::uint64_t seed);

}  // namespace tierlab
