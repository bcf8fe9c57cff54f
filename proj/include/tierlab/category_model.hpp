#pragma once

#include <array>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include "tierlab/gbt.hpp"
#include "tierlab/labeling.hpp"

namespace tierlab {

class ModelError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Maps pre-execution features to an importance category in [0, N-1].
class CategoryModel {
 public:
  virtual ~CategoryModel() = default;
  virtual int categories() const = 0;
  virtual int predict(const FeatureVector& f) const = 0;
  virtual std::string name() const = 0;
};

class GbtCategoryModel final : public CategoryModel {
 public:
  GbtCategoryModel(GbtModel gbt, CategoryBoundaries boundaries);

  int categories() const override { return boundaries_.categories; }
  int predict(const FeatureVector& f) const override;
  std::string name() const override { return "gbt"; }

  const GbtModel& gbt() const { return gbt_; }
  const CategoryBoundaries& boundaries() const { return boundaries_; }

  std::string to_json() const;
  static GbtCategoryModel from_json(const std::string& text);
  void save(const std::filesystem::path& path) const;
  static GbtCategoryModel load(const std::filesystem::path& path);

 private:
  GbtModel gbt_;
  CategoryBoundaries boundaries_;
};

GbtCategoryModel train_category_model(const TrainingSet& set, const GbtParams& params);

// Clairvoyant lookup by job_id.
class TrueCategoryModel final : public CategoryModel {
 public:
  TrueCategoryModel(const std::vector<TrainingExample>& labeled, int categories);

  int categories() const override { return n_; }
  int predict(const FeatureVector& f) const override;
  std::string name() const override { return "true"; }

 private:
  std::unordered_map<std::string, int> labels_;
  int n_;
};

// 1 + fnv1a64(pipeline_id) mod (N-1): stable per pipeline, never 0.
class HashCategoryModel final : public CategoryModel {
 public:
  explicit HashCategoryModel(int categories);

  int categories() const override { return n_; }
  int predict(const FeatureVector& f) const override;
  std::string name() const override { return "hash"; }

 private:
  int n_;
};

// Fixed job_id -> category table for scripted traces.
class ScriptedCategoryModel final : public CategoryModel {
 public:
  ScriptedCategoryModel(std::map<std::string, int> table, int categories);

  int categories() const override { return n_; }
  int predict(const FeatureVector& f) const override;
  std::string name() const override { return "scripted"; }

 private:
  std::map<std::string, int> table_;
  int n_;
};

class LifetimePredictor {
 public:
  virtual ~LifetimePredictor() = default;
  virtual double mu(const FeatureVector& f) const = 0;
  virtual double sigma(const FeatureVector& f) const = 0;
};

// Lifetime predictor for the TTL baseline: mu from a boosted regression on
// log-lifetime, sigma the per-pipeline residual standard deviation in
// seconds (global value when a pipeline has fewer than two samples).
class LifetimeModel final : public LifetimePredictor {
 public:
  LifetimeModel() = default;
  LifetimeModel(GbtModel reg, std::map<std::string, double> pipeline_sigma, double global_sigma);

  double mu(const FeatureVector& f) const override;
  double sigma(const FeatureVector& f) const override;
  double global_sigma() const { return global_sigma_; }
  const GbtModel& regressor() const { return reg_; }

  std::string to_json() const;
  static LifetimeModel from_json(const std::string& text);

 private:
  GbtModel reg_;
  std::map<std::string, double> pipeline_sigma_;
  double global_sigma_ = 0.0;
};

// Fixed (mu, sigma) per job_id, for scripted traces.
class ScriptedLifetime final : public LifetimePredictor {
 public:
  explicit ScriptedLifetime(std::map<std::string, std::pair<double, double>> table) : table_(std::move(table)) {}
  double mu(const FeatureVector& f) const override { return lookup(f).first; }
  double sigma(const FeatureVector& f) const override { return lookup(f).second; }

 private:
  const std::pair<double, double>& lookup(const FeatureVector& f) const;
  std::map<std::string, std::pair<double, double>> table_;
};

LifetimeModel train_lifetime_regressor(const std::vector<FeatureVector>& x, const std::vector<double>& lifetimes,
                                       const GbtParams& params);

// Area under the ROC curve by rank statistic; tied scores count one half.
double roc_auc(const std::vector<double>& scores, const std::vector<int>& is_positive);

struct GroupImportance {
  std::vector<int> categories;
  std::vector<double> base_auc;                    // per category
  std::vector<std::array<double, 4>> auc_without;  // per category, per group
  std::vector<std::array<double, 4>> score;        // normalized drops, sum 1
};

// One-vs-rest binary models per category, retrained with each feature group
// removed. AUC is measured on a held-out fifth of the data. An empty
// `categories` means every category present in `labels`.
GroupImportance feature_group_importance(const std::vector<FeatureVector>& x, const std::vector<int>& labels,
                                         std::vector<int> categories, const GbtParams& params,
                                         const std::vector<NumericFeature>& layout = numeric_feature_layout());

void write_importance_csv(const GroupImportance& imp, std::ostream& out);

}  // namespace tierlab
