#include "tierlab/category_model.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>
#include <sstream>

#include <json.hpp>

#include "tierlab/csv.hpp"
#include "tierlab/rng.hpp"

namespace tierlab {

using nlohmann::ordered_json;

static void check_categories(int n) {
  if (n < 2) throw ModelError("a category model needs N >= 2");
}

GbtCategoryModel::GbtCategoryModel(GbtModel gbt, CategoryBoundaries boundaries)
    : gbt_(std::move(gbt)), boundaries_(std::move(boundaries)) {
  check_categories(boundaries_.categories);
  if (gbt_.kind != GbtModel::Kind::Classifier || gbt_.num_classes != boundaries_.categories)
    throw ModelError("gbt model does not match the category count");
}

int GbtCategoryModel::predict(const FeatureVector& f) const { return gbt_.predict_class(f); }

std::string GbtCategoryModel::to_json() const {
  ordered_json j;
  j["format"] = "tierlab-category-model";
  j["categories"] = boundaries_.categories;
  j["thresholds"] = boundaries_.thresholds;
  j["training_size"] = boundaries_.training_size;
  j["gbt"] = ordered_json::parse(gbt_.to_json());
  return j.dump();
}

GbtCategoryModel GbtCategoryModel::from_json(const std::string& text) {
  try {
    const auto j = ordered_json::parse(text);
    if (j.at("format") != "tierlab-category-model") throw ModelError("not a category model file");
    CategoryBoundaries b;
    b.categories = j.at("categories").get<int>();
    b.thresholds = j.at("thresholds").get<std::vector<double>>();
    b.training_size = j.at("training_size").get<std::size_t>();
    return GbtCategoryModel(GbtModel::from_json(j.at("gbt").dump()), b);
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("category model file: ") + e.what());
  }
}

void GbtCategoryModel::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ModelError("cannot write " + path.string());
  out << to_json() << "\n";
}

GbtCategoryModel GbtCategoryModel::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ModelError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

GbtCategoryModel train_category_model(const TrainingSet& set, const GbtParams& params) {
  std::vector<FeatureVector> x;
  std::vector<int> y;
  x.reserve(set.examples.size());
  for (const auto& e : set.examples) {
    x.push_back(e.features);
    y.push_back(e.category);
  }
  return GbtCategoryModel(train_gbt_classifier(x, y, set.boundaries.categories, params), set.boundaries);
}

TrueCategoryModel::TrueCategoryModel(const std::vector<TrainingExample>& labeled, int categories) : n_(categories) {
  check_categories(categories);
  for (const auto& e : labeled) {
    if (e.category < 0 || e.category >= categories) throw ModelError("label out of range for " + e.job_id);
    labels_[e.job_id] = e.category;
  }
}

int TrueCategoryModel::predict(const FeatureVector& f) const {
  auto it = labels_.find(f.job_id);
  if (it == labels_.end()) throw ModelError("true-category model has no label for job '" + f.job_id + "'");
  return it->second;
}

HashCategoryModel::HashCategoryModel(int categories) : n_(categories) { check_categories(categories); }

int HashCategoryModel::predict(const FeatureVector& f) const {
  return 1 + static_cast<int>(fnv1a64(f.pipeline_id) % static_cast<std::uint64_t>(n_ - 1));
}

ScriptedCategoryModel::ScriptedCategoryModel(std::map<std::string, int> table, int categories)
    : table_(std::move(table)), n_(categories) {
  check_categories(categories);
  for (const auto& [id, c] : table_)
    if (c < 0 || c >= n_) throw ModelError("scripted category out of range for " + id);
}

int ScriptedCategoryModel::predict(const FeatureVector& f) const {
  auto it = table_.find(f.job_id);
  if (it == table_.end()) throw ModelError("scripted model has no entry for job '" + f.job_id + "'");
  return it->second;
}

LifetimeModel::LifetimeModel(GbtModel reg, std::map<std::string, double> pipeline_sigma, double global_sigma)
    : reg_(std::move(reg)), pipeline_sigma_(std::move(pipeline_sigma)), global_sigma_(global_sigma) {}

double LifetimeModel::mu(const FeatureVector& f) const {
  if (reg_.base_score.empty()) throw ModelError("lifetime model is not trained");
  return std::exp(reg_.predict_value(f));
}

double LifetimeModel::sigma(const FeatureVector& f) const {
  auto it = pipeline_sigma_.find(f.pipeline_id);
  return it == pipeline_sigma_.end() ? global_sigma_ : it->second;
}

std::string LifetimeModel::to_json() const {
  ordered_json j;
  j["format"] = "tierlab-lifetime-model";
  j["global_sigma"] = global_sigma_;
  j["pipeline_sigma"] = pipeline_sigma_;
  j["regressor"] = ordered_json::parse(reg_.to_json());
  return j.dump();
}

LifetimeModel LifetimeModel::from_json(const std::string& text) {
  try {
    const auto j = ordered_json::parse(text);
    if (j.at("format") != "tierlab-lifetime-model") throw ModelError("not a lifetime model file");
    return LifetimeModel(GbtModel::from_json(j.at("regressor").dump()),
                         j.at("pipeline_sigma").get<std::map<std::string, double>>(),
                         j.at("global_sigma").get<double>());
  } catch (const nlohmann::json::exception& e) {
    throw ModelError(std::string("lifetime model file: ") + e.what());
  }
}

const std::pair<double, double>& ScriptedLifetime::lookup(const FeatureVector& f) const {
  auto it = table_.find(f.job_id);
  if (it == table_.end()) throw ModelError("scripted lifetime has no entry for job '" + f.job_id + "'");
  return it->second;
}

static double stddev(const std::vector<double>& v) {
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

LifetimeModel train_lifetime_regressor(const std::vector<FeatureVector>& x, const std::vector<double>& lifetimes,
                                       const GbtParams& params) {
  if (x.empty()) throw ModelError("lifetime regressor: empty training set");
  if (x.size() != lifetimes.size()) throw ModelError("lifetime regressor: features and targets differ in length");
  std::vector<double> logy;
  logy.reserve(lifetimes.size());
  for (double l : lifetimes) {
    if (!(l > 0.0)) throw ModelError("lifetime regressor: lifetimes must be positive");
    logy.push_back(std::log(l));
  }
  GbtModel reg;
  if (x.size() >= 2) {
    reg = train_gbt_regressor(x, logy, params);
  } else {
    reg.kind = GbtModel::Kind::Regressor;
    reg.params = params;
    reg.schema = schema_from_layout(numeric_feature_layout());
    reg.base_score = {logy[0]};
  }
  LifetimeModel pre(reg, {}, 0.0);
  std::map<std::string, std::vector<double>> resid;
  std::vector<double> all;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double r = lifetimes[i] - pre.mu(x[i]);
    resid[x[i].pipeline_id].push_back(r);
    all.push_back(r);
  }
  std::map<std::string, double> per_pipeline;
  for (auto& [pid, v] : resid)
    if (v.size() >= 2) per_pipeline[pid] = stddev(v);
  return LifetimeModel(std::move(reg), std::move(per_pipeline), all.size() >= 2 ? stddev(all) : 0.0);
}

double roc_auc(const std::vector<double>& scores, const std::vector<int>& is_positive) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double pos = 0, rank_sum = 0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[idx[j]] == scores[idx[i]]) ++j;
    const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t k = i; k < j; ++k)
      if (is_positive[idx[k]]) {
        rank_sum += avg_rank;
        pos += 1;
      }
    i = j;
  }
  const double neg = static_cast<double>(n) - pos;
  if (pos == 0 || neg == 0) return 0.5;
  return (rank_sum - pos * (pos + 1) / 2.0) / (pos * neg);
}

GroupImportance feature_group_importance(const std::vector<FeatureVector>& x, const std::vector<int>& labels,
                                         std::vector<int> categories, const GbtParams& params,
                                         const std::vector<NumericFeature>& layout) {
  if (x.size() != labels.size()) throw ModelError("importance: features and labels differ in length");
  if (categories.empty()) {
    categories = labels;
    std::sort(categories.begin(), categories.end());
    categories.erase(std::unique(categories.begin(), categories.end()), categories.end());
  }
  auto [train, test] = split_rows(x.size(), 0.2, params.seed ^ 0x5EEDULL);
  std::vector<FeatureVector> xtr, xte;
  for (std::size_t i : train) xtr.push_back(x[i]);
  for (std::size_t i : test) xte.push_back(x[i]);

  GroupImportance out;
  for (int c : categories) {
    std::vector<int> ytr, yte;
    for (std::size_t i : train) ytr.push_back(labels[i] == c ? 1 : 0);
    for (std::size_t i : test) yte.push_back(labels[i] == c ? 1 : 0);
    const auto pos_tr = std::count(ytr.begin(), ytr.end(), 1);
    const auto pos_te = std::count(yte.begin(), yte.end(), 1);
    if (pos_tr == 0 || pos_te == 0)
      throw ModelError("importance: category " + std::to_string(c) + " is absent from the data");
    if (pos_tr == static_cast<std::ptrdiff_t>(ytr.size()) || pos_te == static_cast<std::ptrdiff_t>(yte.size()))
      throw ModelError("importance: category " + std::to_string(c) + " has no negative examples");

    auto auc_of = [&](const GbtParams& p) {
      const GbtModel m = train_gbt_classifier(xtr, ytr, 2, p, layout);
      std::vector<double> s;
      s.reserve(xte.size());
      for (const auto& f : xte) s.push_back(m.raw_scores(f)[0]);
      return roc_auc(s, yte);
    };
    const double base = auc_of(params);
    std::array<double, 4> without{}, drop{};
    for (std::size_t g = 0; g < kAllFeatureGroups.size(); ++g) {
      GbtParams p = params;
      p.excluded_groups.push_back(kAllFeatureGroups[g]);
      without[g] = auc_of(p);
      drop[g] = std::max(0.0, base - without[g]);
    }
    const double total = drop[0] + drop[1] + drop[2] + drop[3];
    std::array<double, 4> score{};
    for (std::size_t g = 0; g < 4; ++g) score[g] = total > 0.0 ? drop[g] / total : 0.25;
    out.categories.push_back(c);
    out.base_auc.push_back(base);
    out.auc_without.push_back(without);
    out.score.push_back(score);
  }
  return out;
}

void write_importance_csv(const GroupImportance& imp, std::ostream& out) {
  out << "category,base_auc";
  for (auto g : kAllFeatureGroups) out << ",auc_without_" << to_string(g);
  for (auto g : kAllFeatureGroups) out << ",score_" << to_string(g);
  out << "\n";
  for (std::size_t i = 0; i < imp.categories.size(); ++i) {
    out << imp.categories[i] << ',' << fmt_double(imp.base_auc[i]);
    for (double v : imp.auc_without[i]) out << ',' << fmt_double(v);
    for (double v : imp.score[i]) out << ',' << fmt_double(v);
    out << "\n";
  }
}

}  // namespace tierlab
