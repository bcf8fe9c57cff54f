#include <doctest.h>

#include <chrono>

#include "test_util.hpp"
#include "tierlab/gbt.hpp"

using namespace tierlab;

namespace {

GbtParams quick() {
  GbtParams p;
  p.max_trees = 60;
  p.max_depth = 4;
  return p;
}

double accuracy(const GbtModel& m, const std::vector<FeatureVector>& x, const std::vector<int>& y) {
  const auto pred = m.predict_classes(x);
  std::size_t hit = 0;
  for (std::size_t i = 0; i < y.size(); ++i) hit += pred[i] == y[i] ? 1 : 0;
  return static_cast<double>(hit) / static_cast<double>(y.size());
}

FeatureVector row(std::vector<double> numeric, std::vector<std::string> tokens = {}) {
  FeatureVector f;
  f.job_id = "r";
  f.pipeline_id = "p";
  f.numeric = std::move(numeric);
  f.tokens = std::move(tokens);
  return f;
}

}  // namespace

TEST_CASE("separable set: a token decides the class") {
  const auto set = testutil::separable_set(21, 2 * 86400.0);
  REQUIRE(set.x.size() > 1000);
  const GbtModel m = train_gbt_classifier(set.x, set.y, 5, quick());
  CHECK(m.info.valid_accuracy >= 0.99);
  CHECK(accuracy(m, set.x, set.y) >= 0.99);
  // A training point of a separable fit gets its own label back.
  CHECK(m.predict_class(set.x[0]) == set.y[0]);
  const auto p = m.predict_proba(set.x[1]);
  double sum = 0;
  for (double v : p) sum += v;
  CHECK(sum == doctest::Approx(1.0));
}

TEST_CASE("constant labels predict that label everywhere") {
  const auto set = testutil::separable_set(22, 43200.0);
  const std::vector<int> y(set.x.size(), 3);
  const GbtModel m = train_gbt_classifier(set.x, y, 5, quick());
  for (std::size_t i = 0; i < set.x.size(); i += 13) CHECK(m.predict_class(set.x[i]) == 3);
}

TEST_CASE("determinism: same data and seed serialize identically; parallel matches serial") {
  const auto set = testutil::separable_set(23, 43200.0);
  GbtParams p = quick();
  const GbtModel a = train_gbt_classifier(set.x, set.y, 5, p);
  const GbtModel b = train_gbt_classifier(set.x, set.y, 5, p);
  CHECK(a.to_json() == b.to_json());
  p.parallel = false;
  GbtModel c = train_gbt_classifier(set.x, set.y, 5, p);
  c.params.parallel = true;  // only the recorded flag may differ
  CHECK(a.to_json() == c.to_json());
  CHECK(a.predict_classes(set.x, true) == a.predict_classes(set.x, false));
}

TEST_CASE("json round trip") {
  const auto set = testutil::separable_set(24, 43200.0);
  const GbtModel a = train_gbt_classifier(set.x, set.y, 5, quick());
  const GbtModel b = GbtModel::from_json(a.to_json());
  CHECK(a == b);
  CHECK_THROWS(GbtModel::from_json("{\"kind\": 7}"));
}

TEST_CASE("limits: trees and depth are respected") {
  const auto set = testutil::separable_set(25, 43200.0);
  GbtParams p = quick();
  p.max_trees = 5;
  p.max_depth = 2;
  p.early_stop_rounds = 1000;
  const GbtModel m = train_gbt_classifier(set.x, set.y, 5, p);
  CHECK(m.rounds.size() <= 5);
  CHECK(m.max_tree_depth() <= 2);
  CHECK(m.tree_count() == m.rounds.size() * 5);
}

TEST_CASE("binary classifier uses a single output") {
  const std::vector<NumericFeature> layout = {{"x", FeatureGroup::Resources}};
  std::vector<FeatureVector> x;
  std::vector<int> y;
  Rng rng(5);
  for (int i = 0; i < 400; ++i) {
    const double v = rng.uniform();
    x.push_back(row({v}));
    y.push_back(v > 0.6 ? 1 : 0);
  }
  const GbtModel m = train_gbt_classifier(x, y, 2, quick(), layout);
  CHECK(m.num_outputs() == 1);
  CHECK(m.predict_class(row({0.9})) == 1);
  CHECK(m.predict_class(row({0.1})) == 0);
}

TEST_CASE("regressor fits a step function") {
  const std::vector<NumericFeature> layout = {{"x", FeatureGroup::Resources}};
  std::vector<FeatureVector> x;
  std::vector<double> y;
  for (int i = 0; i < 500; ++i) {
    const double v = i / 500.0;
    x.push_back(row({v}));
    y.push_back(v < 0.5 ? 10.0 : 20.0);
  }
  GbtParams p = quick();
  p.max_trees = 200;
  const GbtModel m = train_gbt_regressor(x, y, p, layout);
  CHECK(m.predict_value(row({0.2})) == doctest::Approx(10.0).epsilon(0.02));
  CHECK(m.predict_value(row({0.8})) == doctest::Approx(20.0).epsilon(0.02));
  CHECK_THROWS_AS(m.predict_class(row({0.2})), GbtError);
}

TEST_CASE("excluded groups are never split on") {
  const auto set = testutil::separable_set(26, 43200.0);
  GbtParams p = quick();
  p.excluded_groups = {FeatureGroup::Metadata, FeatureGroup::Historical};
  const GbtModel m = train_gbt_classifier(set.x, set.y, 5, p);
  for (const auto& round : m.rounds)
    for (const auto& t : round)
      for (const auto& n : t.nodes)
        if (n.feature >= 0) {
          const auto g = m.schema.group(static_cast<std::size_t>(n.feature));
          CHECK(g != FeatureGroup::Metadata);
          CHECK(g != FeatureGroup::Historical);
        }
}

TEST_CASE("bad inputs") {
  const auto set = testutil::separable_set(27, 20000.0);
  CHECK_THROWS_AS(train_gbt_classifier({}, {}, 3, quick()), GbtError);
  CHECK_THROWS_AS(train_gbt_classifier(set.x, std::vector<int>(set.x.size(), 9), 3, quick()), GbtError);
  CHECK_THROWS_AS(train_gbt_classifier(set.x, set.y, 1, quick()), GbtError);
  GbtParams p = quick();
  p.histogram_bins = 1;
  CHECK_THROWS_AS(validate_gbt_params(p), GbtError);
  p = quick();
  p.max_depth = 0;
  CHECK_THROWS_AS(validate_gbt_params(p), GbtError);
  FeatureVector short_row = set.x[0];
  short_row.numeric.pop_back();
  const GbtModel m = train_gbt_classifier(set.x, set.y, 5, quick());
  CHECK_THROWS_AS(m.predict_class(short_row), GbtError);
}

TEST_CASE("split_rows is a deterministic partition") {
  const auto [a, b] = split_rows(1000, 0.1, 3);
  const auto [c, d] = split_rows(1000, 0.1, 3);
  CHECK(a == c);
  CHECK(b == d);
  CHECK(a.size() + b.size() == 1000);
  CHECK(b.size() == 100);
  std::vector<char> seen(1000, 0);
  for (auto i : a) seen[i]++;
  for (auto i : b) seen[i]++;
  for (char s : seen) CHECK(s == 1);
}
