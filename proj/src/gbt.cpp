#include "tierlab/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include <json.hpp>

#include "tierlab/kernels.hpp"
#include "tierlab/rng.hpp"

namespace tierlab {

using kernels::HistBin;

void validate_gbt_params(const GbtParams& p) {
  if (p.max_trees < 1) throw GbtError("max_trees must be >= 1");
  if (p.max_depth < 1) throw GbtError("max_depth must be >= 1");
  if (p.histogram_bins < 2 || p.histogram_bins > 256) throw GbtError("histogram_bins must be in [2, 256]");
  if (!(p.learning_rate > 0.0)) throw GbtError("learning_rate must be > 0");
  if (!(p.validation_fraction >= 0.0 && p.validation_fraction < 1.0))
    throw GbtError("validation_fraction must be in [0, 1)");
  if (p.early_stop_rounds < 1) throw GbtError("early_stop_rounds must be >= 1");
  if (!(p.l2 >= 0.0)) throw GbtError("l2 must be >= 0");
  if (p.min_child_samples < 1) throw GbtError("min_child_samples must be >= 1");
  if (p.max_tokens < 0) throw GbtError("max_tokens must be >= 0");
}

FeatureGroup FeatureSchema::group(std::size_t col) const {
  return col < numeric_groups.size() ? numeric_groups[col] : FeatureGroup::Metadata;
}

std::string FeatureSchema::column_name(std::size_t col) const {
  return col < numeric_names.size() ? numeric_names[col] : "token[" + tokens[col - numeric_names.size()] + "]";
}

FeatureSchema schema_from_layout(const std::vector<NumericFeature>& layout) {
  FeatureSchema s;
  for (const auto& f : layout) {
    s.numeric_names.emplace_back(f.name);
    s.numeric_groups.push_back(f.group);
  }
  return s;
}

static double column_value(const EncodedRow& row, std::size_t col, std::size_t num_numeric) {
  if (col < num_numeric) return row.numeric[col];
  const auto t = static_cast<std::uint32_t>(col - num_numeric);
  return std::binary_search(row.token_cols.begin(), row.token_cols.end(), t) ? 1.0 : 0.0;
}

double Tree::predict(const EncodedRow& row, std::size_t num_numeric) const {
  if (nodes.empty()) return 0.0;
  std::size_t i = 0;
  while (nodes[i].feature >= 0) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(column_value(row, static_cast<std::size_t>(n.feature), num_numeric) <= n.threshold
                                     ? n.left
                                     : n.right);
  }
  return nodes[i].value;
}

int Tree::depth() const {
  if (nodes.empty()) return 0;
  int best = 0;
  std::vector<std::pair<std::size_t, int>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (nodes[i].feature >= 0) {
      stack.emplace_back(static_cast<std::size_t>(nodes[i].left), d + 1);
      stack.emplace_back(static_cast<std::size_t>(nodes[i].right), d + 1);
    }
  }
  return best;
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_rows(std::size_t n, double valid_fraction,
                                                                         std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  Rng rng = Rng::substream(seed, "gbt-split");
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  auto n_valid = static_cast<std::size_t>(std::floor(valid_fraction * static_cast<double>(n)));
  if (n_valid >= n) n_valid = n - 1;
  std::vector<std::size_t> valid(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n_valid));
  std::vector<std::size_t> train(idx.begin() + static_cast<std::ptrdiff_t>(n_valid), idx.end());
  std::sort(valid.begin(), valid.end());
  std::sort(train.begin(), train.end());
  return {train, valid};
}

namespace {

// Binned view of all rows (train and validation) over a schema.
struct Binned {
  std::size_t n_rows = 0;
  std::size_t n_numeric = 0;
  std::vector<std::uint8_t> bins;           // column-major
  std::vector<std::vector<double>> edges;   // per numeric feature
  std::vector<EncodedRow> rows;
  std::vector<std::vector<std::uint32_t>> token_rows;  // rows containing token t
};

std::vector<double> fit_edges(std::vector<double> v, int max_bins) {
  std::sort(v.begin(), v.end());
  std::vector<double> uniq = v;
  uniq.erase(std::unique(uniq.begin(), uniq.end()), uniq.end());
  std::vector<double> edges;
  if (uniq.size() <= 1) return edges;
  if (uniq.size() <= static_cast<std::size_t>(max_bins)) {
    for (std::size_t i = 0; i + 1 < uniq.size(); ++i) edges.push_back(uniq[i] + (uniq[i + 1] - uniq[i]) / 2.0);
    return edges;
  }
  const std::size_t n = v.size();
  for (int j = 1; j < max_bins; ++j) {
    const double c = v[static_cast<std::size_t>(j) * n / static_cast<std::size_t>(max_bins)];
    if (c >= uniq.back()) break;
    if (edges.empty() || c > edges.back()) edges.push_back(c);
  }
  return edges;
}

std::vector<std::string> select_tokens(const std::vector<FeatureVector>& x, const std::vector<std::size_t>& train,
                                       int max_tokens) {
  std::map<std::string, std::size_t> counts;
  for (std::size_t i : train)
    for (const auto& t : x[i].tokens) ++counts[t];
  std::vector<std::pair<std::size_t, std::string>> ranked;
  for (auto& [t, c] : counts)
    if (c < train.size()) ranked.emplace_back(c, t);
  std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  if (ranked.size() > static_cast<std::size_t>(max_tokens)) ranked.resize(static_cast<std::size_t>(max_tokens));
  std::vector<std::string> vocab;
  for (auto& r : ranked) vocab.push_back(r.second);
  std::sort(vocab.begin(), vocab.end());
  return vocab;
}

EncodedRow encode_with(const FeatureSchema& schema, const FeatureVector& f) {
  if (f.numeric.size() != schema.num_numeric())
    throw GbtError("feature schema mismatch: expected " + std::to_string(schema.num_numeric()) +
                   " numeric features, got " + std::to_string(f.numeric.size()));
  EncodedRow row;
  row.numeric = f.numeric.data();
  for (const auto& t : f.tokens) {
    auto it = std::lower_bound(schema.tokens.begin(), schema.tokens.end(), t);
    if (it != schema.tokens.end() && *it == t)
      row.token_cols.push_back(static_cast<std::uint32_t>(it - schema.tokens.begin()));
  }
  std::sort(row.token_cols.begin(), row.token_cols.end());
  return row;
}

Binned bin_rows(const FeatureSchema& schema, const std::vector<FeatureVector>& x,
                const std::vector<std::size_t>& train, int max_bins) {
  Binned b;
  b.n_rows = x.size();
  b.n_numeric = schema.num_numeric();
  b.rows.reserve(x.size());
  for (const auto& f : x) b.rows.push_back(encode_with(schema, f));
  b.edges.resize(b.n_numeric);
  b.bins.assign(b.n_numeric * b.n_rows, 0);
  for (std::size_t f = 0; f < b.n_numeric; ++f) {
    std::vector<double> vals;
    vals.reserve(train.size());
    for (std::size_t i : train) vals.push_back(x[i].numeric[f]);
    b.edges[f] = fit_edges(std::move(vals), max_bins);
    const auto& e = b.edges[f];
    for (std::size_t r = 0; r < b.n_rows; ++r)
      b.bins[f * b.n_rows + r] =
          static_cast<std::uint8_t>(std::lower_bound(e.begin(), e.end(), x[r].numeric[f]) - e.begin());
  }
  b.token_rows.resize(schema.tokens.size());
  for (std::size_t r = 0; r < b.n_rows; ++r)
    for (std::uint32_t t : b.rows[r].token_cols) b.token_rows[t].push_back(static_cast<std::uint32_t>(r));
  return b;
}

class TreeBuilder {
 public:
  TreeBuilder(const Binned& data, const GbtParams& p, std::vector<char> active_numeric,
              std::vector<char> active_tokens)
      : d_(data), p_(p), active_num_(std::move(active_numeric)), active_tok_(std::move(active_tokens)) {
    stride_ = static_cast<std::size_t>(p.histogram_bins);
    mark_.assign(d_.n_rows, 0);
  }

  Tree build(std::vector<std::uint32_t> rows, const double* g, const double* h) {
    g_ = g;
    h_ = h;
    Tree tree;
    Hist hist = make_hist();
    fill(rows, hist);
    double G = 0.0, H = 0.0;
    for (std::uint32_t r : rows) {
      G += g[r];
      H += h[r];
    }
    grow(tree, rows, hist, G, H, 0);
    return tree;
  }

 private:
  struct Hist {
    std::vector<HistBin> num;
    std::vector<HistBin> tok;
  };

  Hist make_hist() const {
    Hist hist;
    hist.num.assign(d_.n_numeric * stride_, HistBin{});
    hist.tok.assign(d_.token_rows.size(), HistBin{});
    return hist;
  }

  void fill(const std::vector<std::uint32_t>& rows, Hist& hist) {
    const kernels::BinnedColumns cols{d_.bins.data(), d_.n_rows, d_.n_numeric};
    if (p_.parallel)
      kernels::build_histograms_omp(cols, rows, g_, h_, active_num_, stride_, hist.num.data());
    else
      kernels::build_histograms_serial(cols, rows, g_, h_, active_num_, stride_, hist.num.data());
    for (std::uint32_t r : rows) {
      for (std::uint32_t t : d_.rows[r].token_cols) {
        if (!active_tok_[t]) continue;
        HistBin& b = hist.tok[t];
        b.g += g_[r];
        b.h += h_[r];
        ++b.n;
      }
    }
  }

  double score(double G, double H) const { return G * G / (H + p_.l2); }

  std::int32_t grow(Tree& tree, std::vector<std::uint32_t>& rows, Hist& hist, double G, double H, int depth) {
    const auto id = static_cast<std::int32_t>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[static_cast<std::size_t>(id)].value = -G / (H + p_.l2) * p_.learning_rate;
    const std::size_t n = rows.size();
    const auto min_child = static_cast<std::size_t>(p_.min_child_samples);
    if (depth >= p_.max_depth || n < 2 * min_child) return id;

    const double parent = score(G, H);
    double best_gain = 1e-12 * (std::abs(parent) + 1e-300);
    best_gain = std::max(best_gain, 0.0);
    std::int64_t best_col = -1;
    int best_bin = 0;
    double bGL = 0, bHL = 0;
    for (std::size_t f = 0; f < d_.n_numeric; ++f) {
      if (!active_num_[f]) continue;
      const int nb = static_cast<int>(d_.edges[f].size()) + 1;
      const HistBin* hb = hist.num.data() + f * stride_;
      double GL = 0, HL = 0;
      std::size_t nL = 0;
      for (int b = 0; b + 1 < nb; ++b) {
        GL += hb[b].g;
        HL += hb[b].h;
        nL += hb[b].n;
        if (nL < min_child) continue;
        if (n - nL < min_child) break;
        const double gain = 0.5 * (score(GL, HL) + score(G - GL, H - HL) - parent);
        if (gain > best_gain) {
          best_gain = gain;
          best_col = static_cast<std::int64_t>(f);
          best_bin = b;
          bGL = GL;
          bHL = HL;
        }
      }
    }
    for (std::size_t t = 0; t < hist.tok.size(); ++t) {
      if (!active_tok_[t]) continue;
      const HistBin& pres = hist.tok[t];
      const std::size_t nL = n - pres.n;
      if (pres.n < min_child || nL < min_child) continue;
      const double GL = G - pres.g, HL = H - pres.h;
      const double gain = 0.5 * (score(GL, HL) + score(pres.g, pres.h) - parent);
      if (gain > best_gain) {
        best_gain = gain;
        best_col = static_cast<std::int64_t>(d_.n_numeric + t);
        best_bin = 0;
        bGL = GL;
        bHL = HL;
      }
    }
    if (best_col < 0) return id;

    std::vector<std::uint32_t> left, right;
    left.reserve(n);
    right.reserve(n);
    double threshold;
    if (static_cast<std::size_t>(best_col) < d_.n_numeric) {
      const auto f = static_cast<std::size_t>(best_col);
      const std::uint8_t* col = d_.bins.data() + f * d_.n_rows;
      for (std::uint32_t r : rows) (col[r] <= best_bin ? left : right).push_back(r);
      threshold = d_.edges[f][static_cast<std::size_t>(best_bin)];
    } else {
      const auto t = static_cast<std::uint32_t>(static_cast<std::size_t>(best_col) - d_.n_numeric);
      for (std::uint32_t r : d_.token_rows[t]) mark_[r] = 1;
      for (std::uint32_t r : rows) (mark_[r] ? right : left).push_back(r);
      for (std::uint32_t r : d_.token_rows[t]) mark_[r] = 0;
      threshold = 0.5;
    }
    {
      std::vector<std::uint32_t>().swap(rows);
    }

    // Build the smaller child directly; the larger one is parent minus it.
    const bool left_small = left.size() <= right.size();
    Hist small = make_hist();
    fill(left_small ? left : right, small);
    for (std::size_t i = 0; i < hist.num.size(); ++i) {
      hist.num[i].g -= small.num[i].g;
      hist.num[i].h -= small.num[i].h;
      hist.num[i].n -= small.num[i].n;
    }
    for (std::size_t i = 0; i < hist.tok.size(); ++i) {
      hist.tok[i].g -= small.tok[i].g;
      hist.tok[i].h -= small.tok[i].h;
      hist.tok[i].n -= small.tok[i].n;
    }
    Hist& lh = left_small ? small : hist;
    Hist& rh = left_small ? hist : small;

    const double GR = G - bGL, HR = H - bHL;
    const std::int32_t l = grow(tree, left, lh, bGL, bHL, depth + 1);
    const std::int32_t r = grow(tree, right, rh, GR, HR, depth + 1);
    auto& node = tree.nodes[static_cast<std::size_t>(id)];
    node.feature = static_cast<std::int32_t>(best_col);
    node.threshold = threshold;
    node.left = l;
    node.right = r;
    node.value = 0.0;
    return id;
  }

  const Binned& d_;
  const GbtParams& p_;
  std::vector<char> active_num_;
  std::vector<char> active_tok_;
  std::size_t stride_ = 0;
  std::vector<char> mark_;
  const double* g_ = nullptr;
  const double* h_ = nullptr;
};

bool group_excluded(const GbtParams& p, FeatureGroup g) {
  return std::find(p.excluded_groups.begin(), p.excluded_groups.end(), g) != p.excluded_groups.end();
}

// Softmax cross-entropy of one row; a single output is a logit for class 1.
double row_logloss(const double* s, std::size_t k, int y) {
  if (k == 1) {
    const double z = s[0];
    // log(1 + exp(-z)) for y = 1, log(1 + exp(z)) for y = 0.
    const double m = y == 1 ? -z : z;
    return m > 0 ? m + std::log1p(std::exp(-m)) : std::log1p(std::exp(m));
  }
  double mx = s[0];
  for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, s[j]);
  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) sum += std::exp(s[j] - mx);
  return mx + std::log(sum) - s[static_cast<std::size_t>(y)];
}

void softmax(const double* s, std::size_t k, double* out) {
  if (k == 1) {
    out[0] = 1.0 / (1.0 + std::exp(-s[0]));
    return;
  }
  double mx = s[0];
  for (std::size_t j = 1; j < k; ++j) mx = std::max(mx, s[j]);
  double sum = 0.0;
  for (std::size_t j = 0; j < k; ++j) {
    out[j] = std::exp(s[j] - mx);
    sum += out[j];
  }
  for (std::size_t j = 0; j < k; ++j) out[j] /= sum;
}

int argmax_class(const double* s, std::size_t k) {
  if (k == 1) return s[0] > 0.0 ? 1 : 0;
  std::size_t best = 0;
  for (std::size_t j = 1; j < k; ++j)
    if (s[j] > s[best]) best = j;
  return static_cast<int>(best);
}

struct Target {
  bool classifier = true;
  std::vector<int> label;
  std::vector<double> value;
};

double mean_loss(const Target& t, const std::vector<double>& scores, std::size_t k,
                 const std::vector<std::size_t>& rows) {
  if (rows.empty()) return 0.0;
  double sum = 0.0;
  for (std::size_t r : rows) {
    const double* s = scores.data() + r * k;
    if (t.classifier) {
      sum += row_logloss(s, k, t.label[r]);
    } else {
      const double e = s[0] - t.value[r];
      sum += 0.5 * e * e;
    }
  }
  return sum / static_cast<double>(rows.size());
}

GbtModel boost(GbtModel model, const std::vector<FeatureVector>& x, const Target& target,
               const std::vector<NumericFeature>& layout) {
  const GbtParams& p = model.params;
  validate_gbt_params(p);
  const std::size_t n = x.size();
  if (n == 0) throw GbtError("training set is empty");
  if (n < 2) throw GbtError("training set needs at least 2 examples");

  auto [train, valid] = split_rows(n, p.validation_fraction, p.seed);
  model.schema = schema_from_layout(layout);
  model.schema.tokens = select_tokens(x, train, p.max_tokens);
  const Binned data = bin_rows(model.schema, x, train, p.histogram_bins);

  std::vector<char> active_num(model.schema.num_numeric()), active_tok(model.schema.tokens.size());
  for (std::size_t f = 0; f < active_num.size(); ++f) active_num[f] = !group_excluded(p, model.schema.numeric_groups[f]);
  for (auto& a : active_tok) a = !group_excluded(p, FeatureGroup::Metadata);
  TreeBuilder builder(data, p, active_num, active_tok);

  const std::size_t k = model.num_outputs();
  std::vector<std::size_t> class_count(static_cast<std::size_t>(model.num_classes), 0);
  if (target.classifier)
    for (std::size_t r : train) ++class_count[static_cast<std::size_t>(target.label[r])];

  std::vector<double> scores(n * k);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < k; ++j) scores[r * k + j] = model.base_score[j];

  std::vector<std::uint32_t> train32(train.begin(), train.end());
  std::vector<double> g(n * k, 0.0), h(n * k, 0.0), prob(k);
  std::vector<double> delta(n * k), trial(n * k);
  double cur_loss = mean_loss(target, scores, k, train);
  double best_valid = std::numeric_limits<double>::infinity();
  std::size_t best_rounds = 0;
  std::vector<double> train_curve, valid_curve;

  for (int round = 0; round < p.max_trees; ++round) {
    // Gradients, stored output-major so each tree reads a contiguous array.
    for (std::size_t r : train) {
      const double* s = scores.data() + r * k;
      if (target.classifier) {
        softmax(s, k, prob.data());
        for (std::size_t j = 0; j < k; ++j) {
          const int cls = k == 1 ? 1 : static_cast<int>(j);
          const double y = target.label[r] == cls ? 1.0 : 0.0;
          g[j * n + r] = prob[j] - y;
          h[j * n + r] = std::max(prob[j] * (1.0 - prob[j]), 1e-6);
        }
      } else {
        g[r] = s[0] - target.value[r];
        h[r] = 1.0;
      }
    }
    std::vector<Tree> trees(k);
    for (std::size_t j = 0; j < k; ++j) {
      if (target.classifier && k > 1 && class_count[j] == 0) continue;
      trees[j] = builder.build(train32, g.data() + j * n, h.data() + j * n);
    }
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t j = 0; j < k; ++j)
        delta[r * k + j] = trees[j].predict(data.rows[r], data.n_numeric);

    // Step-halving keeps the training loss from ever increasing.
    double alpha = 1.0, new_loss = 0.0;
    bool accepted = false;
    for (int attempt = 0; attempt <= 8; ++attempt) {
      for (std::size_t i = 0; i < scores.size(); ++i) trial[i] = scores[i] + alpha * delta[i];
      new_loss = mean_loss(target, trial, k, train);
      if (new_loss <= cur_loss) {
        accepted = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!accepted) break;
    if (alpha != 1.0)
      for (auto& t : trees)
        for (auto& node : t.nodes) node.value *= alpha;
    scores.swap(trial);
    cur_loss = new_loss;
    model.rounds.push_back(std::move(trees));
    train_curve.push_back(cur_loss);

    if (!valid.empty()) {
      const double vl = mean_loss(target, scores, k, valid);
      valid_curve.push_back(vl);
      if (vl < best_valid) {
        best_valid = vl;
        best_rounds = model.rounds.size();
      } else if (model.rounds.size() - best_rounds >= static_cast<std::size_t>(p.early_stop_rounds)) {
        model.info.stopped_early = true;
        break;
      }
    } else {
      best_rounds = model.rounds.size();
    }
  }

  model.rounds.resize(best_rounds);
  train_curve.resize(std::min(train_curve.size(), best_rounds));
  valid_curve.resize(std::min(valid_curve.size(), best_rounds));
  model.info.train_loss = std::move(train_curve);
  model.info.valid_loss = std::move(valid_curve);
  model.info.best_round = static_cast<int>(best_rounds);
  model.info.n_train = train.size();
  model.info.n_valid = valid.size();

  if (target.classifier) {
    const auto& eval = valid.empty() ? train : valid;
    std::size_t correct = 0;
    for (std::size_t r : eval)
      if (model.predict_class(x[r]) == target.label[r]) ++correct;
    model.info.valid_accuracy = static_cast<double>(correct) / static_cast<double>(eval.size());
  }
  return model;
}

}  // namespace

std::size_t GbtModel::tree_count() const {
  std::size_t c = 0;
  for (const auto& r : rounds)
    for (const auto& t : r)
      if (!t.nodes.empty()) ++c;
  return c;
}

int GbtModel::max_tree_depth() const {
  int d = 0;
  for (const auto& r : rounds)
    for (const auto& t : r) d = std::max(d, t.depth());
  return d;
}

EncodedRow GbtModel::encode(const FeatureVector& f) const { return encode_with(schema, f); }

std::vector<double> GbtModel::raw_scores(const FeatureVector& f) const {
  const EncodedRow row = encode(f);
  std::vector<double> s = base_score;
  for (const auto& r : rounds)
    for (std::size_t j = 0; j < r.size(); ++j) s[j] += r[j].predict(row, schema.num_numeric());
  return s;
}

std::vector<double> GbtModel::predict_proba(const FeatureVector& f) const {
  if (kind != Kind::Classifier) throw GbtError("predict_proba on a regressor");
  const auto s = raw_scores(f);
  if (s.size() == 1) {
    const double p1 = 1.0 / (1.0 + std::exp(-s[0]));
    return {1.0 - p1, p1};
  }
  std::vector<double> p(s.size());
  softmax(s.data(), s.size(), p.data());
  return p;
}

int GbtModel::predict_class(const FeatureVector& f) const {
  if (kind != Kind::Classifier) throw GbtError("predict_class on a regressor");
  const auto s = raw_scores(f);
  return argmax_class(s.data(), s.size());
}

double GbtModel::predict_value(const FeatureVector& f) const {
  if (kind != Kind::Regressor) throw GbtError("predict_value on a classifier");
  return raw_scores(f)[0];
}

std::vector<int> GbtModel::predict_classes(const std::vector<FeatureVector>& rows, bool parallel) const {
  std::vector<int> out(rows.size());
  const auto n = static_cast<std::ptrdiff_t>(rows.size());
#pragma omp parallel for schedule(static) if (parallel)
  for (std::ptrdiff_t i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = predict_class(rows[static_cast<std::size_t>(i)]);
  return out;
}

GbtModel train_gbt_classifier(const std::vector<FeatureVector>& x, const std::vector<int>& y, int num_classes,
                              const GbtParams& params, const std::vector<NumericFeature>& layout) {
  if (num_classes < 2) throw GbtError("classifier needs at least 2 classes");
  if (x.size() != y.size()) throw GbtError("features and labels differ in length");
  if (x.empty()) throw GbtError("training set is empty");
  for (int v : y)
    if (v < 0 || v >= num_classes) throw GbtError("label " + std::to_string(v) + " out of range");
  GbtModel m;
  m.kind = GbtModel::Kind::Classifier;
  m.num_classes = num_classes;
  m.params = params;
  validate_gbt_params(params);
  auto [train, valid] = split_rows(x.size(), params.validation_fraction, params.seed);
  std::vector<double> count(static_cast<std::size_t>(num_classes), 0.0);
  for (std::size_t r : train) count[static_cast<std::size_t>(y[r])] += 1.0;
  const double total = static_cast<double>(train.size());
  if (num_classes == 2) {
    const double p1 = (count[1] + 1.0) / (total + 2.0);
    m.base_score = {std::log(p1 / (1.0 - p1))};
  } else {
    for (double c : count) m.base_score.push_back(std::log((c + 1.0) / (total + num_classes)));
  }
  Target t;
  t.classifier = true;
  t.label = y;
  return boost(std::move(m), x, t, layout);
}

GbtModel train_gbt_regressor(const std::vector<FeatureVector>& x, const std::vector<double>& y,
                             const GbtParams& params, const std::vector<NumericFeature>& layout) {
  if (x.size() != y.size()) throw GbtError("features and targets differ in length");
  if (x.empty()) throw GbtError("training set is empty");
  GbtModel m;
  m.kind = GbtModel::Kind::Regressor;
  m.num_classes = 1;
  m.params = params;
  validate_gbt_params(params);
  auto [train, valid] = split_rows(x.size(), params.validation_fraction, params.seed);
  double sum = 0.0;
  for (std::size_t r : train) sum += y[r];
  m.base_score = {sum / static_cast<double>(train.size())};
  Target t;
  t.classifier = false;
  t.value = y;
  return boost(std::move(m), x, t, layout);
}

// Serialization

namespace {

using nlohmann::ordered_json;

FeatureGroup group_from_string(const std::string& s) {
  for (auto g : kAllFeatureGroups)
    if (s == to_string(g)) return g;
  throw GbtError("unknown feature group '" + s + "'");
}

}  // namespace

std::string GbtModel::to_json() const {
  ordered_json j;
  j["format"] = "tierlab-gbt";
  j["version"] = 1;
  j["kind"] = kind == Kind::Classifier ? "classifier" : "regressor";
  j["num_classes"] = num_classes;
  ordered_json pj;
  pj["max_trees"] = params.max_trees;
  pj["max_depth"] = params.max_depth;
  pj["learning_rate"] = params.learning_rate;
  pj["histogram_bins"] = params.histogram_bins;
  pj["validation_fraction"] = params.validation_fraction;
  pj["early_stop_rounds"] = params.early_stop_rounds;
  pj["seed"] = params.seed;
  pj["l2"] = params.l2;
  pj["min_child_samples"] = params.min_child_samples;
  pj["max_tokens"] = params.max_tokens;
  pj["excluded_groups"] = ordered_json::array();
  for (auto g : params.excluded_groups) pj["excluded_groups"].push_back(to_string(g));
  pj["parallel"] = params.parallel;
  j["params"] = pj;
  ordered_json sj;
  sj["numeric"] = ordered_json::array();
  for (std::size_t i = 0; i < schema.num_numeric(); ++i)
    sj["numeric"].push_back({{"name", schema.numeric_names[i]}, {"group", to_string(schema.numeric_groups[i])}});
  sj["tokens"] = schema.tokens;
  j["schema"] = sj;
  j["base_score"] = base_score;
  ordered_json rj = ordered_json::array();
  for (const auto& r : rounds) {
    ordered_json round = ordered_json::array();
    for (const auto& t : r) {
      ordered_json tj;
      std::vector<std::int32_t> f, l, rr;
      std::vector<double> th, v;
      for (const auto& nd : t.nodes) {
        f.push_back(nd.feature);
        th.push_back(nd.threshold);
        l.push_back(nd.left);
        rr.push_back(nd.right);
        v.push_back(nd.value);
      }
      tj["feature"] = f;
      tj["threshold"] = th;
      tj["left"] = l;
      tj["right"] = rr;
      tj["value"] = v;
      round.push_back(tj);
    }
    rj.push_back(round);
  }
  j["rounds"] = rj;
  ordered_json ij;
  ij["train_loss"] = info.train_loss;
  ij["valid_loss"] = info.valid_loss;
  ij["best_round"] = info.best_round;
  ij["valid_accuracy"] = info.valid_accuracy;
  ij["n_train"] = info.n_train;
  ij["n_valid"] = info.n_valid;
  ij["stopped_early"] = info.stopped_early;
  j["info"] = ij;
  return j.dump();
}

GbtModel GbtModel::from_json(const std::string& text) {
  GbtModel m;
  try {
    const auto j = ordered_json::parse(text);
    if (j.at("format") != "tierlab-gbt") throw GbtError("not a tierlab-gbt model");
    if (j.at("version") != 1) throw GbtError("unsupported model version");
    m.kind = j.at("kind") == "classifier" ? Kind::Classifier : Kind::Regressor;
    m.num_classes = j.at("num_classes").get<int>();
    const auto& pj = j.at("params");
    m.params.max_trees = pj.at("max_trees").get<int>();
    m.params.max_depth = pj.at("max_depth").get<int>();
    m.params.learning_rate = pj.at("learning_rate").get<double>();
    m.params.histogram_bins = pj.at("histogram_bins").get<int>();
    m.params.validation_fraction = pj.at("validation_fraction").get<double>();
    m.params.early_stop_rounds = pj.at("early_stop_rounds").get<int>();
    m.params.seed = pj.at("seed").get<std::uint64_t>();
    m.params.l2 = pj.at("l2").get<double>();
    m.params.min_child_samples = pj.at("min_child_samples").get<int>();
    m.params.max_tokens = pj.at("max_tokens").get<int>();
    for (const auto& g : pj.at("excluded_groups")) m.params.excluded_groups.push_back(group_from_string(g));
    m.params.parallel = pj.at("parallel").get<bool>();
    const auto& sj = j.at("schema");
    for (const auto& f : sj.at("numeric")) {
      m.schema.numeric_names.push_back(f.at("name").get<std::string>());
      m.schema.numeric_groups.push_back(group_from_string(f.at("group").get<std::string>()));
    }
    m.schema.tokens = sj.at("tokens").get<std::vector<std::string>>();
    m.base_score = j.at("base_score").get<std::vector<double>>();
    const std::size_t cols = m.schema.columns();
    for (const auto& rj : j.at("rounds")) {
      std::vector<Tree> round;
      for (const auto& tj : rj) {
        const auto f = tj.at("feature").get<std::vector<std::int32_t>>();
        const auto th = tj.at("threshold").get<std::vector<double>>();
        const auto l = tj.at("left").get<std::vector<std::int32_t>>();
        const auto r = tj.at("right").get<std::vector<std::int32_t>>();
        const auto v = tj.at("value").get<std::vector<double>>();
        Tree t;
        for (std::size_t i = 0; i < f.size(); ++i) {
          TreeNode nd{f[i], th.at(i), l.at(i), r.at(i), v.at(i)};
          if (nd.feature >= 0) {
            const auto sz = static_cast<std::int32_t>(f.size());
            if (static_cast<std::size_t>(nd.feature) >= cols) throw GbtError("split on unknown column");
            if (nd.left <= static_cast<std::int32_t>(i) || nd.right <= static_cast<std::int32_t>(i) || nd.left >= sz ||
                nd.right >= sz)
              throw GbtError("malformed tree");
          }
          t.nodes.push_back(nd);
        }
        round.push_back(std::move(t));
      }
      if (round.size() != m.base_score.size()) throw GbtError("round has wrong number of trees");
      m.rounds.push_back(std::move(round));
    }
    const auto& ij = j.at("info");
    m.info.train_loss = ij.at("train_loss").get<std::vector<double>>();
    m.info.valid_loss = ij.at("valid_loss").get<std::vector<double>>();
    m.info.best_round = ij.at("best_round").get<int>();
    m.info.valid_accuracy = ij.at("valid_accuracy").get<double>();
    m.info.n_train = ij.at("n_train").get<std::size_t>();
    m.info.n_valid = ij.at("n_valid").get<std::size_t>();
    m.info.stopped_early = ij.at("stopped_early").get<bool>();
  } catch (const nlohmann::json::exception& e) {
    throw GbtError(std::string("model file: ") + e.what());
  }
  return m;
}

}  // namespace tierlab
