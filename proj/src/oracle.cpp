#include "tierlab/oracle.hpp"

#include <algorithm>
#include <chrono>
#include <limits>
#include <cmath>
#include <istream>
#include <numeric>
#include <ostream>

#include "tierlab/csv.hpp"

namespace tierlab {

const char* to_string(Objective o) { return o == Objective::Tco ? "tco" : "tcio"; }

Objective objective_from_string(const std::string& s) {
  if (s == "tco") return Objective::Tco;
  if (s == "tcio") return Objective::Tcio;
  throw OracleError("unknown objective '" + s + "' (tco|tcio)");
}

OracleInstance build_instance(const Trace& trace, const CostRates& rates, double quota, Objective objective) {
  if (!(quota >= 0.0)) throw OracleError("quota must be >= 0");
  OracleInstance inst;
  inst.quota = quota;
  inst.objective = objective;
  inst.jobs.reserve(trace.jobs.size());
  for (const auto& j : trace.jobs) {
    OracleJob o;
    o.id = j.job_id;
    o.arrival = j.arrival_time;
    o.end = j.end_time;
    o.size = static_cast<double>(j.peak_bytes);
    o.gain = objective == Objective::Tco ? tco_savings(j, rates) : tcio_total(j, Device::Hdd, rates, j.end_time);
    inst.jobs.push_back(std::move(o));
  }
  return inst;
}

double objective_of(const OracleInstance& inst, const std::vector<char>& x) {
  double v = 0.0;
  for (std::size_t i = 0; i < inst.jobs.size(); ++i)
    if (x[i]) v += inst.jobs[i].gain;
  return v;
}

bool feasible(const OracleInstance& inst, const std::vector<char>& x) {
  if (x.size() != inst.jobs.size()) return false;
  // Sweep every arrival instant; ends at the same instant are still active.
  std::vector<std::pair<double, int>> ev;
  for (std::size_t i = 0; i < inst.jobs.size(); ++i) {
    ev.emplace_back(inst.jobs[i].arrival, 0);
    if (x[i]) {
      ev.emplace_back(inst.jobs[i].arrival, -1 - static_cast<int>(i));
      ev.emplace_back(inst.jobs[i].end, 1 + static_cast<int>(i));
    }
  }
  // At a tie: selected arrivals, then the check, then ends.
  std::sort(ev.begin(), ev.end());
  double used = 0.0;
  for (const auto& [t, code] : ev) {
    if (code < 0) {
      used += inst.jobs[static_cast<std::size_t>(-code - 1)].size;
    } else if (code == 0) {
      if (used > inst.quota) return false;
    } else {
      used -= inst.jobs[static_cast<std::size_t>(code - 1)].size;
    }
  }
  return true;
}

bool verify(const OracleInstance& inst, const OracleSolution& sol) {
  if (!feasible(inst, sol.x)) return false;
  return objective_of(inst, sol.x) == sol.objective_value;
}

namespace {

// Range add / range max over point indices.
class MaxTree {
 public:
  explicit MaxTree(std::size_t n) : n_(std::max<std::size_t>(n, 1)), mx_(4 * n_, 0.0), lz_(4 * n_, 0.0) {}
  void add(std::size_t l, std::size_t r, double v) { add(1, 0, n_ - 1, l, r, v); }
  double max(std::size_t l, std::size_t r) const { return max(1, 0, n_ - 1, l, r); }

 private:
  void add(std::size_t node, std::size_t nl, std::size_t nr, std::size_t l, std::size_t r, double v) {
    if (r < nl || nr < l) return;
    if (l <= nl && nr <= r) {
      mx_[node] += v;
      lz_[node] += v;
      return;
    }
    const std::size_t mid = (nl + nr) / 2;
    add(2 * node, nl, mid, l, r, v);
    add(2 * node + 1, mid + 1, nr, l, r, v);
    mx_[node] = std::max(mx_[2 * node], mx_[2 * node + 1]) + lz_[node];
  }
  double max(std::size_t node, std::size_t nl, std::size_t nr, std::size_t l, std::size_t r) const {
    if (r < nl || nr < l) return -kInf;
    if (l <= nl && nr <= r) return mx_[node];
    const std::size_t mid = (nl + nr) / 2;
    return std::max(max(2 * node, nl, mid, l, r), max(2 * node + 1, mid + 1, nr, l, r)) + lz_[node];
  }
  static constexpr double kInf = std::numeric_limits<double>::infinity();
  std::size_t n_;
  std::vector<double> mx_, lz_;
};

struct Item {
  std::size_t job;
  std::size_t lo, hi;  // point range
  double size, gain;
};

bool denser(const Item& a, const Item& b) {
  const double da = a.gain / a.size, db = b.gain / b.size;
  if (da != db) return da > db;
  return a.job < b.job;
}

class Solver {
 public:
  Solver(const OracleInstance& inst, const OracleLimits& limits) : inst_(inst), limits_(limits) {
    start_ = std::chrono::steady_clock::now();
  }

  OracleSolution solve(const std::vector<char>* warm) {
    const auto& jobs = inst_.jobs;
    const double M = inst_.quota;
    OracleSolution sol;
    sol.x.assign(jobs.size(), 0);

    std::vector<std::size_t> cand;
    for (std::size_t i = 0; i < jobs.size(); ++i)
      if (jobs[i].gain > 0.0 && jobs[i].size <= M) cand.push_back(i);
    if (cand.empty()) return finish(sol, 0.0);

    for (std::size_t i : cand) points_.push_back(jobs[i].arrival);
    std::sort(points_.begin(), points_.end());
    points_.erase(std::unique(points_.begin(), points_.end()), points_.end());
    const std::size_t P = points_.size();
    std::vector<Item> items;
    for (std::size_t i : cand) {
      Item it;
      it.job = i;
      it.lo = static_cast<std::size_t>(std::lower_bound(points_.begin(), points_.end(), jobs[i].arrival) -
                                       points_.begin());
      it.hi = static_cast<std::size_t>(std::upper_bound(points_.begin(), points_.end(), jobs[i].end) -
                                       points_.begin()) - 1;
      it.size = jobs[i].size;
      it.gain = jobs[i].gain;
      items.push_back(it);
    }

    // Jobs that fit even if every candidate were selected are free.
    MaxTree total(P);
    for (const auto& it : items) total.add(it.lo, it.hi, it.size);
    MaxTree used(P);
    std::vector<Item> open;
    double fixed_bound = 0.0;
    for (const auto& it : items) {
      if (total.max(it.lo, it.hi) <= M) {
        sol.x[it.job] = 1;
        used.add(it.lo, it.hi, it.size);
        fixed_bound += it.gain;
      } else {
        open.push_back(it);
      }
    }

    std::vector<char> best = incumbent(open, used, sol.x, warm);

    // Components of overlapping open jobs are independent given the fixed set.
    std::sort(open.begin(), open.end(), [](const Item& a, const Item& b) {
      return a.lo != b.lo ? a.lo < b.lo : a.job < b.job;
    });
    std::vector<std::vector<Item>> comps;
    std::size_t reach = 0;
    for (const auto& it : open) {
      if (comps.empty() || it.lo > reach) {
        comps.emplace_back();
        reach = it.hi;
      } else {
        reach = std::max(reach, it.hi);
      }
      comps.back().push_back(it);
    }
    std::stable_sort(comps.begin(), comps.end(),
                     [](const auto& a, const auto& b) { return a.size() < b.size(); });
    sol.components = comps.size();

    double bound = fixed_bound;
    bool all_complete = true;
    for (std::size_t c = 0; c < comps.size(); ++c) {
      const std::uint64_t remaining = limits_.node_budget > nodes_ ? limits_.node_budget - nodes_ : 0;
      const std::uint64_t share = std::max<std::uint64_t>(1, remaining / (comps.size() - c));
      const auto r = search(comps[c], used, best, share);
      bound += r.first;
      all_complete = all_complete && r.second;
    }
    for (std::size_t i = 0; i < jobs.size(); ++i) sol.x[i] = best[i];
    sol.status = all_complete ? OracleStatus::Optimal : OracleStatus::Bounded;
    return finish(sol, bound);
  }

 private:
  OracleSolution finish(OracleSolution& sol, double bound) {
    sol.objective_value = objective_of(inst_, sol.x);
    sol.nodes_explored = nodes_;
    sol.time_limited = timed_out_;
    sol.bound = sol.status == OracleStatus::Optimal ? sol.objective_value : std::max(bound, sol.objective_value);
    sol.gap = sol.bound - sol.objective_value;
    return sol;
  }

  // Best of several greedy fills (and the warm start, topped up).
  std::vector<char> incumbent(const std::vector<Item>& open, const MaxTree& used, const std::vector<char>& fixed,
                              const std::vector<char>* warm) {
    const double M = inst_.quota;
    std::vector<std::vector<Item>> orders(4, open);
    std::sort(orders[0].begin(), orders[0].end(), denser);
    std::sort(orders[1].begin(), orders[1].end(), [this](const Item& a, const Item& b) {
      const double da = a.gain / (a.size * duration(a)), db = b.gain / (b.size * duration(b));
      return da != db ? da > db : a.job < b.job;
    });
    std::sort(orders[2].begin(), orders[2].end(),
              [](const Item& a, const Item& b) { return a.gain != b.gain ? a.gain > b.gain : a.job < b.job; });
    std::sort(orders[3].begin(), orders[3].end(),
              [](const Item& a, const Item& b) { return a.lo != b.lo ? a.lo < b.lo : a.job < b.job; });

    std::vector<char> best = fixed;
    double best_val = -1.0;
    auto consider = [&](std::vector<char> x) {
      const double v = objective_of(inst_, x);
      if (v > best_val) {
        best_val = v;
        best = std::move(x);
      }
    };
    for (const auto& order : orders) {
      MaxTree t = used;
      std::vector<char> x = fixed;
      for (const auto& it : order) {
        if (t.max(it.lo, it.hi) + it.size <= M) {
          t.add(it.lo, it.hi, it.size);
          x[it.job] = 1;
        }
      }
      consider(std::move(x));
    }
    if (warm && warm->size() == inst_.jobs.size()) {
      std::vector<char> x = fixed;
      bool ok = true;
      MaxTree t = used;
      for (const auto& it : orders[0]) {
        if (!(*warm)[it.job]) continue;
        if (t.max(it.lo, it.hi) + it.size > M) {
          ok = false;
          break;
        }
        t.add(it.lo, it.hi, it.size);
        x[it.job] = 1;
      }
      if (ok) {
        for (const auto& it : orders[0]) {
          if (x[it.job]) continue;
          if (t.max(it.lo, it.hi) + it.size <= M) {
            t.add(it.lo, it.hi, it.size);
            x[it.job] = 1;
          }
        }
        consider(std::move(x));
      }
    }
    return best;
  }

  double duration(const Item& it) const { return inst_.jobs[it.job].end - inst_.jobs[it.job].arrival; }

  struct Comp {
    std::vector<Item> items;                       // density order
    std::vector<double> suffix;                    // gain of items[d..]
    std::size_t pmin = 0, pmax = 0;
    std::vector<std::vector<std::uint32_t>> at;    // per point (offset pmin): items active there
    bool full_bound = true;
  };

  // Returns (upper bound on the component's best value, search completed).
  std::pair<double, bool> search(const std::vector<Item>& items, MaxTree& used, std::vector<char>& best,
                                 std::uint64_t budget) {
    Comp c;
    c.items = items;
    std::sort(c.items.begin(), c.items.end(), denser);
    const std::size_t K = c.items.size();
    c.suffix.assign(K + 1, 0.0);
    for (std::size_t d = K; d-- > 0;) c.suffix[d] = c.suffix[d + 1] + c.items[d].gain;
    c.pmin = c.items[0].lo;
    c.pmax = c.items[0].hi;
    for (const auto& it : c.items) {
      c.pmin = std::min(c.pmin, it.lo);
      c.pmax = std::max(c.pmax, it.hi);
    }
    c.at.resize(c.pmax - c.pmin + 1);
    for (std::size_t d = 0; d < K; ++d)
      for (std::size_t p = c.items[d].lo; p <= c.items[d].hi; ++p)
        c.at[p - c.pmin].push_back(static_cast<std::uint32_t>(d));
    c.full_bound = K <= 64;

    comp_ = &c;
    used_ = &used;
    chosen_.assign(K, 0);
    best_chosen_.assign(K, 0);
    best_val_ = 0.0;
    for (std::size_t d = 0; d < K; ++d)
      if (best[c.items[d].job]) {
        best_chosen_[d] = 1;
        best_val_ += c.items[d].gain;
      }
    const double incumbent_val = best_val_;

    // Root bound over every point of the component.
    double root_loss = 0.0;
    for (std::size_t p = c.pmin; p <= c.pmax; ++p) root_loss = std::max(root_loss, loss_at(p, 0));
    const double root_bound = c.suffix[0] - root_loss;

    node_limit_ = nodes_ + budget;
    aborted_ = false;
    dfs(0, 0.0, c.pmin);

    if (best_val_ > incumbent_val)
      for (std::size_t d = 0; d < K; ++d) best[c.items[d].job] = best_chosen_[d];
    const bool complete = !aborted_;
    return {complete ? best_val_ : std::max(root_bound, best_val_), complete};
  }

  // Gain of undecided items at point p that cannot fit, even fractionally.
  double loss_at(std::size_t p, std::size_t depth) const {
    const Comp& c = *comp_;
    const auto& list = c.at[p - c.pmin];
    auto it = std::lower_bound(list.begin(), list.end(), static_cast<std::uint32_t>(depth));
    double cap = inst_.quota - used_->max(p, p);
    double total = 0.0, packed = 0.0;
    for (; it != list.end(); ++it) {
      const Item& item = c.items[*it];
      total += item.gain;
      if (cap <= 0.0) continue;
      if (item.size <= cap) {
        packed += item.gain;
        cap -= item.size;
      } else {
        packed += item.gain * (cap / item.size);
        cap = 0.0;
      }
    }
    return total - packed;
  }

  bool out_of_budget() {
    if (nodes_ >= node_limit_) return true;
    if ((nodes_ & 4095) == 0) {
      const double el = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
      if (el > limits_.time_budget) timed_out_ = true;
    }
    return timed_out_;
  }

  void dfs(std::size_t d, double value, std::size_t hint) {
    if (out_of_budget()) {
      aborted_ = true;
      return;
    }
    ++nodes_;
    const Comp& c = *comp_;
    const std::size_t K = c.items.size();
    if (d == K) {
      if (value > best_val_) {
        best_val_ = value;
        best_chosen_ = chosen_;
      }
      return;
    }
    // Any single point gives a valid bound; large components only look at a
    // few points near the last decision.
    double loss = 0.0;
    std::size_t arg = hint;
    auto probe = [&](std::size_t p) {
      const double l = loss_at(p, d);
      if (l > loss) {
        loss = l;
        arg = p;
      }
    };
    if (c.full_bound) {
      for (std::size_t p = c.pmin; p <= c.pmax; ++p) probe(p);
    } else {
      probe(hint);
      if (d > 0) {
        const Item& last = c.items[d - 1];
        probe(last.lo);
        probe(last.hi);
        probe(last.lo + (last.hi - last.lo) / 2);
      }
      const Item& next = c.items[d];
      probe(next.lo);
      probe(next.hi);
    }
    if (value + c.suffix[d] - loss <= best_val_) return;

    const Item& it = c.items[d];
    if (used_->max(it.lo, it.hi) + it.size <= inst_.quota) {
      used_->add(it.lo, it.hi, it.size);
      chosen_[d] = 1;
      dfs(d + 1, value + it.gain, arg);
      chosen_[d] = 0;
      used_->add(it.lo, it.hi, -it.size);
      if (aborted_) return;
    }
    dfs(d + 1, value, arg);
  }

  const OracleInstance& inst_;
  OracleLimits limits_;
  std::chrono::steady_clock::time_point start_;
  std::vector<double> points_;
  std::uint64_t nodes_ = 0;
  std::uint64_t node_limit_ = 0;
  bool aborted_ = false;
  bool timed_out_ = false;
  const Comp* comp_ = nullptr;
  MaxTree* used_ = nullptr;
  std::vector<char> chosen_, best_chosen_;
  double best_val_ = 0.0;
};

}  // namespace

OracleSolution solve(const OracleInstance& inst, const OracleLimits& limits, const std::vector<char>* warm_start) {
  if (!(inst.quota >= 0.0)) throw OracleError("quota must be >= 0");
  for (const auto& j : inst.jobs) {
    if (!(j.size > 0.0)) throw OracleError("job " + j.id + " has non-positive size");
    if (!(j.end > j.arrival)) throw OracleError("job " + j.id + " has end <= arrival");
  }
  Solver s(inst, limits);
  return s.solve(warm_start);
}

void write_instance_csv(const OracleInstance& inst, std::ostream& out) {
  out << "id,arrival,end,size,gain\n";
  for (const auto& j : inst.jobs)
    out << csv_escape(j.id) << ',' << fmt_double(j.arrival) << ',' << fmt_double(j.end) << ',' << fmt_double(j.size)
        << ',' << fmt_double(j.gain) << '\n';
}

OracleInstance read_instance_csv(std::istream& in, double quota, Objective objective) {
  OracleInstance inst;
  inst.quota = quota;
  inst.objective = objective;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (lineno == 1 || line.empty()) continue;
    const auto f = csv_split(line);
    if (f.size() != 5) throw OracleError("instance csv line " + std::to_string(lineno) + ": expected 5 fields");
    try {
      inst.jobs.push_back({f[0], std::stod(f[1]), std::stod(f[2]), std::stod(f[3]), std::stod(f[4])});
    } catch (const std::exception&) {
      throw OracleError("instance csv line " + std::to_string(lineno) + ": bad number");
    }
  }
  return inst;
}

void write_solution_csv(const OracleInstance& inst, const OracleSolution& sol, std::ostream& out) {
  out << "id,ssd,gain\n";
  for (std::size_t i = 0; i < inst.jobs.size(); ++i)
    out << csv_escape(inst.jobs[i].id) << ',' << (sol.x[i] ? 1 : 0) << ',' << fmt_double(inst.jobs[i].gain) << '\n';
}

}  // namespace tierlab
