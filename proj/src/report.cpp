#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <ostream>
#include <set>

#include "tierlab/csv.hpp"
#include "tierlab/experiment.hpp"

namespace tierlab {

namespace {

const std::set<std::string> kLearned = {"adaptive-ranking"};
const std::set<std::string> kBaselines = {"firstfit", "heuristic", "lifetime"};

struct Stat {
  double mean = 0.0, lo = 0.0, hi = 0.0;
  std::size_t n = 0;
};

Stat stat_of(const std::vector<double>& v) {
  Stat s;
  s.n = v.size();
  if (v.empty()) return s;
  double sum = 0.0;
  for (double x : v) sum += x;
  s.mean = sum / static_cast<double>(v.size());
  s.lo = *std::min_element(v.begin(), v.end());
  s.hi = *std::max_element(v.begin(), v.end());
  return s;
}

// Minimal line chart: one polyline per policy, quota on a log axis when
// every quota is positive.
void write_svg(const std::string& title, const std::map<std::string, std::map<double, double>>& series,
               std::ostream& out) {
  const double w = 640, h = 400, ml = 60, mr = 160, mt = 30, mb = 40;
  double xmin = kUnlimited, xmax = -kUnlimited, ymin = 0.0, ymax = 1.0;
  for (const auto& [name, pts] : series)
    for (const auto& [q, v] : pts) {
      xmin = std::min(xmin, q);
      xmax = std::max(xmax, q);
      ymin = std::min(ymin, v);
      ymax = std::max(ymax, v);
    }
  const bool logx = xmin > 0.0 && xmax > xmin;
  auto fx = [&](double q) {
    const double a = logx ? std::log10(q) : q, lo = logx ? std::log10(xmin) : xmin,
                 hi = logx ? std::log10(xmax) : xmax;
    return ml + (hi > lo ? (a - lo) / (hi - lo) : 0.5) * (w - ml - mr);
  };
  auto fy = [&](double v) { return mt + (ymax - v) / (ymax - ymin) * (h - mt - mb); };
  const char* colors[] = {"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h << "\">\n";
  out << "<text x=\"" << ml << "\" y=\"18\" font-size=\"13\">" << title << "</text>\n";
  out << "<line x1=\"" << ml << "\" y1=\"" << fy(0) << "\" x2=\"" << w - mr << "\" y2=\"" << fy(0)
      << "\" stroke=\"#999\"/>\n";
  out << "<text x=\"4\" y=\"" << fy(ymax) + 4 << "\" font-size=\"11\">" << fmt_fixed(ymax, 1) << "%</text>\n";
  out << "<text x=\"4\" y=\"" << fy(ymin) + 4 << "\" font-size=\"11\">" << fmt_fixed(ymin, 1) << "%</text>\n";
  out << "<text x=\"" << ml << "\" y=\"" << h - 10 << "\" font-size=\"11\">quota " << fmt_double(xmin) << "</text>\n";
  out << "<text x=\"" << w - mr - 60 << "\" y=\"" << h - 10 << "\" font-size=\"11\">" << fmt_double(xmax)
      << "</text>\n";
  std::size_t k = 0;
  for (const auto& [name, pts] : series) {
    const char* c = colors[k % 10];
    out << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"2\" points=\"";
    for (const auto& [q, v] : pts) out << fx(q) << ',' << fy(v) << ' ';
    out << "\"/>\n";
    out << "<text x=\"" << w - mr + 8 << "\" y=\"" << mt + 16 * static_cast<double>(k) + 10
        << "\" font-size=\"11\" fill=\"" << c << "\">" << name << "</text>\n";
    ++k;
  }
  out << "</svg>\n";
}

}  // namespace

int cmd_report(const std::filesystem::path& dir, const ReportOptions& opts, std::ostream& out) {
  const auto path = dir / "sweep.csv";
  std::ifstream in(path);
  if (!in) {
    out << "error: missing " << path.string() << "\n";
    return kExitSpecError;
  }
  std::vector<SweepRow> rows;
  try {
    rows = read_sweep_csv(in);
  } catch (const std::exception& e) {
    out << "error: " << path.string() << ": " << e.what() << "\n";
    return kExitSpecError;
  }
  if (rows.empty()) {
    out << "error: " << path.string() << " has no rows\n";
    return kExitSpecError;
  }

  std::set<std::uint64_t> seeds;
  std::map<std::pair<std::string, double>, std::map<std::string, std::vector<double>>> tco;
  for (const auto& r : rows) {
    seeds.insert(r.seed);
    tco[{r.footprint, r.quota}][r.policy].push_back(r.tco_savings_pct);
  }
  out << "TCO savings by quota (synthetic clusters: " << seeds.size() << " generator seed"
      << (seeds.size() == 1 ? "" : "s") << ")\n";

  std::map<std::string, std::map<std::string, std::map<double, double>>> plot;  // footprint -> policy -> q -> mean
  for (const auto& [key, by_policy] : tco) {
    const auto& [footprint, quota] = key;
    std::vector<std::pair<std::string, Stat>> ranked;
    for (const auto& [p, v] : by_policy) ranked.emplace_back(p, stat_of(v));
    std::stable_sort(ranked.begin(), ranked.end(),
                     [](const auto& a, const auto& b) { return a.second.mean > b.second.mean; });
    out << "\n[" << footprint << ", quota " << fmt_double(quota) << "]\n";
    double best_learned = -kUnlimited, best_base = -kUnlimited;
    for (std::size_t i = 0; i < ranked.size(); ++i) {
      const auto& [p, s] = ranked[i];
      out << "  " << std::setw(2) << i + 1 << ". " << std::left << std::setw(18) << p << std::right << " mean "
          << std::setw(9) << fmt_fixed(s.mean, 3) << "%";
      if (s.n > 1) out << "  range [" << fmt_fixed(s.lo, 3) << ", " << fmt_fixed(s.hi, 3) << "]";
      out << "\n";
      if (kLearned.count(p)) best_learned = std::max(best_learned, s.mean);
      if (kBaselines.count(p)) best_base = std::max(best_base, s.mean);
      plot[footprint][p][quota] = s.mean;
    }
    if (std::isfinite(best_learned) && std::isfinite(best_base)) {
      out << "  best learned / best baseline: ";
      if (best_base > 0.0)
        out << fmt_fixed(best_learned / best_base, 3) << "x\n";
      else
        out << "n/a (best baseline saves " << fmt_fixed(best_base, 3) << "%)\n";
    }
  }

  const auto violations = check_sweep_invariants(rows);
  bool has_oracle = false;
  for (const auto& r : rows) has_oracle = has_oracle || r.policy == "oracle-tco";
  if (has_oracle) out << "\noracle dominance (constant footprint): " << (violations.empty() ? "ok" : "FAILED") << "\n";
  for (const auto& v : violations) out << "ERROR " << v << "\n";

  if (opts.plot) {
    for (const auto& [footprint, series] : plot) {
      const auto svg = dir / ("savings_vs_quota_" + footprint + ".svg");
      std::ofstream f(svg);
      if (!f) {
        out << "error: cannot write " << svg.string() << "\n";
        return kExitSpecError;
      }
      write_svg("TCO savings vs SSD quota (" + footprint + ", synthetic clusters)", series, f);
      out << "wrote " << svg.string() << "\n";
    }
  }
  return violations.empty() ? kExitOk : kExitInvariant;
}

}  // namespace tierlab
