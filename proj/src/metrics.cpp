#include "tiersim/metrics.hpp"

#include <algorithm>
#include <ostream>

#include <fmt/format.h>

namespace tiersim {

std::vector<PageIndex> detect_hot_pages(const RegionSet& regions, double threshold) {
  std::vector<PageIndex> pages;
  for (const auto& r : regions) {
    if (!r.has_history || r.whi < threshold) continue;
    for (PageIndex p = r.start; p < r.end(); ++p) pages.push_back(p);
  }
  std::sort(pages.begin(), pages.end());
  pages.erase(std::unique(pages.begin(), pages.end()), pages.end());
  return pages;
}

RecallPrecision recall_precision(std::span<const PageIndex> detected, std::span<const PageIndex> oracle) {
  std::size_t both = 0;
  auto d = detected.begin();
  auto o = oracle.begin();
  while (d != detected.end() && o != oracle.end()) {
    if (*d < *o) {
      ++d;
    } else if (*o < *d) {
      ++o;
    } else {
      ++both;
      ++d;
      ++o;
    }
  }
  RecallPrecision rp;
  if (!oracle.empty()) rp.recall = static_cast<double>(both) / static_cast<double>(oracle.size());
  if (!detected.empty()) rp.precision = static_cast<double>(both) / static_cast<double>(detected.size());
  return rp;
}

TimeBreakdown time_breakdown(std::span<const IntervalMetrics> intervals) {
  TimeBreakdown t;
  for (const auto& m : intervals) {
    t.app += m.app_cost;
    t.profiling += m.profiling_cost;
    t.migration_exposed += m.migration_exposed_cost;
  }
  return t;
}

void write_metrics_csv_header(std::ostream& out, std::size_t tier_count) {
  out << "interval,recall,precision,app_cost,prof_cost,mig_cost";
  for (std::size_t t = 0; t < std::max<std::size_t>(4, tier_count); ++t) out << ",t" << t + 1 << "_acc";
  out << ",merges,splits\n";
}

void write_metrics_csv(std::ostream& out, const IntervalMetrics& m, std::size_t tier_count) {
  out << fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}", m.interval, m.recall, m.precision, m.app_cost,
                     m.profiling_cost, m.migration_exposed_cost);
  for (std::size_t t = 0; t < std::max<std::size_t>(4, tier_count); ++t) {
    out << ',' << (t < m.tier_accesses.size() ? m.tier_accesses[t] : 0);
  }
  out << ',' << m.merges << ',' << m.splits << '\n';
}

}  // namespace tiersim
