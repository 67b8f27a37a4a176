#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "tiersim/profiler.hpp"

namespace tiersim {

inline constexpr double kDefaultHotThreshold = 2.0;

// Pages of every region whose whi reaches the threshold, ascending.
std::vector<PageIndex> detect_hot_pages(const RegionSet& regions, double threshold = kDefaultHotThreshold);

struct RecallPrecision {
  double recall = 1.0;
  double precision = 1.0;
};

// Both inputs sorted ascending without duplicates. An empty oracle gives
// recall 1 and an empty detection gives precision 1.
RecallPrecision recall_precision(std::span<const PageIndex> detected, std::span<const PageIndex> oracle);

struct IntervalMetrics {
  std::size_t interval = 0;
  double recall = 0.0;
  double precision = 0.0;
  double app_cost = 0.0;
  double profiling_cost = 0.0;
  double migration_exposed_cost = 0.0;
  double migration_background_cost = 0.0;
  std::vector<std::uint64_t> tier_accesses;  // by tier position
  std::size_t merges = 0;
  std::size_t splits = 0;
};

struct TimeBreakdown {
  double app = 0.0;
  double profiling = 0.0;
  double migration_exposed = 0.0;
  double total() const { return app + profiling + migration_exposed; }
  double profiling_fraction() const { return app > 0.0 ? profiling / app : 0.0; }
};

TimeBreakdown time_breakdown(std::span<const IntervalMetrics> intervals);

void write_metrics_csv_header(std::ostream& out, std::size_t tier_count);
void write_metrics_csv(std::ostream& out, const IntervalMetrics& m, std::size_t tier_count);

}  // namespace tiersim
