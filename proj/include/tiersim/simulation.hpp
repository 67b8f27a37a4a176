#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "tiersim/config.hpp"
#include "tiersim/metrics.hpp"
#include "tiersim/workload.hpp"

namespace tiersim {

// Generates (or loads) the workload of a finalized config.
Workload build_workload(const RunConfig& cfg);

// Optional CSV destinations; headers are written by simulate().
struct RunSinks {
  std::ostream* metrics = nullptr;
  std::ostream* plan = nullptr;
  std::ostream* migration = nullptr;
  std::ostream* profiler = nullptr;
};

struct RunResult {
  SystemKind system = SystemKind::mtm;
  std::vector<IntervalMetrics> intervals;
  TimeBreakdown totals;
  double profiling_budget = 0.0;  // t_mi * overhead_constraint
  std::size_t budget_violations = 0;
  std::uint64_t promoted_bytes = 0;
  std::uint64_t demoted_bytes = 0;
  std::vector<std::string> warnings;
};

// Interval loop: replay+profile, policy update and planning, plan execution
// concurrent with the next slice, then metrics against the oracle.
RunResult simulate(const RunConfig& cfg, const Workload& workload, const RunSinks& sinks = {});

// First interval index >= `from` whose recall reaches `target`, or
// intervals.size() when none does.
std::size_t first_interval_reaching(const std::vector<IntervalMetrics>& intervals, double target,
                                    std::size_t from = 0);

}  // namespace tiersim
