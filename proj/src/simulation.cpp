#include "tiersim/simulation.hpp"

#include <fstream>

#include <fmt/format.h>

namespace tiersim {

Workload build_workload(const RunConfig& cfg) {
  switch (cfg.workload.kind) {
    case WorkloadKind::gups: return gen_gups(cfg.workload.gups, cfg.accesses_per_interval);
    case WorkloadKind::phase_change:
      return gen_phase_change(cfg.workload.phases, cfg.required_seed(), cfg.accesses_per_interval);
    case WorkloadKind::trace: {
      std::ifstream in(cfg.workload.trace_path);
      if (!in) throw ConfigError(fmt::format("field workload.trace_path: cannot open '{}'", cfg.workload.trace_path));
      Workload w;
      w.trace = read_trace_csv(in);
      w.oracle = HotOracle::build(w.trace, cfg.accesses_per_interval);
      return w;
    }
  }
  throw std::logic_error("unknown workload kind");
}

RunResult simulate(const RunConfig& cfg, const Workload& workload, const RunSinks& sinks) {
  RunResult result;
  result.system = cfg.system;
  const Topology topo = Topology::build(cfg.topology);
  Memory memory(topo, cfg.costs, workload.trace.footprint_pages);
  first_touch_alloc(memory, cfg.init_node, cfg.huge_pages);
  auto system = make_system(cfg.system, cfg.system_config, memory);

  const std::uint64_t api = cfg.accesses_per_interval;
  const HotOracle oracle = workload.oracle.accesses_per_interval() == api ? workload.oracle
                                                                          : HotOracle::build(workload.trace, api);
  std::size_t n = cfg.intervals;
  if (n > workload.trace.interval_count(api)) {
    n = workload.trace.interval_count(api);
    result.warnings.push_back(fmt::format("trace covers only {} of {} intervals", n, cfg.intervals));
  }
  const auto& prof = cfg.system_config.profiler;
  result.profiling_budget = prof.t_mi * prof.overhead_constraint;
  const std::size_t tiers = topo.tier_count();

  if (sinks.metrics) write_metrics_csv_header(*sinks.metrics, tiers);
  if (sinks.plan) write_plan_csv_header(*sinks.plan);
  if (sinks.migration) write_migration_csv_header(*sinks.migration);
  if (sinks.profiler) write_profiler_csv_header(*sinks.profiler);

  for (std::size_t i = 0; i < n; ++i) {
    memory.reset_tier_accesses();
    const CostLedger before = memory.ledger();
    const auto slice = workload.trace.slice(i, api);
    IntervalProfile stats = system->profile(memory, slice);
    MigrationPlan plan = system->decide(memory, stats);
    const auto concurrent = workload.trace.slice(i + 1, api);
    MigrationReport report = execute_plan(memory, plan, system->migration_mode(), concurrent);
    system->after_migration(memory);
    if (report.error) throw MemoryExhausted(fmt::format("interval {}: {}", i, *report.error));
    for (auto& w : stats.warnings) result.warnings.push_back(fmt::format("interval {}: {}", i, w));

    IntervalMetrics m;
    m.interval = i;
    const auto detected = system->detected_hot(cfg.hot_threshold);
    const auto rp = recall_precision(detected, oracle.hot_pages(i));
    m.recall = rp.recall;
    m.precision = rp.precision;
    const CostLedger& after = memory.ledger();
    m.app_cost = after.app - before.app;
    m.profiling_cost = after.profiling - before.profiling;
    m.migration_exposed_cost = after.migration_exposed - before.migration_exposed;
    m.migration_background_cost = after.migration_background - before.migration_background;
    m.tier_accesses = memory.tier_accesses();
    m.merges = stats.merges;
    m.splits = stats.splits;
    if (m.profiling_cost > result.profiling_budget * (1.0 + 1e-12)) ++result.budget_violations;
    result.promoted_bytes += plan.promoted_bytes;
    result.demoted_bytes += plan.demoted_bytes;

    if (sinks.metrics) write_metrics_csv(*sinks.metrics, m, tiers);
    if (sinks.plan) write_plan_csv(*sinks.plan, i, plan, topo);
    if (sinks.migration) write_migration_csv(*sinks.migration, i, report, topo);
    if (sinks.profiler && system->regions()) write_profiler_csv(*sinks.profiler, i, *system->regions(), topo);
    result.intervals.push_back(std::move(m));
  }
  result.totals = time_breakdown(result.intervals);
  return result;
}

std::size_t first_interval_reaching(const std::vector<IntervalMetrics>& intervals, double target, std::size_t from) {
  for (std::size_t i = from; i < intervals.size(); ++i) {
    if (intervals[i].recall >= target) return i;
  }
  return intervals.size();
}

}  // namespace tiersim
