#include "tiersim/experiments.hpp"

#include <filesystem>
#include <fstream>

#include <fmt/format.h>

namespace tiersim {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
  return out;
}

bool same_experiment(const RunConfig& a, const RunConfig& b) {
  // The inputs that shape the trace and the machine must match.
  return a.seed == b.seed && a.intervals == b.intervals && a.accesses_per_interval == b.accesses_per_interval &&
         a.workload.kind == b.workload.kind && a.workload.gups.footprint_pages == b.workload.gups.footprint_pages &&
         a.workload.gups.hotset_fraction == b.workload.gups.hotset_fraction &&
         a.workload.gups.hot_access_fraction == b.workload.gups.hot_access_fraction &&
         a.workload.gups.accesses == b.workload.gups.accesses && a.workload.phase_count == b.workload.phase_count &&
         a.workload.trace_path == b.workload.trace_path && a.topology.tiers.size() == b.topology.tiers.size();
}

}  // namespace

double mean_recall(const RunResult& r) {
  if (r.intervals.empty()) return 0.0;
  double s = 0.0;
  for (const auto& m : r.intervals) s += m.recall;
  return s / static_cast<double>(r.intervals.size());
}

double mean_precision(const RunResult& r) {
  if (r.intervals.empty()) return 0.0;
  double s = 0.0;
  for (const auto& m : r.intervals) s += m.precision;
  return s / static_cast<double>(r.intervals.size());
}

nlohmann::json summarize(const RunConfig& cfg, const RunResult& result) {
  nlohmann::json j;
  j["system"] = to_string(result.system);
  j["seed"] = cfg.required_seed();
  j["workload"] = to_string(cfg.workload.kind);
  j["intervals"] = result.intervals.size();
  j["accesses_per_interval"] = cfg.accesses_per_interval;
  j["migration_mode"] = to_string(cfg.system_config.migration_mode);
  j["totals"] = {{"app_cost", result.totals.app},
                 {"profiling_cost", result.totals.profiling},
                 {"migration_exposed_cost", result.totals.migration_exposed},
                 {"total_cost", result.totals.total()},
                 {"profiling_fraction", result.totals.profiling_fraction()}};
  double background = 0.0;
  std::vector<std::uint64_t> tier_acc;
  for (const auto& m : result.intervals) {
    background += m.migration_background_cost;
    if (tier_acc.size() < m.tier_accesses.size()) tier_acc.resize(m.tier_accesses.size(), 0);
    for (std::size_t t = 0; t < m.tier_accesses.size(); ++t) tier_acc[t] += m.tier_accesses[t];
  }
  j["totals"]["migration_background_cost"] = background;
  j["tier_accesses"] = tier_acc;
  j["recall"] = {{"mean", mean_recall(result)},
                 {"final", result.intervals.empty() ? 0.0 : result.intervals.back().recall},
                 {"first_interval_at_0_8", first_interval_reaching(result.intervals, 0.8)}};
  j["precision"] = {{"mean", mean_precision(result)},
                    {"final", result.intervals.empty() ? 0.0 : result.intervals.back().precision}};
  j["profiling_budget_per_interval"] = result.profiling_budget;
  j["budget_violations"] = result.budget_violations;
  j["promoted_bytes"] = result.promoted_bytes;
  j["demoted_bytes"] = result.demoted_bytes;
  j["warnings"] = result.warnings;
  return j;
}

RunResult run_to_dir(const RunConfig& cfg, const std::string& out_dir) {
  const std::filesystem::path dir(out_dir);
  std::filesystem::create_directories(dir);
  const Workload workload = build_workload(cfg);
  auto metrics = open_out(dir / "metrics.csv");
  auto plan = open_out(dir / "plan.csv");
  auto migration = open_out(dir / "migration.csv");
  auto profiler = open_out(dir / "profiler.csv");
  RunResult result = simulate(cfg, workload, {&metrics, &plan, &migration, &profiler});
  auto summary = open_out(dir / "summary.json");
  summary << summarize(cfg, result).dump(2) << '\n';
  return result;
}

std::vector<RunConfig> configs_for_systems(const RunConfig& base, const std::vector<SystemKind>& systems) {
  std::vector<RunConfig> out;
  for (SystemKind k : systems) {
    RunConfig c = base;
    c.system = k;
    c.finalize();
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<CompareRow> compare(const std::vector<RunConfig>& configs, const std::string& out_dir) {
  if (configs.empty()) throw ConfigError("compare needs at least one system");
  for (const auto& c : configs) {
    if (!same_experiment(configs.front(), c)) {
      throw ConfigError("compared configs must share seed, workload and topology");
    }
  }
  const Workload workload = build_workload(configs.front());
  std::vector<CompareRow> rows;
  for (const auto& c : configs) {
    CompareRow row{c.system, {}, 1.0, 1.0};
    if (out_dir.empty()) {
      row.result = simulate(c, workload);
    } else {
      const auto dir = std::filesystem::path(out_dir) / to_string(c.system);
      std::filesystem::create_directories(dir);
      auto metrics = open_out(dir / "metrics.csv");
      auto plan = open_out(dir / "plan.csv");
      auto migration = open_out(dir / "migration.csv");
      auto profiler = open_out(dir / "profiler.csv");
      row.result = simulate(c, workload, {&metrics, &plan, &migration, &profiler});
      auto summary = open_out(dir / "summary.json");
      summary << summarize(c, row.result).dump(2) << '\n';
    }
    rows.push_back(std::move(row));
  }
  const CompareRow* ref = &rows.front();
  for (const auto& r : rows) {
    if (r.system == SystemKind::first_touch) ref = &r;
  }
  const double ref_app = ref->result.totals.app;
  const double ref_total = ref->result.totals.total();
  for (auto& r : rows) {
    r.normalized_app = ref_app > 0.0 ? r.result.totals.app / ref_app : 1.0;
    r.normalized_total = ref_total > 0.0 ? r.result.totals.total() / ref_total : 1.0;
  }
  if (!out_dir.empty()) {
    auto out = open_out(std::filesystem::path(out_dir) / "compare.csv");
    out << "system,app_cost,prof_cost,mig_cost,total_cost,normalized_app,normalized_total,mean_recall,mean_precision\n";
    for (const auto& r : rows) {
      const auto& t = r.result.totals;
      out << fmt::format("{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f}\n", to_string(r.system), t.app,
                         t.profiling, t.migration_exposed, t.total(), r.normalized_app, r.normalized_total,
                         mean_recall(r.result), mean_precision(r.result));
    }
  }
  return rows;
}

std::vector<SweepRow> sweep(const RunConfig& base, const std::string& param, const std::vector<std::string>& values,
                            const std::string& out_dir) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  const std::string key = sweep_key(param);
  std::vector<SweepRow> rows;
  for (const auto& v : values) {
    RunConfig c = base;
    set_config_value(c, key, v);
    c.finalize();
    const Workload workload = build_workload(c);
    rows.push_back({v, simulate(c, workload)});
  }
  if (!out_dir.empty()) {
    std::filesystem::create_directories(out_dir);
    auto out = open_out(std::filesystem::path(out_dir) / "sweep.csv");
    out << "param,value,mean_recall,mean_precision,app_cost,prof_cost,mig_cost,total_cost,budget_violations\n";
    for (const auto& r : rows) {
      const auto& t = r.result.totals;
      out << fmt::format("{},{},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{:.6f},{}\n", param, r.value,
                         mean_recall(r.result), mean_precision(r.result), t.app, t.profiling, t.migration_exposed,
                         t.total(), r.result.budget_violations);
    }
  }
  return rows;
}

}  // namespace tiersim
