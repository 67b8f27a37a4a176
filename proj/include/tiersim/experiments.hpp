#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "tiersim/simulation.hpp"

namespace tiersim {

nlohmann::json summarize(const RunConfig& cfg, const RunResult& result);

// Runs one finalized config and writes metrics.csv, plan.csv, migration.csv,
// profiler.csv and summary.json under `out_dir`.
RunResult run_to_dir(const RunConfig& cfg, const std::string& out_dir);

struct CompareRow {
  SystemKind system;
  RunResult result;
  double normalized_app = 1.0;    // app cost over the reference system's
  double normalized_total = 1.0;  // app + profiling + exposed migration, same reference
};

// Runs configs that differ only in `system` on one shared trace. The
// reference is the first-touch member when present, else the first config.
// Writes one run directory per system plus compare.csv when out_dir is set.
std::vector<CompareRow> compare(const std::vector<RunConfig>& configs, const std::string& out_dir = "");

// Copies of `base` with `system` replaced, finalized.
std::vector<RunConfig> configs_for_systems(const RunConfig& base, const std::vector<SystemKind>& systems);

struct SweepRow {
  std::string value;
  RunResult result;
};

// One run per value of a sweepable parameter; writes sweep.csv when out_dir is set.
std::vector<SweepRow> sweep(const RunConfig& base, const std::string& param, const std::vector<std::string>& values,
                            const std::string& out_dir = "");

double mean_recall(const RunResult& r);
double mean_precision(const RunResult& r);

}  // namespace tiersim
