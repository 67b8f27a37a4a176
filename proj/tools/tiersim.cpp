#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "tiersim/experiments.hpp"

namespace {

enum ExitCode { kOk = 0, kConfigError = 2, kInfeasible = 3, kMemoryExhausted = 4, kOther = 1 };

tiersim::RunConfig load(const std::string& path, const std::string& system) {
  tiersim::RunConfig cfg = tiersim::load_config(path);
  if (!system.empty()) cfg.system = tiersim::system_kind_from_string(system);
  cfg.finalize();
  return cfg;
}

void print_run(const tiersim::RunConfig& cfg, const tiersim::RunResult& r) {
  std::cout << fmt::format("system={} intervals={} recall_mean={:.4f} precision_mean={:.4f} app={:.2f} prof={:.2f} "
                           "mig={:.2f} budget_violations={}\n",
                           tiersim::to_string(cfg.system), r.intervals.size(), tiersim::mean_recall(r),
                           tiersim::mean_precision(r), r.totals.app, r.totals.profiling, r.totals.migration_exposed,
                           r.budget_violations);
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trace-driven tiered-memory page management simulator"};
  app.require_subcommand(1);
  std::string config;
  std::string out = "out";
  std::string system;

  auto* run = app.add_subcommand("run", "Run one system and write CSV reports");
  run->add_option("-c,--config", config, "Config file (key=value or .json)")->required();
  run->add_option("--out", out, "Output directory");
  run->add_option("--system", system, "mtm, mtm-no-pebs, first-touch, autonuma, thermostat or damon");

  std::vector<std::string> systems;
  auto* cmp = app.add_subcommand("compare", "Run several systems on one shared trace");
  cmp->add_option("-c,--config", config, "Config file")->required();
  cmp->add_option("--out", out, "Output directory");
  cmp->add_option("--systems", systems, "Systems to compare")->required()->delimiter(',');

  std::string param;
  std::vector<std::string> values;
  auto* swp = app.add_subcommand("sweep", "Run one system over values of a parameter");
  swp->add_option("-c,--config", config, "Config file")->required();
  swp->add_option("--out", out, "Output directory");
  swp->add_option("--system", system, "System to sweep");
  swp->add_option("--param", param, "overhead_constraint, alpha, tau1, tau2, num_scans, bucket_width or N")
      ->required();
  swp->add_option("--values", values, "Values to try")->required()->delimiter(',');

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      const auto cfg = load(config, system);
      const auto result = tiersim::run_to_dir(cfg, out);
      print_run(cfg, result);
    } else if (cmp->parsed()) {
      const auto base = load(config, "");
      std::vector<tiersim::SystemKind> kinds;
      for (const auto& s : systems) kinds.push_back(tiersim::system_kind_from_string(s));
      const auto rows = tiersim::compare(tiersim::configs_for_systems(base, kinds), out);
      std::cout << "system,normalized_app,normalized_total,mean_recall\n";
      for (const auto& r : rows) {
        std::cout << fmt::format("{},{:.4f},{:.4f},{:.4f}\n", tiersim::to_string(r.system), r.normalized_app,
                                 r.normalized_total, tiersim::mean_recall(r.result));
      }
    } else if (swp->parsed()) {
      const auto base = load(config, system);
      const auto rows = tiersim::sweep(base, param, values, out);
      std::cout << "value,mean_recall,total_cost\n";
      for (const auto& r : rows) {
        std::cout << fmt::format("{},{:.4f},{:.2f}\n", r.value, tiersim::mean_recall(r.result), r.result.totals.total());
      }
    }
  } catch (const tiersim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const tiersim::InfeasibleConstraint& e) {
    std::cerr << e.what() << '\n';
    return kInfeasible;
  } catch (const tiersim::MemoryExhausted& e) {
    std::cerr << e.what() << '\n';
    return kMemoryExhausted;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kOther;
  }
  return kOk;
}
