#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tiersim/baselines.hpp"
#include "tiersim/memmodel.hpp"
#include "tiersim/workload.hpp"

namespace tiersim {

enum class WorkloadKind { gups, phase_change, trace };

std::string to_string(WorkloadKind kind);

struct PhaseOverride {
  std::size_t phase = 0;
  std::string field;
  std::string value;
};

struct WorkloadSpec {
  WorkloadKind kind = WorkloadKind::gups;
  GupsParams gups;                 // also the template for every phase
  std::size_t phase_count = 4;     // phase_change only
  std::vector<PhaseOverride> phase_overrides;
  std::vector<GupsParams> phases;  // filled by finalize() from gups plus overrides
  std::string trace_path;
};

struct InterTierFactor {
  TierId src;
  TierId dst;
  double factor = 1.0;
};

struct RunConfig {
  std::optional<std::uint64_t> seed;
  TopologySpec topology;
  CostModel costs;
  std::vector<InterTierFactor> inter_tier_factors;
  std::vector<std::pair<TierId, std::uint64_t>> tier_capacity_pages;  // resolved against base_page_bytes
  WorkloadSpec workload;
  SystemKind system = SystemKind::mtm;
  SystemConfig system_config;
  bool t_mi_set = false;  // otherwise t_mi = accesses_per_interval
  bool huge_pages = false;
  NodeId init_node = 0;
  std::size_t intervals = 10;
  std::uint64_t accesses_per_interval = 1000;
  double hot_threshold = 2.0;

  // Resolves derived fields (seeds, t_mi, phases, factor matrix) and checks
  // every module's preconditions. Throws ConfigError naming the field.
  void finalize();
  std::uint64_t required_seed() const;
};

// Applies one dotted key. Throws ConfigError for unknown keys or bad values.
void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value);

// key = value lines; '#' starts a comment; lists are comma separated.
// Errors carry the origin and line number.
RunConfig parse_config_text(const std::string& text, const std::string& origin = "config");
// Nested objects become dotted keys; arrays become comma lists.
RunConfig parse_config_json(const std::string& text, const std::string& origin = "config");
// Picks the JSON parser for *.json files, the key=value parser otherwise.
// The TIERSIM_SEED environment variable overrides the seed.
RunConfig load_config(const std::string& path);

// Sweepable parameter name -> config key.
std::string sweep_key(const std::string& param);

}  // namespace tiersim
