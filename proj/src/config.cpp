#include "tiersim/config.hpp"

#include <algorithm>
#include <cerrno>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <fmt/format.h>
#include <json.hpp>

namespace tiersim {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) parts.push_back(trim(cur));
  return parts;
}

[[noreturn]] void bad_value(const std::string& key, const std::string& value, const char* what) {
  throw ConfigError(fmt::format("field {}: '{}' is not {}", key, value, what));
}

double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  const double d = std::strtod(v.c_str(), &end);
  if (v.empty() || end != v.c_str() + v.size() || errno != 0) bad_value(key, v, "a number");
  return d;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || ec != std::errc() || ptr != v.data() + v.size()) bad_value(key, v, "a non-negative integer");
  return out;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  bad_value(key, v, "a boolean");
}

std::vector<NodeId> to_nodes(const std::string& key, const std::string& v) {
  std::vector<NodeId> nodes;
  for (const auto& part : split(v, ',')) nodes.push_back(static_cast<NodeId>(to_u64(key, part)));
  return nodes;
}

TierDesc& tier_entry(RunConfig& cfg, TierId id) {
  for (auto& t : cfg.topology.tiers) {
    if (t.id == id) return t;
  }
  cfg.topology.tiers.push_back(TierDesc{id, 0, {}, std::nullopt});
  return cfg.topology.tiers.back();
}

// Applies a GUPS field; returns false when `field` is not one.
bool set_gups_field(GupsParams& g, const std::string& key, const std::string& field, const std::string& v) {
  if (field == "footprint_pages") {
    g.footprint_pages = to_u64(key, v);
  } else if (field == "hotset_fraction") {
    g.hotset_fraction = to_double(key, v);
  } else if (field == "hot_access_fraction") {
    g.hot_access_fraction = to_double(key, v);
  } else if (field == "accesses") {
    g.accesses = to_u64(key, v);
  } else if (field == "nodes") {
    g.nodes = to_nodes(key, v);
  } else if (field == "pinned_node") {
    if (v.empty() || v == "none") {
      g.pinned_node.reset();
    } else {
      g.pinned_node = static_cast<NodeId>(to_u64(key, v));
    }
  } else if (field == "write_fraction") {
    g.write_fraction = to_double(key, v);
  } else if (field == "rehash_hotset_every") {
    g.rehash_hotset_every = to_u64(key, v);
  } else if (field == "seed") {
    g.seed = to_u64(key, v);
  } else {
    return false;
  }
  return true;
}

[[noreturn]] void unknown_key(const std::string& key) { throw ConfigError(fmt::format("unknown key '{}'", key)); }

void set_topology(RunConfig& cfg, const std::string& key, const std::vector<std::string>& path, const std::string& v) {
  auto& topo = cfg.topology;
  if (path.size() == 2 && path[1] == "nodes") {
    topo.nodes = to_nodes(key, v);
  } else if (path.size() == 2 && path[1] == "base_page_bytes") {
    topo.base_page_bytes = to_u64(key, v);
  } else if (path.size() == 2 && path[1] == "huge_page_pages") {
    topo.huge_page_pages = static_cast<std::uint32_t>(to_u64(key, v));
  } else if (path.size() == 4 && path[1] == "tier") {
    const TierId id{static_cast<std::uint32_t>(to_u64(key, path[2]))};
    TierDesc& t = tier_entry(cfg, id);
    const std::string& field = path[3];
    if (field == "capacity_bytes") {
      t.capacity_bytes = to_u64(key, v);
      std::erase_if(cfg.tier_capacity_pages, [&](const auto& p) { return p.first == id; });
    } else if (field == "capacity_pages") {
      std::erase_if(cfg.tier_capacity_pages, [&](const auto& p) { return p.first == id; });
      cfg.tier_capacity_pages.emplace_back(id, to_u64(key, v));
    } else if (field == "cost") {
      t.access_cost.clear();
      for (const auto& part : split(v, ',')) t.access_cost.push_back(to_double(key, part));
    } else if (field == "home_node") {
      t.home_node = static_cast<NodeId>(to_u64(key, v));
    } else {
      unknown_key(key);
    }
  } else if (path.size() == 3 && path[1] == "view") {
    const auto node = static_cast<NodeId>(to_u64(key, path[2]));
    std::vector<TierId> view;
    for (const auto& part : split(v, ',')) view.push_back(TierId{static_cast<std::uint32_t>(to_u64(key, part))});
    topo.views[node] = view;
  } else {
    unknown_key(key);
  }
}

void set_cost(RunConfig& cfg, const std::string& key, const std::vector<std::string>& path, const std::string& v) {
  auto& c = cfg.costs;
  if (path.size() == 4 && path[1] == "inter_tier_factor") {
    const TierId src{static_cast<std::uint32_t>(to_u64(key, path[2]))};
    const TierId dst{static_cast<std::uint32_t>(to_u64(key, path[3]))};
    std::erase_if(cfg.inter_tier_factors, [&](const auto& f) { return f.src == src && f.dst == dst; });
    cfg.inter_tier_factors.push_back({src, dst, to_double(key, v)});
    return;
  }
  if (path.size() != 2) unknown_key(key);
  const std::string& f = path[1];
  if (f == "scan") {
    c.scan_cost = to_double(key, v);
  } else if (f == "hint_fault_multiplier") {
    c.hint_fault_multiplier = to_double(key, v);
  } else if (f == "alloc") {
    c.step_alloc = to_double(key, v);
  } else if (f == "unmap") {
    c.step_unmap = to_double(key, v);
  } else if (f == "copy") {
    c.step_copy = to_double(key, v);
  } else if (f == "map") {
    c.step_map = to_double(key, v);
  } else if (f == "pebs_sample_period") {
    c.pebs_sample_period = static_cast<std::uint32_t>(to_u64(key, v));
  } else if (f == "pebs_sample_cost") {
    c.pebs_sample_cost = to_double(key, v);
  } else if (f == "pte_migration_surcharge") {
    c.pte_migration_surcharge = to_double(key, v);
  } else {
    unknown_key(key);
  }
}

void set_profiler(RunConfig& cfg, const std::string& key, const std::string& f, const std::string& v) {
  auto& p = cfg.system_config.profiler;
  if (f == "t_mi") {
    p.t_mi = to_double(key, v);
    cfg.t_mi_set = true;
  } else if (f == "overhead_constraint") {
    p.overhead_constraint = to_double(key, v);
  } else if (f == "num_scans") {
    p.num_scans = static_cast<unsigned>(to_u64(key, v));
  } else if (f == "tau1") {
    p.tau1 = to_double(key, v);
  } else if (f == "tau2") {
    p.tau2 = to_double(key, v);
  } else if (f == "pebs_window_fraction") {
    p.pebs_window_fraction = to_double(key, v);
  } else if (f == "hint_fault_period") {
    p.hint_fault_period = static_cast<unsigned>(to_u64(key, v));
  } else if (f == "default_region_pages") {
    p.default_region_pages = to_u64(key, v);
  } else if (f == "origin_sampling") {
    p.origin_sampling = to_bool(key, v);
  } else if (f == "pebs_assist") {
    p.pebs_assist = to_bool(key, v);
  } else if (f == "top_k_variance") {
    p.top_k_variance = to_u64(key, v);
  } else if (f == "max_counter_samples") {
    p.max_counter_samples = to_u64(key, v);
  } else {
    unknown_key(key);
  }
}

void set_policy(RunConfig& cfg, const std::string& key, const std::string& f, const std::string& v) {
  auto& p = cfg.system_config.policy;
  if (f == "alpha") {
    p.ema_alpha = to_double(key, v);
  } else if (f == "bucket_width") {
    p.bucket_width = to_double(key, v);
  } else if (f == "migration_budget_bytes") {
    p.migration_budget_bytes = to_u64(key, v);
  } else if (f == "migration_budget_pages") {
    p.migration_budget_bytes = to_u64(key, v) * cfg.topology.base_page_bytes;
  } else {
    unknown_key(key);
  }
}

void set_baselines(RunConfig& cfg, const std::string& key, const std::string& f, const std::string& v) {
  auto& b = cfg.system_config.baselines;
  if (f == "autonuma_window_fraction") {
    b.autonuma_window_fraction = to_double(key, v);
  } else if (f == "thermostat_region_pages") {
    b.thermostat_region_pages = to_u64(key, v);
  } else if (f == "thermostat_cost_multiplier") {
    b.thermostat_cost_multiplier = to_double(key, v);
  } else if (f == "damon_merge_threshold") {
    b.damon_merge_threshold = to_double(key, v);
  } else if (f == "damon_max_regions") {
    b.damon_max_regions = to_u64(key, v);
  } else {
    unknown_key(key);
  }
}

void set_workload(RunConfig& cfg, const std::string& key, const std::vector<std::string>& path, const std::string& v) {
  auto& w = cfg.workload;
  if (path.size() == 4 && path[1] == "phase") {
    const std::size_t index = to_u64(key, path[2]);
    GupsParams probe;
    if (!set_gups_field(probe, key, path[3], v)) unknown_key(key);
    w.phase_overrides.push_back({index, path[3], v});
    return;
  }
  if (path.size() != 2) unknown_key(key);
  const std::string& f = path[1];
  if (f == "kind") {
    if (v == "gups") {
      w.kind = WorkloadKind::gups;
    } else if (v == "phase_change") {
      w.kind = WorkloadKind::phase_change;
    } else if (v == "trace") {
      w.kind = WorkloadKind::trace;
    } else {
      bad_value(key, v, "one of gups, phase_change, trace");
    }
  } else if (f == "phases") {
    w.phase_count = to_u64(key, v);
  } else if (f == "trace_path") {
    w.trace_path = v;
  } else if (f == "seed") {
    bad_value(key, v, "settable here (use the top-level seed)");
  } else if (!set_gups_field(w.gups, key, f, v)) {
    unknown_key(key);
  }
}

}  // namespace

std::string to_string(WorkloadKind kind) {
  switch (kind) {
    case WorkloadKind::gups: return "gups";
    case WorkloadKind::phase_change: return "phase_change";
    case WorkloadKind::trace: return "trace";
  }
  return "?";
}

void set_config_value(RunConfig& cfg, const std::string& key, const std::string& value) {
  const auto path = split(key, '.');
  if (path.empty() || path[0].empty()) unknown_key(key);
  const std::string& head = path[0];
  if (path.size() == 1) {
    if (head == "seed") {
      cfg.seed = to_u64(key, value);
    } else if (head == "intervals") {
      cfg.intervals = to_u64(key, value);
    } else if (head == "accesses_per_interval") {
      cfg.accesses_per_interval = to_u64(key, value);
    } else if (head == "system") {
      cfg.system = system_kind_from_string(value);
    } else if (head == "huge_pages") {
      cfg.huge_pages = to_bool(key, value);
    } else if (head == "init_node") {
      cfg.init_node = static_cast<NodeId>(to_u64(key, value));
    } else if (head == "hot_threshold") {
      cfg.hot_threshold = to_double(key, value);
    } else {
      unknown_key(key);
    }
    return;
  }
  if (head == "topology") {
    set_topology(cfg, key, path, value);
  } else if (head == "cost") {
    set_cost(cfg, key, path, value);
  } else if (head == "profiler" && path.size() == 2) {
    set_profiler(cfg, key, path[1], value);
  } else if (head == "policy" && path.size() == 2) {
    set_policy(cfg, key, path[1], value);
  } else if (head == "migration" && path.size() == 2 && path[1] == "mode") {
    cfg.system_config.migration_mode = migration_mode_from_string(value);
  } else if (head == "baselines" && path.size() == 2) {
    set_baselines(cfg, key, path[1], value);
  } else if (head == "workload") {
    set_workload(cfg, key, path, value);
  } else {
    unknown_key(key);
  }
}

std::uint64_t RunConfig::required_seed() const {
  if (!seed) throw ConfigError("field seed: a seed is required");
  return *seed;
}

void RunConfig::finalize() {
  const std::uint64_t s = required_seed();
  for (const auto& [id, pages] : tier_capacity_pages) tier_entry(*this, id).capacity_bytes = pages * topology.base_page_bytes;
  if (topology.tiers.empty()) throw ConfigError("field topology.tier: no tiers configured");
  std::sort(topology.tiers.begin(), topology.tiers.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  if (topology.nodes.empty()) topology.nodes = {0};
  const Topology topo = Topology::build(topology);

  costs.inter_tier_factor.clear();
  if (!inter_tier_factors.empty()) {
    const std::size_t n = topo.tier_count();
    costs.inter_tier_factor.assign(n, std::vector<double>(n, 1.0));
    for (const auto& f : inter_tier_factors) {
      costs.inter_tier_factor[topo.position(f.src)][topo.position(f.dst)] = f.factor;
    }
  }
  costs.validate(topo.tier_count());

  if (intervals == 0) throw ConfigError("field intervals: must be positive");
  if (accesses_per_interval == 0) throw ConfigError("field accesses_per_interval: must be positive");
  auto& prof = system_config.profiler;
  if (!t_mi_set) prof.t_mi = static_cast<double>(accesses_per_interval);
  prof.seed = s;
  prof.validate();
  system_config.policy.validate();
  system_config.baselines.validate();
  if (hot_threshold < 0.0 || hot_threshold > prof.num_scans) {
    throw ConfigError("field hot_threshold: must lie in [0, profiler.num_scans]");
  }
  (void)topo.node_position(init_node);

  workload.gups.seed = s;
  workload.phases.clear();
  if (workload.kind == WorkloadKind::phase_change) {
    if (workload.phase_count < 2) throw ConfigError("field workload.phases: need at least 2 phases");
    for (std::size_t k = 0; k < workload.phase_count; ++k) {
      GupsParams g = workload.gups;
      g.seed = k + 1;
      workload.phases.push_back(g);
    }
    for (const auto& o : workload.phase_overrides) {
      if (o.phase >= workload.phase_count) {
        throw ConfigError(fmt::format("field workload.phase.{}: only {} phases", o.phase, workload.phase_count));
      }
      set_gups_field(workload.phases[o.phase], "workload.phase." + std::to_string(o.phase) + "." + o.field, o.field,
                     o.value);
    }
  }
  if (workload.kind == WorkloadKind::trace && workload.trace_path.empty()) {
    throw ConfigError("field workload.trace_path: required for trace workloads");
  }
  for (NodeId n : workload.gups.nodes) (void)topo.node_position(n);
  if (workload.gups.pinned_node) (void)topo.node_position(*workload.gups.pinned_node);
}

RunConfig parse_config_text(const std::string& text, const std::string& origin) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(fmt::format("{} line {}: expected 'key = value'", origin, lineno));
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      set_config_value(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{} line {}: {}", origin, lineno, e.what()));
    }
  }
  return cfg;
}

namespace {

void flatten(const nlohmann::json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  if (j.is_object()) {
    for (const auto& [k, v] : j.items()) flatten(v, prefix.empty() ? k : prefix + "." + k, out);
    return;
  }
  auto scalar = [](const nlohmann::json& v) -> std::string {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
    if (v.is_number_unsigned()) return std::to_string(v.get<std::uint64_t>());
    if (v.is_number_integer()) return std::to_string(v.get<std::int64_t>());
    if (v.is_number_float()) return fmt::format("{}", v.get<double>());
    throw ConfigError(fmt::format("unsupported JSON value {}", v.dump()));
  };
  if (j.is_array()) {
    std::string joined;
    for (std::size_t i = 0; i < j.size(); ++i) joined += (i ? "," : "") + scalar(j[i]);
    out.emplace_back(prefix, joined);
    return;
  }
  out.emplace_back(prefix, scalar(j));
}

}  // namespace

RunConfig parse_config_json(const std::string& text, const std::string& origin) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(fmt::format("{}: invalid JSON at byte {}", origin, e.byte));
  }
  if (!j.is_object()) throw ConfigError(fmt::format("{}: top level must be an object", origin));
  std::vector<std::pair<std::string, std::string>> entries;
  flatten(j, "", entries);
  RunConfig cfg;
  for (const auto& [k, v] : entries) {
    try {
      set_config_value(cfg, k, v);
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("{}: {}", origin, e.what()));
    }
  }
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config '{}'", path));
  std::stringstream buf;
  buf << in.rdbuf();
  const bool json = path.size() >= 5 && path.compare(path.size() - 5, 5, ".json") == 0;
  RunConfig cfg = json ? parse_config_json(buf.str(), path) : parse_config_text(buf.str(), path);
  if (const char* env = std::getenv("TIERSIM_SEED"); env && *env) {
    cfg.seed = to_u64("TIERSIM_SEED", trim(env));
  }
  return cfg;
}

std::string sweep_key(const std::string& param) {
  if (param == "overhead_constraint" || param == "tau1" || param == "tau2" || param == "num_scans") {
    return "profiler." + param;
  }
  if (param == "alpha" || param == "bucket_width") return "policy." + param;
  if (param == "N") return "policy.migration_budget_bytes";
  throw ConfigError(fmt::format("unknown sweep parameter '{}'", param));
}

}  // namespace tiersim
