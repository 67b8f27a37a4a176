#include "tiersim/baselines.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace tiersim {

namespace {

double profiling_budget(const ProfilerConfig& cfg) { return cfg.t_mi * cfg.overhead_constraint; }

// floor() that forgives rounding noise just below an integer.
std::uint64_t floor_count(double x) { return x <= 0.0 ? 0 : static_cast<std::uint64_t>(std::floor(x + 1e-9)); }

std::vector<PageIndex> unit_heads(const Memory& memory, PageIndex start, PageIndex end) {
  std::vector<PageIndex> heads;
  PageIndex p = memory.unit_head(start);
  while (p < end) {
    heads.push_back(p);
    p += memory.unit_pages(p);
  }
  return heads;
}

Region blank_region(const Memory& memory, PageIndex start, PageIndex end) {
  Region r;
  r.id = start;
  r.start = start;
  r.len = end - start;
  r.tier = memory.tier_of(start);
  r.origin_counts.assign(memory.topology().nodes().size(), 0);
  return r;
}

}  // namespace

std::string to_string(SystemKind kind) {
  switch (kind) {
    case SystemKind::mtm: return "mtm";
    case SystemKind::mtm_no_pebs: return "mtm-no-pebs";
    case SystemKind::first_touch: return "first-touch";
    case SystemKind::autonuma: return "autonuma";
    case SystemKind::thermostat: return "thermostat";
    case SystemKind::damon: return "damon";
  }
  return "?";
}

SystemKind system_kind_from_string(const std::string& s) {
  for (SystemKind k : all_system_kinds()) {
    if (to_string(k) == s) return k;
  }
  throw ConfigError(fmt::format("unknown system '{}'", s));
}

const std::vector<SystemKind>& all_system_kinds() {
  static const std::vector<SystemKind> kinds{SystemKind::mtm,      SystemKind::mtm_no_pebs, SystemKind::first_touch,
                                             SystemKind::autonuma, SystemKind::thermostat,  SystemKind::damon};
  return kinds;
}

std::size_t first_touch_place(Memory& memory, PageIndex page, NodeId node, bool huge) {
  const Topology& topo = memory.topology();
  const std::uint64_t bytes = memory.page_bytes() * (huge ? topo.huge_page_pages() : 1);
  for (std::size_t t : topo.first_touch_order(node)) {
    if (memory.free_bytes(t) < bytes) continue;
    if (huge) {
      memory.map_huge(page, t);
    } else {
      memory.map_page(page, t);
    }
    return t;
  }
  throw MemoryExhausted(fmt::format("no tier can hold page {}", page));
}

void first_touch_alloc(Memory& memory, NodeId node, bool huge_pages) {
  const PageIndex footprint = memory.footprint_pages();
  const PageIndex huge = memory.topology().huge_page_pages();
  const std::uint64_t huge_bytes = huge * memory.page_bytes();
  PageIndex p = 0;
  while (p < footprint) {
    if (huge_pages && p % huge == 0 && p + huge <= footprint) {
      bool fits = false;
      for (std::size_t t : memory.topology().first_touch_order(node)) fits = fits || memory.free_bytes(t) >= huge_bytes;
      if (fits) {
        first_touch_place(memory, p, node, true);
        p += huge;
        continue;
      }
    }
    first_touch_place(memory, p, node, false);
    ++p;
  }
}

void BaselineParams::validate() const {
  if (!(autonuma_window_fraction > 0.0 && autonuma_window_fraction <= 1.0)) {
    throw ConfigError("baselines.autonuma_window_fraction must lie in (0, 1]");
  }
  if (!(thermostat_cost_multiplier > 0.0)) throw ConfigError("baselines.thermostat_cost_multiplier must be positive");
  if (!(damon_merge_threshold >= 0.0 && damon_merge_threshold < 1.0)) {
    throw ConfigError("baselines.damon_merge_threshold must lie in [0, 1)");
  }
}

IntervalProfile FirstTouchSystem::profile(Memory& memory, std::span<const AccessEvent> slice) {
  for (const auto& e : slice) memory.apply_access(e);
  return {};
}

// ---------------------------------------------------------------- AutoNUMA

AutoNumaSystem::AutoNumaSystem(const SystemConfig& cfg, const Memory& memory)
    : cfg_(cfg), rng_(mix_seed(cfg.profiler.seed, 0x616e756d)) {
  const PageIndex footprint = memory.footprint_pages();
  const double per_page = memory.costs().scan_cost * cfg_.profiler.num_scans;
  const std::uint64_t cap = floor_count(profiling_budget(cfg_.profiler) / per_page);
  if (cap == 0) throw InfeasibleConstraint("the budget cannot watch a single page");
  const auto wanted = static_cast<PageIndex>(std::llround(cfg_.baselines.autonuma_window_fraction * footprint));
  window_pages_ = std::clamp<PageIndex>(std::min<PageIndex>(wanted, cap), 1, footprint);
  // A huge page is watched as a whole, so the window must not straddle one.
  const PageIndex huge = memory.topology().huge_page_pages();
  bool any_huge = false;
  for (PageIndex p = 0; p < footprint && !any_huge; p += memory.unit_pages(p)) any_huge = memory.is_huge(p);
  if (any_huge) {
    if (cap < huge) throw InfeasibleConstraint("the budget cannot watch a single huge page");
    window_pages_ = std::max<PageIndex>(huge, window_pages_ / huge * huge);
  }
  counts_.assign(footprint, 0);
  whi_.assign(footprint, 0.0);
  seen_.assign(footprint, false);
}

IntervalProfile AutoNumaSystem::profile(Memory& memory, std::span<const AccessEvent> slice) {
  IntervalProfile stats;
  const PageIndex footprint = memory.footprint_pages();
  const double before = memory.ledger().profiling;
  window_start_ = uniform_index(rng_, footprint - window_pages_ + 1);
  window_start_ = memory.unit_head(window_start_);
  const PageIndex end = std::min(footprint, window_start_ + window_pages_);
  const auto units = unit_heads(memory, window_start_, end);
  std::fill(counts_.begin(), counts_.end(), 0u);
  for (PageIndex u : units) memory.clear_access_bit(u);
  const double fault_cost = memory.costs().scan_cost;
  replay_with_scans(memory, slice, cfg_.profiler.num_scans, [&](unsigned) {
    for (PageIndex u : units) {
      if (!memory.access_bit(u)) continue;
      memory.clear_access_bit(u);
      ++counts_[u];
      memory.ledger().profiling += fault_cost;
      ++stats.scans;
    }
  });
  const double alpha = cfg_.policy.ema_alpha;
  for (PageIndex u : units) {
    const double hi = counts_[u];
    for (PageIndex p = u; p < u + memory.unit_pages(u); ++p) {
      counts_[p] = counts_[u];
      whi_[p] = seen_[p] ? alpha * hi + (1.0 - alpha) * whi_[p] : hi;
      seen_[p] = true;
    }
  }
  stats.profiled_regions = units.size();
  stats.cost = memory.ledger().profiling - before;
  return stats;
}

MigrationPlan AutoNumaSystem::decide(Memory& memory, IntervalProfile&) {
  const PageIndex footprint = memory.footprint_pages();
  RegionSet units;
  std::vector<std::size_t> hot;
  for (PageIndex p = 0; p < footprint; p += memory.unit_pages(p)) {
    Region r = blank_region(memory, p, p + memory.unit_pages(p));
    r.whi = whi_[p];
    r.hi = counts_[p];
    r.has_history = seen_[p];
    const bool in_window = p >= window_start_ && p < window_start_ + window_pages_;
    if (in_window && counts_[p] >= kDefaultHotThreshold) hot.push_back(units.size());
    units.push_back(std::move(r));
  }
  std::stable_sort(hot.begin(), hot.end(), [&](std::size_t a, std::size_t b) {
    if (units[a].hi != units[b].hi) return units[a].hi > units[b].hi;
    return units[a].whi > units[b].whi;
  });
  const auto& order = memory.topology().global_order();
  return plan_one_level_promotions(units, hot, memory, cfg_.policy.budget_bytes(memory.topology()), order);
}

std::vector<PageIndex> AutoNumaSystem::detected_hot(double threshold) const {
  std::vector<PageIndex> pages;
  for (PageIndex p = 0; p < whi_.size(); ++p) {
    if (seen_[p] && whi_[p] >= threshold) pages.push_back(p);
  }
  return pages;
}

// -------------------------------------------------------------- Thermostat

ThermostatSystem::ThermostatSystem(const SystemConfig& cfg, const Memory& memory)
    : cfg_(cfg), rng_(mix_seed(cfg.profiler.seed, 0x74686d6f)) {
  PageIndex size = cfg_.baselines.thermostat_region_pages;
  if (size == 0) size = memory.topology().huge_page_pages();
  const PageIndex footprint = memory.footprint_pages();
  for (PageIndex w0 = 0; w0 < footprint; w0 += size) {
    const PageIndex w1 = std::min(footprint, w0 + size);
    PageIndex p = memory.unit_head(w0) < w0 ? memory.unit_head(w0) + memory.unit_pages(w0) : w0;
    while (p < w1) {
      const std::size_t tier = memory.tier_of(p);
      PageIndex q = p + memory.unit_pages(p);
      while (q < w1 && memory.tier_of(q) == tier) q += memory.unit_pages(q);
      regions_.push_back(blank_region(memory, p, q));
      p = q;
    }
  }
  scan_cost_ = cfg_.baselines.thermostat_cost_multiplier * memory.costs().scan_cost;
  per_interval_ = floor_count(profiling_budget(cfg_.profiler) / (scan_cost_ * cfg_.profiler.num_scans));
  if (per_interval_ == 0) throw InfeasibleConstraint("the budget cannot sample a single region");
  per_interval_ = std::min(per_interval_, regions_.size());
}

IntervalProfile ThermostatSystem::profile(Memory& memory, std::span<const AccessEvent> slice) {
  IntervalProfile stats;
  const double before = memory.ledger().profiling;
  for (auto& r : regions_) {
    r.profiled = false;
    r.samples.clear();
  }
  std::vector<std::size_t> chosen;
  for (std::size_t k = 0; k < per_interval_; ++k) {
    const std::size_t i = (cursor_ + k) % regions_.size();
    Region& r = regions_[i];
    r.samples.push_back(r.start + uniform_index(rng_, r.len));
    r.profiled = true;
    chosen.push_back(i);
    memory.clear_access_bit(memory.unit_head(r.samples.front()));
  }
  cursor_ = (cursor_ + per_interval_) % regions_.size();
  std::vector<unsigned> counts(regions_.size(), 0);
  replay_with_scans(memory, slice, cfg_.profiler.num_scans, [&](unsigned) {
    for (std::size_t i : chosen) {
      if (memory.scan_pte(memory.unit_head(regions_[i].samples.front()), scan_cost_)) ++counts[i];
      ++stats.scans;
    }
  });
  for (std::size_t i : chosen) {
    regions_[i].hi_prev = regions_[i].hi;
    regions_[i].hi = counts[i];
    regions_[i].sample_counts = {counts[i]};
  }
  stats.profiled_regions = chosen.size();
  stats.cost = memory.ledger().profiling - before;
  return stats;
}

MigrationPlan ThermostatSystem::decide(Memory& memory, IntervalProfile&) {
  update_ema(regions_, cfg_.policy.ema_alpha);
  return plan_migrations(regions_, memory, cfg_.policy.budget_bytes(memory.topology()), cfg_.policy.bucket_width,
                         cfg_.profiler.num_scans);
}

void ThermostatSystem::after_migration(const Memory& memory) {
  for (auto& r : regions_) r.tier = memory.tier_of(r.start);
}

std::vector<PageIndex> ThermostatSystem::detected_hot(double threshold) const {
  return detect_hot_pages(regions_, threshold);
}

// ------------------------------------------------------------------- DAMON

DamonSystem::DamonSystem(const SystemConfig& cfg, const Memory& memory)
    : cfg_(cfg), rng_(mix_seed(cfg.profiler.seed, 0x64616d6e)) {
  max_regions_ = cfg_.baselines.damon_max_regions;
  if (max_regions_ == 0) {
    max_regions_ = floor_count(profiling_budget(cfg_.profiler) / (memory.costs().scan_cost * cfg_.profiler.num_scans));
  }
  if (max_regions_ == 0) throw InfeasibleConstraint("the budget cannot sample a single region");
  regions_.push_back(blank_region(memory, 0, memory.footprint_pages()));
}

IntervalProfile DamonSystem::profile(Memory& memory, std::span<const AccessEvent> slice) {
  IntervalProfile stats;
  const double before = memory.ledger().profiling;
  for (auto& r : regions_) {
    r.samples = {r.start + uniform_index(rng_, r.len)};
    r.profiled = true;
    memory.clear_access_bit(memory.unit_head(r.samples.front()));
  }
  std::vector<unsigned> counts(regions_.size(), 0);
  const double cost = memory.costs().scan_cost;
  replay_with_scans(memory, slice, cfg_.profiler.num_scans, [&](unsigned) {
    for (std::size_t i = 0; i < regions_.size(); ++i) {
      if (memory.scan_pte(memory.unit_head(regions_[i].samples.front()), cost)) ++counts[i];
      ++stats.scans;
    }
  });
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    Region& r = regions_[i];
    r.hi_prev = r.hi;
    r.hi = counts[i];
    r.whi = r.hi;
    r.has_history = true;
    r.sample_counts = {counts[i]};
  }
  stats.profiled_regions = regions_.size();
  stats.cost = memory.ledger().profiling - before;
  return stats;
}

std::size_t DamonSystem::merge(const Memory& memory) {
  std::size_t merges = 0;
  const double threshold = cfg_.baselines.damon_merge_threshold;
  for (std::size_t i = 0; i + 1 < regions_.size();) {
    Region& a = regions_[i];
    const Region& b = regions_[i + 1];
    const double diff = std::abs(a.hi - b.hi);
    const double larger = std::max(a.hi, b.hi);
    if (diff == 0.0 || diff < threshold * larger) {
      const double total = static_cast<double>(a.len + b.len);
      a.hi = (a.hi * static_cast<double>(a.len) + b.hi * static_cast<double>(b.len)) / total;
      a.hi_prev = (a.hi_prev * static_cast<double>(a.len) + b.hi_prev * static_cast<double>(b.len)) / total;
      a.whi = a.hi;
      a.len += b.len;
      a.tier = memory.tier_of(a.start);
      regions_.erase(regions_.begin() + static_cast<std::ptrdiff_t>(i) + 1);
      ++merges;
    } else {
      ++i;
    }
  }
  return merges;
}

std::size_t DamonSystem::split(const Memory& memory) {
  if (2 * regions_.size() >= max_regions_) return 0;
  std::size_t splits = 0;
  RegionSet next;
  next.reserve(2 * regions_.size());
  for (const auto& r : regions_) {
    // Interior cut points sit on unit boundaries.
    const auto heads = unit_heads(memory, r.start, r.end());
    if (heads.size() < 2) {
      next.push_back(r);
      continue;
    }
    const PageIndex cut = heads[1 + uniform_index(rng_, heads.size() - 1)];
    Region left = r;
    Region right = r;
    left.len = cut - r.start;
    right.id = right.start = cut;
    right.len = r.end() - cut;
    right.tier = memory.tier_of(cut);
    next.push_back(std::move(left));
    next.push_back(std::move(right));
    ++splits;
  }
  regions_ = std::move(next);
  return splits;
}

MigrationPlan DamonSystem::decide(Memory& memory, IntervalProfile& stats) {
  stats.merges += merge(memory);
  stats.splits += split(memory);
  return {};
}

std::vector<PageIndex> DamonSystem::detected_hot(double threshold) const {
  return detect_hot_pages(regions_, threshold);
}

// --------------------------------------------------------------------- MTM

ProfilerConfig mtm_no_pebs_variant(ProfilerConfig cfg) {
  cfg.pebs_assist = false;
  return cfg;
}

namespace {

ProfilerConfig mtm_profiler_config(const SystemConfig& cfg, bool pebs_assist) {
  return pebs_assist ? cfg.profiler : mtm_no_pebs_variant(cfg.profiler);
}

}  // namespace

MtmSystem::MtmSystem(const SystemConfig& cfg, const Memory& memory, bool pebs_assist)
    : cfg_(cfg),
      kind_(pebs_assist ? SystemKind::mtm : SystemKind::mtm_no_pebs),
      profiler_(mtm_profiler_config(cfg, pebs_assist), memory) {}

IntervalProfile MtmSystem::profile(Memory& memory, std::span<const AccessEvent> slice) {
  return profiler_.profile(memory, slice);
}

MigrationPlan MtmSystem::decide(Memory& memory, IntervalProfile& stats) {
  update_ema(profiler_.regions(), cfg_.policy.ema_alpha);
  profiler_.restructure(memory, stats);
  return plan_migrations(profiler_.regions(), memory, cfg_.policy.budget_bytes(memory.topology()),
                         cfg_.policy.bucket_width, profiler_.config().num_scans);
}

void MtmSystem::after_migration(const Memory& memory) {
  for (auto& r : profiler_.regions()) r.tier = memory.tier_of(r.start);
}

std::vector<PageIndex> MtmSystem::detected_hot(double threshold) const {
  return detect_hot_pages(profiler_.regions(), threshold);
}

std::unique_ptr<TieringSystem> make_system(SystemKind kind, const SystemConfig& cfg, const Memory& memory) {
  switch (kind) {
    case SystemKind::mtm: return std::make_unique<MtmSystem>(cfg, memory, true);
    case SystemKind::mtm_no_pebs: return std::make_unique<MtmSystem>(cfg, memory, false);
    case SystemKind::first_touch: return std::make_unique<FirstTouchSystem>();
    case SystemKind::autonuma: return std::make_unique<AutoNumaSystem>(cfg, memory);
    case SystemKind::thermostat: return std::make_unique<ThermostatSystem>(cfg, memory);
    case SystemKind::damon: return std::make_unique<DamonSystem>(cfg, memory);
  }
  throw std::logic_error("unknown system kind");
}

}  // namespace tiersim
