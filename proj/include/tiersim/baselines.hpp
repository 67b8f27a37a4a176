#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "tiersim/memmodel.hpp"
#include "tiersim/metrics.hpp"
#include "tiersim/migrator.hpp"
#include "tiersim/policy.hpp"
#include "tiersim/profiler.hpp"
#include "tiersim/rng.hpp"

namespace tiersim {

enum class SystemKind { mtm, mtm_no_pebs, first_touch, autonuma, thermostat, damon };

std::string to_string(SystemKind kind);
SystemKind system_kind_from_string(const std::string& s);
const std::vector<SystemKind>& all_system_kinds();

// Places `page` (or the huge page it starts) in the first tier of the node's
// first-touch order that has room. Returns the tier position.
std::size_t first_touch_place(Memory& memory, PageIndex page, NodeId node, bool huge);

// Maps the whole address space in address order on behalf of `node`. With
// `huge_pages`, aligned chunks that fit in one tier are mapped as huge pages.
// Throws MemoryExhausted when every tier is full.
void first_touch_alloc(Memory& memory, NodeId node, bool huge_pages);

struct BaselineParams {
  // Fraction of the address space AutoNUMA watches per interval.
  double autonuma_window_fraction = 1.0 / 16.0;
  // Thermostat samples one page per region of this many pages; 0 means one huge page.
  PageIndex thermostat_region_pages = 0;
  double thermostat_cost_multiplier = 2.5;
  // DAMON merges neighbours whose counts differ by less than this share of the larger.
  double damon_merge_threshold = 0.10;
  // 0 derives the cap from the profiling budget without origin sampling.
  std::size_t damon_max_regions = 0;

  void validate() const;
};

struct SystemConfig {
  ProfilerConfig profiler;
  PolicyConfig policy;
  MigrationMode migration_mode = MigrationMode::adaptive;
  BaselineParams baselines;
};

// One profiling-plus-policy stack driven by the interval loop.
class TieringSystem {
 public:
  virtual ~TieringSystem() = default;

  virtual SystemKind kind() const = 0;
  // Replays the slice against memory while profiling it.
  virtual IntervalProfile profile(Memory& memory, std::span<const AccessEvent> slice) = 0;
  // Folds the interval's profile into the policy state and plans migrations.
  virtual MigrationPlan decide(Memory& memory, IntervalProfile& stats) = 0;
  virtual MigrationMode migration_mode() const { return MigrationMode::sync; }
  // Refreshes cached tiers after the plan ran.
  virtual void after_migration(const Memory& memory) { (void)memory; }
  // Pages whose hotness estimate reaches `threshold`, ascending.
  virtual std::vector<PageIndex> detected_hot(double threshold) const = 0;
  // Region state for the profiler CSV; null when the system keeps none.
  virtual const RegionSet* regions() const { return nullptr; }
};

// Replays `slice` and calls `at_boundary(k)` after each of the num_scans
// equal sub-windows (k = 1..num_scans).
template <typename Fn>
void replay_with_scans(Memory& memory, std::span<const AccessEvent> slice, unsigned num_scans, Fn&& at_boundary) {
  std::size_t next = 0;
  for (unsigned k = 1; k <= num_scans; ++k) {
    const std::size_t boundary = k * slice.size() / num_scans;
    for (; next < boundary; ++next) memory.apply_access(slice[next]);
    at_boundary(k);
  }
}

class FirstTouchSystem final : public TieringSystem {
 public:
  SystemKind kind() const override { return SystemKind::first_touch; }
  IntervalProfile profile(Memory& memory, std::span<const AccessEvent> slice) override;
  MigrationPlan decide(Memory&, IntervalProfile&) override { return {}; }
  std::vector<PageIndex> detected_hot(double) const override { return {}; }
};

// Hint-fault sampling of one random window per interval; hot pages climb one
// level of the global hierarchy per interval with synchronous moves.
class AutoNumaSystem final : public TieringSystem {
 public:
  AutoNumaSystem(const SystemConfig& cfg, const Memory& memory);

  SystemKind kind() const override { return SystemKind::autonuma; }
  IntervalProfile profile(Memory& memory, std::span<const AccessEvent> slice) override;
  MigrationPlan decide(Memory& memory, IntervalProfile& stats) override;
  std::vector<PageIndex> detected_hot(double threshold) const override;

  PageIndex window_pages() const { return window_pages_; }
  PageIndex window_start() const { return window_start_; }
  // Faults counted for each page in the last interval (0 outside the window).
  const std::vector<unsigned>& counts() const { return counts_; }
  const std::vector<double>& whi() const { return whi_; }

 private:
  SystemConfig cfg_;
  PageIndex window_pages_ = 0;
  PageIndex window_start_ = 0;
  std::vector<unsigned> counts_;
  std::vector<double> whi_;
  std::vector<bool> seen_;
  Rng rng_;
};

// One fresh random page per fixed region, fault-counted at a cost multiple of
// a PTE scan; regions are visited round-robin as far as the budget allows.
// Placement reuses the region planner.
class ThermostatSystem final : public TieringSystem {
 public:
  ThermostatSystem(const SystemConfig& cfg, const Memory& memory);

  SystemKind kind() const override { return SystemKind::thermostat; }
  IntervalProfile profile(Memory& memory, std::span<const AccessEvent> slice) override;
  MigrationPlan decide(Memory& memory, IntervalProfile& stats) override;
  MigrationMode migration_mode() const override { return cfg_.migration_mode; }
  void after_migration(const Memory& memory) override;
  std::vector<PageIndex> detected_hot(double threshold) const override;
  const RegionSet* regions() const override { return &regions_; }

  std::size_t regions_per_interval() const { return per_interval_; }
  double scan_cost() const { return scan_cost_; }

 private:
  SystemConfig cfg_;
  RegionSet regions_;
  std::size_t per_interval_ = 0;
  std::size_t cursor_ = 0;
  double scan_cost_ = 0.0;
  Rng rng_;
};

// Region-based monitoring with one sample per region, similarity merging and
// blind random splitting. Profiling only.
class DamonSystem final : public TieringSystem {
 public:
  DamonSystem(const SystemConfig& cfg, const Memory& memory);

  SystemKind kind() const override { return SystemKind::damon; }
  IntervalProfile profile(Memory& memory, std::span<const AccessEvent> slice) override;
  MigrationPlan decide(Memory& memory, IntervalProfile& stats) override;
  std::vector<PageIndex> detected_hot(double threshold) const override;
  const RegionSet* regions() const override { return &regions_; }

  std::size_t max_regions() const { return max_regions_; }
  // Merge step alone, exposed for tests.
  std::size_t merge(const Memory& memory);
  // Split step alone: splits every region when fewer than max/2 exist.
  std::size_t split(const Memory& memory);

 private:
  SystemConfig cfg_;
  RegionSet regions_;
  std::size_t max_regions_ = 0;
  Rng rng_;
};

// Same profiler and planner as MTM with counter assistance turned off.
ProfilerConfig mtm_no_pebs_variant(ProfilerConfig cfg);

// The adaptive profiler with EMA hotness, histogram planning and the chosen
// migration mode.
class MtmSystem final : public TieringSystem {
 public:
  MtmSystem(const SystemConfig& cfg, const Memory& memory, bool pebs_assist = true);

  SystemKind kind() const override { return kind_; }
  IntervalProfile profile(Memory& memory, std::span<const AccessEvent> slice) override;
  MigrationPlan decide(Memory& memory, IntervalProfile& stats) override;
  MigrationMode migration_mode() const override { return cfg_.migration_mode; }
  void after_migration(const Memory& memory) override;
  std::vector<PageIndex> detected_hot(double threshold) const override;
  const RegionSet* regions() const override { return &profiler_.regions(); }

  const Profiler& profiler() const { return profiler_; }

 private:
  SystemConfig cfg_;
  SystemKind kind_;
  Profiler profiler_;
};

std::unique_ptr<TieringSystem> make_system(SystemKind kind, const SystemConfig& cfg, const Memory& memory);

}  // namespace tiersim
