#pragma once

#include <cstdint>
#include <limits>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tiersim/memmodel.hpp"
#include "tiersim/rng.hpp"

namespace tiersim {

struct ProfilerConfig {
  double t_mi = 1e6;  // cost units per profiling interval
  double overhead_constraint = 0.05;
  unsigned num_scans = 3;
  double tau1 = 1.0;
  double tau2 = 2.0;
  double pebs_window_fraction = 0.10;
  unsigned hint_fault_period = 12;
  PageIndex default_region_pages = 512;
  bool origin_sampling = true;
  bool pebs_assist = true;
  std::size_t top_k_variance = 5;
  // Counter buffer size; caps the counter samples taken per interval.
  std::size_t max_counter_samples = 64;
  std::uint64_t seed = 1;

  // tau1/tau2 split [0, num_scans] into thirds.
  static ProfilerConfig with_scans(unsigned num_scans);
  void validate() const;
};

// Per-scan cost including the amortized hint fault when origin sampling is on.
double effective_scan_cost(const ProfilerConfig& cfg, double scan_cost, double hint_fault_multiplier);

// Page-sample budget per interval:
//   num_ps = floor(t_mi * overhead_constraint / (effective_scan_cost * num_scans))
// Throws InfeasibleConstraint when the result is below one sample.
std::uint64_t compute_budget(const ProfilerConfig& cfg, double scan_cost, double hint_fault_multiplier = 12.0);

struct Region {
  RegionId id = 0;  // start page of the region
  PageIndex start = 0;
  PageIndex len = 0;
  std::size_t tier = 0;
  std::vector<PageIndex> samples;       // one entry per unit of quota
  std::vector<unsigned> sample_counts;  // hits per sample in the last profiled interval
  double hi = 0.0;
  double hi_prev = 0.0;
  double whi = 0.0;
  bool has_history = false;  // whi holds an EMA value
  bool profiled = false;     // scanned during the most recent interval
  std::vector<std::uint64_t> origin_counts;  // by accessor node position
  std::uint64_t origin_scan_credit = 0;

  std::size_t quota() const { return samples.size(); }
  PageIndex end() const { return start + len; }
  bool contains(PageIndex p) const { return p >= start && p < end(); }
  std::uint64_t bytes(std::uint64_t page_bytes) const { return len * page_bytes; }
  double variance_score() const { return hi > hi_prev ? hi - hi_prev : hi_prev - hi; }
};

using RegionSet = std::vector<Region>;

std::uint64_t total_quota(const RegionSet& regions);

// Draws `quota` sample pages inside the region, preferring distinct huge/base
// page units.
void resample(Region& region, std::size_t quota, const Memory& memory, Rng& rng);

struct MergeResult {
  std::uint64_t saved_quota = 0;
  std::size_t merges = 0;
};

// Merges contiguous same-tier neighbours profiled this interval whose hi differ
// by less than tau1, repeating until no pair qualifies. A merge is skipped when
// the per-sample counts of the two parts would spread by more than tau2.
MergeResult merge_pass(RegionSet& regions, double tau1, const Memory& memory, Rng& rng,
                       double tau2 = std::numeric_limits<double>::infinity());

// Splits profiled regions whose per-sample counts spread by more than tau2.
// Quota-1 parents borrow one sample from `saved_quota`; without it they stay whole.
std::size_t split_pass(RegionSet& regions, double tau2, std::uint64_t& saved_quota, const Memory& memory, Rng& rng);

// Hands `saved_quota` to the top_k regions with the largest |hi - hi_prev|.
// Returns the ids of the recipients, highest score first.
std::vector<RegionId> redistribute_quota(RegionSet& regions, std::uint64_t saved_quota, std::size_t top_k,
                                         const Memory& memory, Rng& rng);

struct EnforceResult {
  std::size_t rounds = 0;
  double final_tau1 = 0.0;
  std::size_t merges = 0;
  std::uint64_t saved_quota = 0;
  bool coarsened = false;
  std::vector<std::string> warnings;
};

// Escalates tau1 one count unit per round (capped just below tau2) and
// re-merges until at most num_ps regions remain. If that is not enough, the
// slowest tier is coarsened: its window doubles and its regions are folded.
EnforceResult enforce_budget(RegionSet& regions, std::uint64_t num_ps, const ProfilerConfig& cfg,
                             PageIndex& slowest_window_pages, const Memory& memory, Rng& rng);

struct PebsSelection {
  std::vector<PageIndex> counter_samples;  // pages captured by the counters
  std::vector<RegionId> matched;           // existing slowest-tier regions that stay profiled
  std::vector<RegionId> skipped;           // existing slowest-tier regions idle this interval
  std::vector<Region> created;             // new regions to profile this interval
  std::size_t dropped_windows = 0;         // nominated windows beyond the region budget
  double cost = 0.0;
};

// Counter sampling of slowest-tier accesses during the first
// pebs_window_fraction of the slice; one sample per pebs_sample_period hits.
std::vector<PageIndex> pebs_counter_samples(const Memory& memory, std::span<const AccessEvent> slice,
                                            const ProfilerConfig& cfg);

PebsSelection pebs_assist(const RegionSet& regions, const Memory& memory, std::span<const AccessEvent> slice,
                          const ProfilerConfig& cfg, PageIndex window_pages, std::size_t max_new_regions);

// Builds the first region set. Non-slowest tiers: one region per window (cut
// at tier boundaries), one random sample each. Slowest tier: only windows
// the counters hit, sampling the captured page.
RegionSet init_regions(const Memory& memory, std::span<const AccessEvent> first_slice, const ProfilerConfig& cfg,
                       std::uint64_t num_ps, Rng& rng, PageIndex* window_pages_out = nullptr);

// Records the accessor node of the next access to each region, once per
// hint_fault_period scans performed on it.
void sample_origin(RegionSet& regions, std::span<const AccessEvent> slice, const std::vector<std::uint64_t>& scans,
                   const ProfilerConfig& cfg, const Topology& topology);

struct IntervalProfile {
  std::uint64_t scans = 0;
  double cost = 0.0;  // profiling ledger increase, counters included
  std::size_t profiled_regions = 0;
  std::size_t skipped_regions = 0;
  std::size_t created_regions = 0;
  std::size_t merges = 0;
  std::size_t splits = 0;
  std::vector<std::string> warnings;
};

// Owns the region set and runs the interval pipeline.
class Profiler {
 public:
  Profiler(ProfilerConfig cfg, const Memory& memory);

  const ProfilerConfig& config() const { return cfg_; }
  std::uint64_t num_ps() const { return num_ps_; }
  double effective_scan_cost() const { return eff_scan_cost_; }
  const RegionSet& regions() const { return regions_; }
  RegionSet& regions() { return regions_; }
  PageIndex slowest_window_pages() const { return slowest_window_; }

  // Selects samples, replays the slice against `memory` while scanning the
  // sampled PTEs num_scans times, and updates hi/hi_prev and origin counts.
  IntervalProfile profile(Memory& memory, std::span<const AccessEvent> slice);

  // Merge, split, budget enforcement and quota redistribution. Run after the
  // EMA update of the same interval.
  void restructure(const Memory& memory, IntervalProfile& stats);

 private:
  void select(const Memory& memory, std::span<const AccessEvent> slice, IntervalProfile& stats,
              std::vector<PageIndex>& counter_pages, std::vector<std::vector<PageIndex>>& loans);
  void fit_quota(const Memory& memory);

  ProfilerConfig cfg_;
  std::uint64_t num_ps_ = 0;
  double eff_scan_cost_ = 0.0;
  PageIndex slowest_window_ = 0;
  RegionSet regions_;
  Rng rng_;
  bool initialized_ = false;
};

void write_profiler_csv_header(std::ostream& out);
void write_profiler_csv(std::ostream& out, std::size_t interval, const RegionSet& regions, const Topology& topology);

}  // namespace tiersim
