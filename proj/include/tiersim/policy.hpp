#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tiersim/memmodel.hpp"
#include "tiersim/profiler.hpp"

namespace tiersim {

struct PolicyConfig {
  double ema_alpha = 0.5;
  double bucket_width = 0.1;
  // Promoted bytes per interval; 0 selects 5% of the total tier capacity.
  std::uint64_t migration_budget_bytes = 0;

  void validate() const;
  std::uint64_t budget_bytes(const Topology& topology) const;
};

// whi = alpha * hi + (1 - alpha) * whi for regions profiled this interval.
// A region without history starts at whi = hi.
void update_ema(RegionSet& regions, double alpha);

// Regions bucketed by whi; bucket b covers [b*w, (b+1)*w), the last bucket is
// open-ended. Kept up to date with move() as whi changes.
class HotnessHistogram {
 public:
  HotnessHistogram(unsigned num_scans, double bucket_width);

  std::size_t bucket_count() const { return buckets_.size(); }
  std::size_t bucket_of(double whi) const;

  void build(const RegionSet& regions);
  void insert(RegionId id, double whi);
  void erase(RegionId id, double whi);
  void move(RegionId id, double old_whi, double new_whi);

  // Region ids in bucket b, ascending.
  const std::vector<RegionId>& bucket(std::size_t b) const { return buckets_.at(b); }
  std::size_t size() const;

 private:
  double width_;
  std::vector<std::vector<RegionId>> buckets_;
};

// Accessor node with the most origin samples; ties go to the earlier node and
// a region without samples belongs to the first node.
NodeId dominant_node(const Region& region, const Topology& topology);

enum class MoveReason { promote, demote };
std::string to_string(MoveReason reason);

struct PlannedMove {
  RegionId region_id = 0;
  PageIndex start = 0;
  PageIndex len = 0;
  std::size_t src = 0;
  std::size_t dst = 0;
  MoveReason reason = MoveReason::promote;
  std::uint64_t bytes = 0;
};

// Moves in executable order: each move finds room once the earlier ones ran.
struct MigrationPlan {
  std::vector<PlannedMove> moves;
  std::uint64_t promoted_bytes = 0;
  std::uint64_t demoted_bytes = 0;
};

// Greedy promotion in (bucket desc, whi desc, id asc) order. Each candidate
// goes to the fastest tier of its dominant node's view that is faster than
// where it sits. A full destination is freed by demoting strictly colder
// regions one level down their own view, cascading when needed; otherwise the
// next tier of the view is tried. Candidates that would push the promoted
// bytes past the budget are skipped.
MigrationPlan plan_migrations(const RegionSet& regions, const Memory& memory, std::uint64_t budget_bytes,
                              double bucket_width = 0.1, unsigned num_scans = 3);

// Fastest->slowest ordering of the region's dominant node.
const std::vector<std::size_t>& resolve_destination(const Region& region, const Topology& topology);

// Frees `need_bytes` in `tier` by demoting its coldest regions one level down
// their own view, cascading into lower tiers. Throws MemoryExhausted when no
// chain of lower tiers can absorb the bytes.
MigrationPlan plan_demotions(const RegionSet& regions, const Memory& memory, std::size_t tier, std::uint64_t need_bytes);

// Moves each candidate (indices into `regions`, in the given order) one step
// up `order`, making room by demoting colder regions one step down the same
// order. Used by hierarchy-walking baselines.
MigrationPlan plan_one_level_promotions(const RegionSet& regions, std::span<const std::size_t> candidates,
                                        const Memory& memory, std::uint64_t budget_bytes,
                                        const std::vector<std::size_t>& order);

// The promotion order used by plan_migrations.
std::vector<std::size_t> promotion_order(const RegionSet& regions, double bucket_width, unsigned num_scans);

void write_plan_csv_header(std::ostream& out);
void write_plan_csv(std::ostream& out, std::size_t interval, const MigrationPlan& plan, const Topology& topology);

}  // namespace tiersim
