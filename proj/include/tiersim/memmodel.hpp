#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include "tiersim/types.hpp"

namespace tiersim {

inline constexpr std::uint64_t kDefaultBasePageBytes = 4096;
inline constexpr std::uint32_t kDefaultHugePagePages = 512;

struct AccessEvent {
  std::uint64_t seq = 0;
  PageIndex vpage = 0;
  bool is_write = false;
  NodeId node = 0;

  friend bool operator==(const AccessEvent&, const AccessEvent&) = default;
};

struct TierDesc {
  TierId id;
  std::uint64_t capacity_bytes = 0;
  // One entry applies to every node; otherwise one entry per accessor node,
  // in the order of TopologySpec::nodes.
  std::vector<double> access_cost;
  std::optional<NodeId> home_node;
};

struct TopologySpec {
  std::vector<TierDesc> tiers;
  std::vector<NodeId> nodes;
  // Optional explicit fastest->slowest orderings. Missing nodes get a view
  // derived from their access costs.
  std::map<NodeId, std::vector<TierId>> views;
  std::uint64_t base_page_bytes = kDefaultBasePageBytes;
  std::uint32_t huge_page_pages = kDefaultHugePagePages;
};

struct TierSpec {
  TierId id;
  std::uint64_t capacity_bytes = 0;
  std::vector<double> access_cost;  // indexed by node position
  std::optional<NodeId> home_node;
};

// Immutable description of the tiers and of how each accessor node ranks them.
// Tiers are addressed by position (0..tier_count()-1) everywhere inside the
// simulator; TierId is only the external label.
class Topology {
 public:
  static Topology build(const TopologySpec& spec);

  std::size_t tier_count() const { return tiers_.size(); }
  const TierSpec& tier(std::size_t pos) const { return tiers_.at(pos); }
  std::size_t position(TierId id) const;

  std::span<const NodeId> nodes() const { return nodes_; }
  std::size_t node_position(NodeId node) const;

  // Tier positions ordered fastest->slowest from `node`.
  const std::vector<std::size_t>& view(NodeId node) const;
  double access_cost(NodeId node, std::size_t tier_pos) const;
  double mean_access_cost(std::size_t tier_pos) const;

  // Tier positions ordered by cost averaged over all views, fastest first.
  const std::vector<std::size_t>& global_order() const { return global_order_; }
  std::size_t slowest() const { return global_order_.back(); }
  std::size_t fastest() const { return global_order_.front(); }

  // Local tiers (home_node == node) in view order, then the remaining tiers
  // in view order: local fast, local slow, remote fast, remote slow.
  std::vector<std::size_t> first_touch_order(NodeId node) const;

  std::uint64_t base_page_bytes() const { return base_page_bytes_; }
  std::uint32_t huge_page_pages() const { return huge_page_pages_; }
  std::uint64_t total_capacity_bytes() const;

 private:
  std::vector<TierSpec> tiers_;
  std::vector<NodeId> nodes_;
  std::vector<std::vector<std::size_t>> views_;  // by node position
  std::vector<std::size_t> global_order_;
  std::uint64_t base_page_bytes_ = kDefaultBasePageBytes;
  std::uint32_t huge_page_pages_ = kDefaultHugePagePages;
};

struct CostModel {
  double scan_cost = 1.0;
  double hint_fault_multiplier = 12.0;
  double step_alloc = 1.0;
  double step_unmap = 1.0;
  double step_copy = 2.0;
  double step_map = 1.0;
  // Copy multipliers by tier position; empty means 1 everywhere.
  std::vector<std::vector<double>> inter_tier_factor;
  std::uint32_t pebs_sample_period = 200;
  // Cost of handling one counter sample; charged to the profiling ledger.
  double pebs_sample_cost = 0.0;
  // Flat per-move surcharge for moving the region's page-table pages.
  double pte_migration_surcharge = 0.0;

  double copy_factor(std::size_t src, std::size_t dst) const;
  double sync_cost_per_page(std::size_t src, std::size_t dst) const {
    return step_alloc + step_unmap + step_copy * copy_factor(src, dst) + step_map;
  }
  void validate(std::size_t tier_count) const;
};

// Simulated-time buckets. There is no wall clock.
struct CostLedger {
  double app = 0.0;
  double profiling = 0.0;
  double migration_exposed = 0.0;
  double migration_background = 0.0;
};

// Placement of the simulated address space plus the access/dirty bits that
// profiling reads. Huge pages keep their bits on the head slot.
class Memory {
 public:
  Memory(Topology topology, CostModel costs, PageIndex footprint_pages);

  const Topology& topology() const { return topology_; }
  const CostModel& costs() const { return costs_; }
  PageIndex footprint_pages() const { return static_cast<PageIndex>(pages_.size()); }

  void map_page(PageIndex page, std::size_t tier_pos);
  // Maps huge_page_pages() slots starting at an aligned head.
  void map_huge(PageIndex head, std::size_t tier_pos);

  bool is_mapped(PageIndex page) const;
  std::size_t tier_of(PageIndex page) const;
  bool is_huge(PageIndex page) const;
  // First slot of the huge page containing `page`, or `page` itself.
  PageIndex unit_head(PageIndex page) const;
  PageIndex unit_pages(PageIndex page) const;

  bool access_bit(PageIndex page) const;
  bool dirty_bit(PageIndex page) const;
  void clear_access_bit(PageIndex page);

  // Reads and resets the access bit; charges `cost` (default scan_cost) to
  // the profiling ledger.
  bool scan_pte(PageIndex page);
  bool scan_pte(PageIndex page, double cost);

  // Sets access (and dirty on writes), counts the access against the tier and
  // charges the accessor's cost to the application ledger.
  double apply_access(const AccessEvent& access);

  std::uint64_t used_bytes(std::size_t tier_pos) const { return used_bytes_.at(tier_pos); }
  std::uint64_t free_bytes(std::size_t tier_pos) const;
  std::uint64_t free_bytes(TierId id) const { return free_bytes(topology_.position(id)); }
  std::uint64_t placed_bytes() const;
  std::uint64_t page_bytes() const { return topology_.base_page_bytes(); }

  // Moves [start, start+len) to `dst`. The range must be mapped, must not cut
  // a huge page and `dst` must have room. Clears access and dirty bits.
  void remap(PageIndex start, PageIndex len, std::size_t dst);

  const std::vector<std::uint64_t>& tier_accesses() const { return tier_accesses_; }
  void reset_tier_accesses();

  CostLedger& ledger() { return ledger_; }
  const CostLedger& ledger() const { return ledger_; }

 private:
  struct PageEntry {
    std::int16_t tier = -1;
    bool huge = false;
    bool accessed = false;
    bool dirty = false;
  };

  const PageEntry& entry(PageIndex page) const;
  PageEntry& entry(PageIndex page);
  void reserve(std::size_t tier_pos, std::uint64_t bytes);

  Topology topology_;
  CostModel costs_;
  std::vector<PageEntry> pages_;
  std::vector<std::uint64_t> used_bytes_;
  std::vector<std::uint64_t> tier_accesses_;
  CostLedger ledger_;
};

}  // namespace tiersim
