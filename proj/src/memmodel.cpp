#include "tiersim/memmodel.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include <fmt/format.h>

namespace tiersim {

Topology Topology::build(const TopologySpec& spec) {
  if (spec.tiers.size() < 2) {
    throw ConfigError(fmt::format("topology needs at least 2 tiers, got {}", spec.tiers.size()));
  }
  if (spec.nodes.empty()) throw ConfigError("topology needs at least one accessor node");
  if (spec.base_page_bytes == 0) throw ConfigError("base page size must be positive");
  if (spec.huge_page_pages == 0) throw ConfigError("huge page size must be positive");

  std::set<NodeId> node_set(spec.nodes.begin(), spec.nodes.end());
  if (node_set.size() != spec.nodes.size()) throw ConfigError("duplicate accessor node id");

  Topology topo;
  topo.nodes_ = spec.nodes;
  topo.base_page_bytes_ = spec.base_page_bytes;
  topo.huge_page_pages_ = spec.huge_page_pages;

  std::set<TierId> ids;
  for (const auto& desc : spec.tiers) {
    if (!ids.insert(desc.id).second) throw ConfigError(fmt::format("duplicate tier id {}", desc.id.value));
    if (desc.capacity_bytes == 0) throw ConfigError(fmt::format("tier {} has zero capacity", desc.id.value));
    if (desc.capacity_bytes % spec.base_page_bytes != 0) {
      throw ConfigError(fmt::format("tier {} capacity is not a multiple of the page size", desc.id.value));
    }
    TierSpec tier{desc.id, desc.capacity_bytes, {}, desc.home_node};
    if (desc.access_cost.size() == 1) {
      tier.access_cost.assign(spec.nodes.size(), desc.access_cost.front());
    } else if (desc.access_cost.size() == spec.nodes.size()) {
      tier.access_cost = desc.access_cost;
    } else {
      throw ConfigError(fmt::format("tier {} needs 1 or {} access costs, got {}", desc.id.value,
                                    spec.nodes.size(), desc.access_cost.size()));
    }
    for (double c : tier.access_cost) {
      if (!(c > 0.0)) throw ConfigError(fmt::format("tier {} access cost must be positive", desc.id.value));
    }
    if (desc.home_node && !node_set.contains(*desc.home_node)) {
      throw ConfigError(fmt::format("tier {} home node {} is not an accessor node", desc.id.value, *desc.home_node));
    }
    topo.tiers_.push_back(std::move(tier));
  }

  for (const auto& [node, view] : spec.views) {
    if (!node_set.contains(node)) throw ConfigError(fmt::format("view given for unknown node {}", node));
  }

  topo.views_.resize(spec.nodes.size());
  for (std::size_t n = 0; n < spec.nodes.size(); ++n) {
    auto& view = topo.views_[n];
    if (auto it = spec.views.find(spec.nodes[n]); it != spec.views.end()) {
      if (it->second.size() != topo.tiers_.size()) {
        throw ConfigError(fmt::format("view of node {} is not a permutation of the tiers", spec.nodes[n]));
      }
      std::set<std::size_t> seen;
      for (TierId id : it->second) {
        std::size_t pos = 0;
        try {
          pos = topo.position(id);
        } catch (const ConfigError&) {
          throw ConfigError(fmt::format("view of node {} names unknown tier {}", spec.nodes[n], id.value));
        }
        if (!seen.insert(pos).second) {
          throw ConfigError(fmt::format("view of node {} is not a permutation of the tiers", spec.nodes[n]));
        }
        view.push_back(pos);
      }
    } else {
      view.resize(topo.tiers_.size());
      std::iota(view.begin(), view.end(), std::size_t{0});
      std::stable_sort(view.begin(), view.end(), [&](std::size_t a, std::size_t b) {
        return topo.tiers_[a].access_cost[n] < topo.tiers_[b].access_cost[n];
      });
    }
  }

  topo.global_order_.resize(topo.tiers_.size());
  std::iota(topo.global_order_.begin(), topo.global_order_.end(), std::size_t{0});
  // Ties keep declaration order, so the last declared of equally slow tiers
  // is the slowest.
  std::stable_sort(topo.global_order_.begin(), topo.global_order_.end(), [&](std::size_t a, std::size_t b) {
    return topo.mean_access_cost(a) < topo.mean_access_cost(b);
  });
  return topo;
}

std::size_t Topology::position(TierId id) const {
  for (std::size_t i = 0; i < tiers_.size(); ++i) {
    if (tiers_[i].id == id) return i;
  }
  throw ConfigError(fmt::format("unknown tier {}", id.value));
}

std::size_t Topology::node_position(NodeId node) const {
  auto it = std::find(nodes_.begin(), nodes_.end(), node);
  if (it == nodes_.end()) throw ConfigError(fmt::format("unknown accessor node {}", node));
  return static_cast<std::size_t>(it - nodes_.begin());
}

const std::vector<std::size_t>& Topology::view(NodeId node) const { return views_[node_position(node)]; }

double Topology::access_cost(NodeId node, std::size_t tier_pos) const {
  return tiers_.at(tier_pos).access_cost[node_position(node)];
}

double Topology::mean_access_cost(std::size_t tier_pos) const {
  const auto& costs = tiers_.at(tier_pos).access_cost;
  return std::accumulate(costs.begin(), costs.end(), 0.0) / static_cast<double>(costs.size());
}

std::vector<std::size_t> Topology::first_touch_order(NodeId node) const {
  const auto& v = view(node);
  std::vector<std::size_t> order;
  for (std::size_t pos : v) {
    if (tiers_[pos].home_node == node) order.push_back(pos);
  }
  for (std::size_t pos : v) {
    if (tiers_[pos].home_node != node) order.push_back(pos);
  }
  return order;
}

std::uint64_t Topology::total_capacity_bytes() const {
  std::uint64_t total = 0;
  for (const auto& t : tiers_) total += t.capacity_bytes;
  return total;
}

double CostModel::copy_factor(std::size_t src, std::size_t dst) const {
  if (inter_tier_factor.empty()) return 1.0;
  return inter_tier_factor.at(src).at(dst);
}

void CostModel::validate(std::size_t tier_count) const {
  auto positive = [](double v, const char* name) {
    if (!(v > 0.0)) throw ConfigError(fmt::format("cost.{} must be positive", name));
  };
  positive(scan_cost, "scan_cost");
  positive(hint_fault_multiplier, "hint_fault_multiplier");
  positive(step_alloc, "step_alloc");
  positive(step_unmap, "step_unmap");
  positive(step_copy, "step_copy");
  positive(step_map, "step_map");
  if (pebs_sample_period == 0) throw ConfigError("cost.pebs_sample_period must be positive");
  if (pebs_sample_cost < 0.0) throw ConfigError("cost.pebs_sample_cost must be non-negative");
  if (pte_migration_surcharge < 0.0) throw ConfigError("cost.pte_migration_surcharge must be non-negative");
  if (inter_tier_factor.empty()) return;
  if (inter_tier_factor.size() != tier_count) throw ConfigError("cost.inter_tier_factor must be tiers x tiers");
  for (std::size_t i = 0; i < tier_count; ++i) {
    if (inter_tier_factor[i].size() != tier_count) throw ConfigError("cost.inter_tier_factor must be tiers x tiers");
    for (std::size_t j = 0; j < tier_count; ++j) {
      if (inter_tier_factor[i][j] < 1.0) throw ConfigError("cost.inter_tier_factor entries must be >= 1");
      if (inter_tier_factor[i][j] != inter_tier_factor[j][i]) {
        throw ConfigError("cost.inter_tier_factor must be symmetric");
      }
    }
  }
}

Memory::Memory(Topology topology, CostModel costs, PageIndex footprint_pages)
    : topology_(std::move(topology)),
      costs_(std::move(costs)),
      pages_(footprint_pages),
      used_bytes_(topology_.tier_count(), 0),
      tier_accesses_(topology_.tier_count(), 0) {
  costs_.validate(topology_.tier_count());
}

const Memory::PageEntry& Memory::entry(PageIndex page) const {
  if (page >= pages_.size()) throw std::out_of_range(fmt::format("page {} outside the address space", page));
  return pages_[page];
}

Memory::PageEntry& Memory::entry(PageIndex page) {
  if (page >= pages_.size()) throw std::out_of_range(fmt::format("page {} outside the address space", page));
  return pages_[page];
}

void Memory::reserve(std::size_t tier_pos, std::uint64_t bytes) {
  if (free_bytes(tier_pos) < bytes) {
    throw MemoryExhausted(fmt::format("tier {} cannot hold {} more bytes", topology_.tier(tier_pos).id.value, bytes));
  }
  used_bytes_[tier_pos] += bytes;
}

void Memory::map_page(PageIndex page, std::size_t tier_pos) {
  auto& e = entry(page);
  if (e.tier >= 0) throw std::logic_error(fmt::format("page {} is already mapped", page));
  reserve(tier_pos, page_bytes());
  e = PageEntry{static_cast<std::int16_t>(tier_pos), false, false, false};
}

void Memory::map_huge(PageIndex head, std::size_t tier_pos) {
  const PageIndex n = topology_.huge_page_pages();
  if (head % n != 0) throw std::invalid_argument(fmt::format("huge page head {} is not aligned", head));
  if (head + n > pages_.size()) throw std::out_of_range("huge page extends past the address space");
  for (PageIndex p = head; p < head + n; ++p) {
    if (pages_[p].tier >= 0) throw std::logic_error(fmt::format("page {} is already mapped", p));
  }
  reserve(tier_pos, n * page_bytes());
  for (PageIndex p = head; p < head + n; ++p) {
    pages_[p] = PageEntry{static_cast<std::int16_t>(tier_pos), true, false, false};
  }
}

bool Memory::is_mapped(PageIndex page) const { return page < pages_.size() && pages_[page].tier >= 0; }

std::size_t Memory::tier_of(PageIndex page) const {
  const auto& e = entry(page);
  if (e.tier < 0) throw std::out_of_range(fmt::format("page {} is not mapped", page));
  return static_cast<std::size_t>(e.tier);
}

bool Memory::is_huge(PageIndex page) const { return entry(page).huge; }

PageIndex Memory::unit_head(PageIndex page) const {
  if (!entry(page).huge) return page;
  const PageIndex n = topology_.huge_page_pages();
  return page - page % n;
}

PageIndex Memory::unit_pages(PageIndex page) const { return entry(page).huge ? topology_.huge_page_pages() : 1; }

bool Memory::access_bit(PageIndex page) const { return entry(unit_head(page)).accessed; }

bool Memory::dirty_bit(PageIndex page) const { return entry(unit_head(page)).dirty; }

void Memory::clear_access_bit(PageIndex page) { entry(unit_head(page)).accessed = false; }

bool Memory::scan_pte(PageIndex page) { return scan_pte(page, costs_.scan_cost); }

bool Memory::scan_pte(PageIndex page, double cost) {
  if (!is_mapped(page)) throw std::out_of_range(fmt::format("scan of unmapped page {}", page));
  auto& e = entry(unit_head(page));
  const bool seen = e.accessed;
  e.accessed = false;
  ledger_.profiling += cost;
  return seen;
}

double Memory::apply_access(const AccessEvent& access) {
  if (!is_mapped(access.vpage)) throw std::out_of_range(fmt::format("access to unmapped page {}", access.vpage));
  const std::size_t tier = tier_of(access.vpage);
  auto& e = entry(unit_head(access.vpage));
  e.accessed = true;
  if (access.is_write) e.dirty = true;
  ++tier_accesses_[tier];
  const double cost = topology_.access_cost(access.node, tier);
  ledger_.app += cost;
  return cost;
}

std::uint64_t Memory::free_bytes(std::size_t tier_pos) const {
  return topology_.tier(tier_pos).capacity_bytes - used_bytes_.at(tier_pos);
}

std::uint64_t Memory::placed_bytes() const {
  return std::accumulate(used_bytes_.begin(), used_bytes_.end(), std::uint64_t{0});
}

void Memory::remap(PageIndex start, PageIndex len, std::size_t dst) {
  if (len == 0) return;
  if (start + len > pages_.size()) throw std::out_of_range("remap range outside the address space");
  if (dst >= topology_.tier_count()) throw std::out_of_range("remap to unknown tier");
  if (unit_head(start) != start) throw std::invalid_argument("remap range starts inside a huge page");
  const PageIndex last = start + len - 1;
  if (is_huge(last) && unit_head(last) + topology_.huge_page_pages() - 1 != last) {
    throw std::invalid_argument("remap range ends inside a huge page");
  }
  std::vector<std::uint64_t> leaving(topology_.tier_count(), 0);
  for (PageIndex p = start; p <= last; ++p) {
    if (pages_[p].tier < 0) throw std::out_of_range(fmt::format("remap of unmapped page {}", p));
    if (static_cast<std::size_t>(pages_[p].tier) != dst) leaving[static_cast<std::size_t>(pages_[p].tier)] += page_bytes();
  }
  const std::uint64_t incoming = std::accumulate(leaving.begin(), leaving.end(), std::uint64_t{0});
  reserve(dst, incoming);
  for (std::size_t t = 0; t < leaving.size(); ++t) used_bytes_[t] -= leaving[t];
  for (PageIndex p = start; p <= last; ++p) {
    pages_[p].tier = static_cast<std::int16_t>(dst);
    pages_[p].accessed = false;
    pages_[p].dirty = false;
  }
}

void Memory::reset_tier_accesses() { std::fill(tier_accesses_.begin(), tier_accesses_.end(), 0); }

}  // namespace tiersim
