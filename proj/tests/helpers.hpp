#pragma once

#include <vector>

#include "tiersim/memmodel.hpp"

namespace tiersim::test {

// Single-node machine with one tier per entry of `pages`, costs rising with position.
inline TopologySpec linear_spec(const std::vector<PageIndex>& pages, std::uint32_t huge = 8) {
  TopologySpec spec;
  spec.nodes = {0};
  spec.huge_page_pages = huge;
  double cost = 1.0;
  std::uint32_t id = 1;
  for (PageIndex p : pages) {
    spec.tiers.push_back(TierDesc{TierId{id++}, p * spec.base_page_bytes, {cost}, std::nullopt});
    cost *= 2.0;
  }
  return spec;
}

// Two sockets, one local tier each, and a shared slow tier.
inline TopologySpec two_node_spec(PageIndex local_pages, PageIndex slow_pages, std::uint32_t huge = 8) {
  TopologySpec spec;
  spec.nodes = {0, 1};
  spec.huge_page_pages = huge;
  spec.tiers = {TierDesc{TierId{1}, local_pages * 4096, {1.0, 2.0}, 0u},
                TierDesc{TierId{2}, local_pages * 4096, {2.0, 1.0}, 1u},
                TierDesc{TierId{3}, slow_pages * 4096, {5.0, 5.0}, std::nullopt}};
  return spec;
}

inline Memory memory_in(const TopologySpec& spec, PageIndex footprint, std::size_t tier, CostModel costs = {}) {
  Memory m(Topology::build(spec), costs, footprint);
  for (PageIndex p = 0; p < footprint; ++p) m.map_page(p, tier);
  return m;
}

}  // namespace tiersim::test
