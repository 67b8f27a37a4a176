#include "tiersim/profiler.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

namespace tiersim {

namespace {

// One count unit below tau2 is the ceiling for an escalated tau1.
constexpr double kTauEpsilon = 1e-6;

double weighted(double a, PageIndex wa, double b, PageIndex wb) {
  return (a * static_cast<double>(wa) + b * static_cast<double>(wb)) / static_cast<double>(wa + wb);
}

Region merge_two(const Region& a, const Region& b, std::size_t quota, const Memory& memory, Rng& rng) {
  Region m;
  m.id = a.start;
  m.start = a.start;
  m.len = a.len + b.len;
  m.tier = a.tier;
  m.hi = weighted(a.hi, a.len, b.hi, b.len);
  m.hi_prev = weighted(a.hi_prev, a.len, b.hi_prev, b.len);
  if (a.has_history && b.has_history) {
    m.whi = weighted(a.whi, a.len, b.whi, b.len);
  } else {
    m.whi = a.has_history ? a.whi : b.whi;
  }
  m.has_history = a.has_history || b.has_history;
  m.profiled = a.profiled && b.profiled;
  m.origin_counts = a.origin_counts;
  if (m.origin_counts.size() < b.origin_counts.size()) m.origin_counts.resize(b.origin_counts.size(), 0);
  for (std::size_t i = 0; i < b.origin_counts.size(); ++i) m.origin_counts[i] += b.origin_counts[i];
  m.origin_scan_credit = a.origin_scan_credit + b.origin_scan_credit;

  std::vector<PageIndex> pool = a.samples;
  pool.insert(pool.end(), b.samples.begin(), b.samples.end());
  for (std::size_t i = pool.size(); i > 1; --i) std::swap(pool[i - 1], pool[uniform_index(rng, i)]);
  pool.resize(std::min(pool.size(), quota));
  m.samples = std::move(pool);
  resample(m, quota, memory, rng);
  return m;
}

}  // namespace

ProfilerConfig ProfilerConfig::with_scans(unsigned num_scans) {
  ProfilerConfig cfg;
  cfg.num_scans = num_scans;
  cfg.tau1 = static_cast<double>(num_scans) / 3.0;
  cfg.tau2 = 2.0 * static_cast<double>(num_scans) / 3.0;
  return cfg;
}

void ProfilerConfig::validate() const {
  if (!(t_mi > 0.0)) throw ConfigError("profiler.t_mi must be positive");
  if (!(overhead_constraint > 0.0 && overhead_constraint < 1.0)) {
    throw ConfigError("profiler.overhead_constraint must lie in (0, 1)");
  }
  if (num_scans == 0) throw ConfigError("profiler.num_scans must be positive");
  if (!(tau1 >= 0.0 && tau1 < tau2 && tau2 <= static_cast<double>(num_scans))) {
    throw ConfigError("profiler thresholds need 0 <= tau1 < tau2 <= num_scans");
  }
  if (!(pebs_window_fraction > 0.0 && pebs_window_fraction <= 1.0)) {
    throw ConfigError("profiler.pebs_window_fraction must lie in (0, 1]");
  }
  if (hint_fault_period == 0) throw ConfigError("profiler.hint_fault_period must be positive");
  if (default_region_pages == 0) throw ConfigError("profiler.default_region_pages must be positive");
  if (top_k_variance == 0) throw ConfigError("profiler.top_k_variance must be positive");
  if (max_counter_samples == 0) throw ConfigError("profiler.max_counter_samples must be positive");
}

double effective_scan_cost(const ProfilerConfig& cfg, double scan_cost, double hint_fault_multiplier) {
  if (!cfg.origin_sampling) return scan_cost;
  return scan_cost * (1.0 + hint_fault_multiplier / static_cast<double>(cfg.hint_fault_period));
}

std::uint64_t compute_budget(const ProfilerConfig& cfg, double scan_cost, double hint_fault_multiplier) {
  if (!(scan_cost > 0.0)) throw std::invalid_argument("scan cost must be positive");
  const double eff = effective_scan_cost(cfg, scan_cost, hint_fault_multiplier);
  const double q = (cfg.t_mi * cfg.overhead_constraint) / (eff * static_cast<double>(cfg.num_scans));
  // Snap values that are integers up to rounding noise before flooring.
  const double nearest = std::round(q);
  const double num_ps = std::abs(q - nearest) <= 1e-12 * std::max(1.0, q) ? nearest : std::floor(q);
  if (!(num_ps >= 1.0)) {
    throw InfeasibleConstraint(fmt::format("overhead constraint {} allows {} page samples per interval",
                                           cfg.overhead_constraint, q));
  }
  return static_cast<std::uint64_t>(num_ps);
}

std::uint64_t total_quota(const RegionSet& regions) {
  std::uint64_t total = 0;
  for (const auto& r : regions) total += r.quota();
  return total;
}

void resample(Region& region, std::size_t quota, const Memory& memory, Rng& rng) {
  if (quota == 0) throw std::logic_error("region quota must stay positive");
  if (region.samples.size() > quota) region.samples.resize(quota);
  std::vector<PageIndex> used;
  used.reserve(quota);
  for (PageIndex s : region.samples) used.push_back(memory.unit_head(s));
  const std::size_t attempts_per_sample = 8;
  while (region.samples.size() < quota) {
    PageIndex pick = region.start + uniform_index(rng, region.len);
    for (std::size_t a = 1; a < attempts_per_sample; ++a) {
      if (std::find(used.begin(), used.end(), memory.unit_head(pick)) == used.end()) break;
      pick = region.start + uniform_index(rng, region.len);
    }
    used.push_back(memory.unit_head(pick));
    region.samples.push_back(pick);
  }
}

MergeResult merge_pass(RegionSet& regions, double tau1, const Memory& memory, Rng& rng, double tau2) {
  MergeResult result;
  // Per-region [min, max] of the sample counts seen this interval, carried
  // through merges so a merged region keeps the spread of its parts.
  std::vector<std::pair<unsigned, unsigned>> spread;
  spread.reserve(regions.size());
  for (const auto& r : regions) {
    if (r.sample_counts.empty()) {
      spread.emplace_back(std::numeric_limits<unsigned>::max(), 0u);
    } else {
      const auto [lo, hi] = std::minmax_element(r.sample_counts.begin(), r.sample_counts.end());
      spread.emplace_back(*lo, *hi);
    }
  }
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t i = 0; i + 1 < regions.size();) {
      const Region& a = regions[i];
      const Region& b = regions[i + 1];
      const unsigned lo = std::min(spread[i].first, spread[i + 1].first);
      const unsigned hi = std::max(spread[i].second, spread[i + 1].second);
      const bool too_wide = lo <= hi && static_cast<double>(hi - lo) > tau2;
      const bool eligible = a.end() == b.start && a.tier == b.tier && a.profiled && b.profiled &&
                            std::abs(a.hi - b.hi) < tau1 && !too_wide;
      if (!eligible) {
        ++i;
        continue;
      }
      const std::size_t qa = a.quota();
      const std::size_t qb = b.quota();
      const std::size_t q = std::max<std::size_t>(1, (qa + qb) / 2);
      Region merged = merge_two(a, b, q, memory, rng);
      result.saved_quota += qa + qb - q;
      ++result.merges;
      regions[i] = std::move(merged);
      regions.erase(regions.begin() + static_cast<std::ptrdiff_t>(i) + 1);
      spread[i] = {lo, hi};
      spread.erase(spread.begin() + static_cast<std::ptrdiff_t>(i) + 1);
      changed = true;
    }
  }
  return result;
}

std::size_t split_pass(RegionSet& regions, double tau2, std::uint64_t& saved_quota, const Memory& memory, Rng& rng) {
  std::size_t splits = 0;
  const PageIndex huge = memory.topology().huge_page_pages();
  for (std::size_t i = 0; i < regions.size(); ++i) {
    Region& r = regions[i];
    if (!r.profiled || r.sample_counts.size() < 2 || r.len < 2) continue;
    const auto [lo, hi] = std::minmax_element(r.sample_counts.begin(), r.sample_counts.end());
    if (static_cast<double>(*hi - *lo) <= tau2) continue;

    PageIndex mid = r.start + r.len / 2;
    if (memory.is_huge(mid) && memory.unit_head(mid) != mid) {
      const PageIndex down = memory.unit_head(mid);
      const PageIndex up = down + huge;
      mid = (mid - down <= up - mid) ? down : up;
    }
    if (mid <= r.start || mid >= r.end()) continue;

    const std::size_t q = r.quota();
    std::size_t q_left = (q + 1) / 2;
    std::size_t q_right = q / 2;
    if (q == 1) {
      if (saved_quota == 0) continue;
      --saved_quota;
      q_left = q_right = 1;
    }

    Region left = r;
    Region right = r;
    left.len = mid - r.start;
    right.start = mid;
    right.id = mid;
    right.len = r.end() - mid;
    left.samples.clear();
    right.samples.clear();
    left.sample_counts.clear();
    right.sample_counts.clear();
    for (std::size_t s = 0; s < r.samples.size(); ++s) {
      Region& half = r.samples[s] < mid ? left : right;
      half.samples.push_back(r.samples[s]);
      if (s < r.sample_counts.size()) half.sample_counts.push_back(r.sample_counts[s]);
    }
    for (Region* half : {&left, &right}) {
      if (!half->sample_counts.empty()) {
        const double sum = std::accumulate(half->sample_counts.begin(), half->sample_counts.end(), 0.0);
        half->hi = sum / static_cast<double>(half->sample_counts.size());
      }
      // Counts were taken before the cut; the halves are not split again this interval.
      half->sample_counts.clear();
    }
    resample(left, q_left, memory, rng);
    resample(right, q_right, memory, rng);

    regions[i] = std::move(left);
    regions.insert(regions.begin() + static_cast<std::ptrdiff_t>(i) + 1, std::move(right));
    ++i;
    ++splits;
  }
  return splits;
}

std::vector<RegionId> redistribute_quota(RegionSet& regions, std::uint64_t saved_quota, std::size_t top_k,
                                         const Memory& memory, Rng& rng) {
  std::vector<RegionId> recipients;
  if (saved_quota == 0 || regions.empty() || top_k == 0) return recipients;
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (regions[i].profiled) order.push_back(i);
  }
  if (order.empty()) {
    order.resize(regions.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
  }
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double sa = regions[a].variance_score();
    const double sb = regions[b].variance_score();
    if (sa != sb) return sa > sb;
    return regions[a].id < regions[b].id;
  });
  const std::size_t k = std::min<std::size_t>(top_k, order.size());
  const std::uint64_t each = saved_quota / k;
  const std::uint64_t extra = saved_quota % k;
  for (std::size_t j = 0; j < k; ++j) {
    Region& r = regions[order[j]];
    const std::uint64_t add = each + (j < extra ? 1 : 0);
    if (add > 0) resample(r, r.quota() + add, memory, rng);
    recipients.push_back(r.id);
  }
  return recipients;
}

EnforceResult enforce_budget(RegionSet& regions, std::uint64_t num_ps, const ProfilerConfig& cfg,
                             PageIndex& slowest_window_pages, const Memory& memory, Rng& rng) {
  EnforceResult res;
  res.final_tau1 = cfg.tau1;
  if (regions.size() <= num_ps) return res;

  const double cap = cfg.tau2 - kTauEpsilon;
  double tau = cfg.tau1;
  while (regions.size() > num_ps && tau < cap) {
    tau = std::min(tau + 1.0, cap);
    ++res.rounds;
    auto m = merge_pass(regions, tau, memory, rng, cfg.tau2);
    res.merges += m.merges;
    res.saved_quota += m.saved_quota;
  }
  res.final_tau1 = tau;
  if (regions.size() <= num_ps) return res;

  res.warnings.push_back(fmt::format("tau1 escalation reached {:.6f} with {} regions for {} samples; coarsening",
                                     tau, regions.size(), num_ps));
  res.coarsened = true;
  const std::size_t slowest = memory.topology().slowest();
  const PageIndex footprint = memory.footprint_pages();

  auto fold = [&](auto same_group) {
    for (std::size_t i = 0; i + 1 < regions.size() && regions.size() > num_ps;) {
      const Region& a = regions[i];
      const Region& b = regions[i + 1];
      if (a.end() == b.start && a.tier == b.tier && same_group(a, b)) {
        const std::size_t qa = a.quota(), qb = b.quota();
        const std::size_t q = std::max<std::size_t>(1, (qa + qb) / 2);
        Region merged = merge_two(a, b, q, memory, rng);
        res.saved_quota += qa + qb - q;
        ++res.merges;
        regions[i] = std::move(merged);
        regions.erase(regions.begin() + static_cast<std::ptrdiff_t>(i) + 1);
      } else {
        ++i;
      }
    }
  };

  while (regions.size() > num_ps && slowest_window_pages < footprint) {
    slowest_window_pages *= 2;
    const PageIndex w = slowest_window_pages;
    fold([&](const Region& a, const Region& b) {
      return a.tier == slowest && a.start / w == (b.end() - 1) / w;
    });
  }
  if (regions.size() > num_ps) fold([](const Region&, const Region&) { return true; });
  while (regions.size() > num_ps) {
    // Drop the coldest slowest-tier region; the counters nominate it again if it heats up.
    auto victim = regions.end();
    for (auto it = regions.begin(); it != regions.end(); ++it) {
      if (it->tier != slowest) continue;
      if (victim == regions.end() || it->whi < victim->whi) victim = it;
    }
    if (victim == regions.end()) {
      throw InfeasibleConstraint(fmt::format("{} regions cannot be reduced to {} page samples", regions.size(), num_ps));
    }
    res.saved_quota += victim->quota();
    regions.erase(victim);
    res.warnings.push_back("dropped a slowest-tier region to respect the sample budget");
  }
  return res;
}

std::vector<PageIndex> pebs_counter_samples(const Memory& memory, std::span<const AccessEvent> slice,
                                            const ProfilerConfig& cfg) {
  std::vector<PageIndex> out;
  const auto window = static_cast<std::size_t>(std::floor(cfg.pebs_window_fraction * static_cast<double>(slice.size())));
  const std::size_t slowest = memory.topology().slowest();
  const std::uint32_t period = memory.costs().pebs_sample_period;
  std::uint64_t hits = 0;
  for (std::size_t i = 0; i < window; ++i) {
    const auto& e = slice[i];
    if (memory.tier_of(e.vpage) != slowest) continue;
    if (++hits % period == 0) out.push_back(e.vpage);
    if (out.size() >= cfg.max_counter_samples) break;
  }
  return out;
}

namespace {

// Slowest-tier window around `page` that is not covered by a region, aligned
// outward to huge-page boundaries.
std::pair<PageIndex, PageIndex> uncovered_window(PageIndex page, PageIndex window_pages, const std::vector<bool>& covered,
                                                 const Memory& memory) {
  const std::size_t slowest = memory.topology().slowest();
  const PageIndex w0 = page - page % window_pages;
  const PageIndex w1 = std::min(memory.footprint_pages(), w0 + window_pages);
  auto usable = [&](PageIndex p) { return !covered[p] && memory.tier_of(p) == slowest; };
  PageIndex lo = page;
  while (lo > w0 && usable(lo - 1)) --lo;
  PageIndex hi = page + 1;
  while (hi < w1 && usable(hi)) ++hi;
  lo = memory.unit_head(lo);
  const PageIndex last = hi - 1;
  hi = memory.unit_head(last) + memory.unit_pages(last);
  return {lo, hi};
}

Region make_region(PageIndex start, PageIndex end, std::size_t tier, std::size_t nodes) {
  Region r;
  r.id = start;
  r.start = start;
  r.len = end - start;
  r.tier = tier;
  r.origin_counts.assign(nodes, 0);
  return r;
}

void sort_regions(RegionSet& regions) {
  std::sort(regions.begin(), regions.end(), [](const Region& a, const Region& b) { return a.start < b.start; });
}

}  // namespace

PebsSelection pebs_assist(const RegionSet& regions, const Memory& memory, std::span<const AccessEvent> slice,
                          const ProfilerConfig& cfg, PageIndex window_pages, std::size_t max_new_regions) {
  PebsSelection sel;
  sel.counter_samples = pebs_counter_samples(memory, slice, cfg);
  sel.cost = static_cast<double>(sel.counter_samples.size()) * memory.costs().pebs_sample_cost;
  const std::size_t slowest = memory.topology().slowest();

  std::vector<bool> covered(memory.footprint_pages(), false);
  for (const auto& r : regions) {
    for (PageIndex p = r.start; p < r.end(); ++p) covered[p] = true;
  }

  std::vector<bool> hit(regions.size(), false);
  // start -> (end, first captured page, number of samples)
  std::map<PageIndex, std::tuple<PageIndex, PageIndex, std::size_t>> windows;
  for (PageIndex page : sel.counter_samples) {
    auto it = std::upper_bound(regions.begin(), regions.end(), page,
                               [](PageIndex p, const Region& r) { return p < r.start; });
    if (it != regions.begin() && std::prev(it)->contains(page)) {
      hit[static_cast<std::size_t>(std::prev(it) - regions.begin())] = true;
      continue;
    }
    const auto [lo, hi] = uncovered_window(page, window_pages, covered, memory);
    bool merged = false;
    for (auto& [start, w] : windows) {
      if (lo < std::get<0>(w) && start < hi) {
        ++std::get<2>(w);
        merged = true;
        break;
      }
    }
    if (!merged) windows[lo] = {hi, page, 1};
  }
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (regions[i].tier != slowest) continue;
    (hit[i] ? sel.matched : sel.skipped).push_back(regions[i].id);
  }

  std::vector<std::pair<PageIndex, std::tuple<PageIndex, PageIndex, std::size_t>>> ordered(windows.begin(), windows.end());
  std::stable_sort(ordered.begin(), ordered.end(),
                   [](const auto& a, const auto& b) { return std::get<2>(a.second) > std::get<2>(b.second); });
  const std::size_t nodes = memory.topology().nodes().size();
  for (const auto& [start, w] : ordered) {
    if (sel.created.size() >= max_new_regions) {
      ++sel.dropped_windows;
      continue;
    }
    Region r = make_region(start, std::get<0>(w), slowest, nodes);
    r.samples.push_back(std::get<1>(w));
    sel.created.push_back(std::move(r));
  }
  sort_regions(sel.created);
  return sel;
}

RegionSet init_regions(const Memory& memory, std::span<const AccessEvent> first_slice, const ProfilerConfig& cfg,
                       std::uint64_t num_ps, Rng& rng, PageIndex* window_pages_out) {
  const Topology& topo = memory.topology();
  const std::size_t slowest = topo.slowest();
  const std::size_t nodes = topo.nodes().size();
  const PageIndex footprint = memory.footprint_pages();
  const PageIndex huge = topo.huge_page_pages();
  PageIndex window = cfg.default_region_pages;
  bool any_huge = false;
  for (PageIndex p = 0; p < footprint; p += memory.unit_pages(p)) {
    if (memory.is_huge(p)) {
      any_huge = true;
      break;
    }
  }
  if (any_huge && window % huge != 0) window = (window / huge + 1) * huge;

  // Tier runs are the coarsest possible partition.
  std::size_t runs = footprint == 0 ? 0 : 1;
  for (PageIndex p = 1; p < footprint; ++p) {
    if (memory.tier_of(p) != memory.tier_of(p - 1)) ++runs;
  }

  while (true) {
    RegionSet regions;
    for (PageIndex w0 = 0; w0 < footprint; w0 += window) {
      const PageIndex w1 = std::min(footprint, w0 + window);
      PageIndex p = w0;
      while (p < w1) {
        const std::size_t tier = memory.tier_of(p);
        PageIndex q = p + memory.unit_pages(p);
        while (q < w1 && memory.tier_of(q) == tier) q += memory.unit_pages(q);
        if (!(cfg.pebs_assist && tier == slowest)) {
          Region r = make_region(p, std::min(q, footprint), tier, nodes);
          resample(r, 1, memory, rng);
          regions.push_back(std::move(r));
        }
        p = q;
      }
    }
    if (regions.size() <= num_ps && cfg.pebs_assist) {
      auto sel = pebs_assist(regions, memory, first_slice, cfg, window, num_ps - regions.size());
      for (auto& r : sel.created) regions.push_back(std::move(r));
      sort_regions(regions);
    }
    if (regions.size() <= num_ps) {
      if (window_pages_out) *window_pages_out = window;
      return regions;
    }
    if (window >= footprint || runs > num_ps) {
      throw InfeasibleConstraint(fmt::format("{} page samples cannot cover {} initial regions", num_ps, regions.size()));
    }
    window *= 2;
  }
}

void sample_origin(RegionSet& regions, std::span<const AccessEvent> slice, const std::vector<std::uint64_t>& scans,
                   const ProfilerConfig& cfg, const Topology& topology) {
  if (!cfg.origin_sampling) return;
  std::vector<std::uint64_t> captures(regions.size(), 0);
  bool any = false;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    Region& r = regions[i];
    r.origin_scan_credit += i < scans.size() ? scans[i] : 0;
    captures[i] = r.origin_scan_credit / cfg.hint_fault_period;
    r.origin_scan_credit %= cfg.hint_fault_period;
    if (r.origin_counts.size() < topology.nodes().size()) r.origin_counts.resize(topology.nodes().size(), 0);
    // A region with no origin sample yet captures on its first scanned interval
    // instead of waiting for a full period; the credit restarts from zero.
    const bool no_origin = std::all_of(r.origin_counts.begin(), r.origin_counts.end(), [](auto c) { return c == 0; });
    if (captures[i] == 0 && no_origin && i < scans.size() && scans[i] > 0) {
      captures[i] = 1;
      r.origin_scan_credit = 0;
    }
    any = any || captures[i] > 0;
  }
  if (!any) return;
  for (const auto& e : slice) {
    auto it = std::upper_bound(regions.begin(), regions.end(), e.vpage,
                               [](PageIndex p, const Region& r) { return p < r.start; });
    if (it == regions.begin()) continue;
    --it;
    if (!it->contains(e.vpage)) continue;
    auto idx = static_cast<std::size_t>(it - regions.begin());
    if (captures[idx] == 0) continue;
    --captures[idx];
    ++it->origin_counts[topology.node_position(e.node)];
  }
}

Profiler::Profiler(ProfilerConfig cfg, const Memory& memory)
    : cfg_(std::move(cfg)), rng_(mix_seed(cfg_.seed, 0x70726f66)) {
  cfg_.validate();
  // Counter handling is paid from the same budget, so reserve its worst case.
  ProfilerConfig scan_cfg = cfg_;
  if (cfg_.pebs_assist) {
    const double reserve = static_cast<double>(cfg_.max_counter_samples) * memory.costs().pebs_sample_cost;
    scan_cfg.t_mi = cfg_.t_mi - reserve / cfg_.overhead_constraint;
    if (!(scan_cfg.t_mi > 0.0)) {
      throw InfeasibleConstraint("counter sample cost exceeds the profiling budget");
    }
  }
  num_ps_ = compute_budget(scan_cfg, memory.costs().scan_cost, memory.costs().hint_fault_multiplier);
  eff_scan_cost_ = tiersim::effective_scan_cost(cfg_, memory.costs().scan_cost, memory.costs().hint_fault_multiplier);
  slowest_window_ = cfg_.default_region_pages;
}

void Profiler::fit_quota(const Memory& memory) {
  if (regions_.size() > num_ps_) {
    auto res = enforce_budget(regions_, num_ps_, cfg_, slowest_window_, memory, rng_);
    (void)res;
  }
  std::uint64_t total = total_quota(regions_);
  if (total < num_ps_) {
    redistribute_quota(regions_, num_ps_ - total, cfg_.top_k_variance, memory, rng_);
    return;
  }
  while (total > num_ps_) {
    // Take one sample from the largest quota; idle regions and low variance give first.
    Region* donor = nullptr;
    for (auto& r : regions_) {
      if (r.quota() <= 1) continue;
      if (!donor) {
        donor = &r;
        continue;
      }
      auto key = [](const Region& x) { return std::make_tuple(x.quota(), !x.profiled, -x.variance_score()); };
      if (key(r) > key(*donor)) donor = &r;
    }
    if (!donor) break;
    donor->samples.pop_back();
    --total;
  }
}

void Profiler::select(const Memory& memory, std::span<const AccessEvent> slice, IntervalProfile& stats,
                      std::vector<PageIndex>& counter_pages, std::vector<std::vector<PageIndex>>& loans) {
  const std::size_t slowest = memory.topology().slowest();
  std::vector<bool> active;
  if (!initialized_) {
    regions_ = init_regions(memory, slice, cfg_, num_ps_, rng_, &slowest_window_);
    initialized_ = true;
    active.assign(regions_.size(), true);
    stats.created_regions = regions_.size();
    if (cfg_.pebs_assist) counter_pages = pebs_counter_samples(memory, slice, cfg_);
  } else if (cfg_.pebs_assist) {
    const std::size_t room = num_ps_ > regions_.size() ? num_ps_ - regions_.size() : 0;
    auto sel = pebs_assist(regions_, memory, slice, cfg_, slowest_window_, room);
    counter_pages = sel.counter_samples;
    stats.created_regions = sel.created.size();
    for (auto& r : sel.created) regions_.push_back(std::move(r));
    sort_regions(regions_);
    std::vector<RegionId> skipped = sel.skipped;
    std::sort(skipped.begin(), skipped.end());
    for (auto& r : regions_) {
      if (std::binary_search(skipped.begin(), skipped.end(), r.id)) r.profiled = false;
    }
    active.resize(regions_.size());
    for (std::size_t i = 0; i < regions_.size(); ++i) {
      active[i] = !std::binary_search(skipped.begin(), skipped.end(), regions_[i].id);
    }
    fit_quota(memory);
    if (active.size() != regions_.size()) {
      // Budget enforcement changed the set; profile everything that is left.
      active.assign(regions_.size(), true);
    }
  } else {
    active.assign(regions_.size(), true);
  }

  // Fresh samples every interval; the counter-captured page leads in the slowest tier.
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    Region& r = regions_[i];
    const std::size_t q = std::max<std::size_t>(1, r.quota());
    r.samples.clear();
    if (r.tier == slowest && cfg_.pebs_assist) {
      for (PageIndex p : counter_pages) {
        if (r.contains(p)) {
          r.samples.push_back(p);
          break;
        }
      }
    }
    resample(r, q, memory, rng_);
  }

  // Skipped regions lend their quota to the active regions with the largest variance.
  loans.assign(regions_.size(), {});
  std::uint64_t lent = 0;
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    if (!active[i]) {
      lent += regions_[i].quota();
      ++stats.skipped_regions;
    } else {
      candidates.push_back(i);
    }
  }
  if (lent > 0 && !candidates.empty()) {
    std::stable_sort(candidates.begin(), candidates.end(), [&](std::size_t a, std::size_t b) {
      const double sa = regions_[a].variance_score(), sb = regions_[b].variance_score();
      if (sa != sb) return sa > sb;
      return regions_[a].id < regions_[b].id;
    });
    const std::size_t k = std::min(cfg_.top_k_variance, candidates.size());
    for (std::size_t j = 0; j < k; ++j) {
      const std::uint64_t n = lent / k + (j < lent % k ? 1 : 0);
      const Region& r = regions_[candidates[j]];
      for (std::uint64_t s = 0; s < n; ++s) loans[candidates[j]].push_back(r.start + uniform_index(rng_, r.len));
    }
  }
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    if (!active[i]) loans[i].clear();
  }
  // Reuse `profiled` as the activity flag for this interval.
  for (std::size_t i = 0; i < regions_.size(); ++i) regions_[i].profiled = active[i];
}

IntervalProfile Profiler::profile(Memory& memory, std::span<const AccessEvent> slice) {
  IntervalProfile stats;
  const double ledger_before = memory.ledger().profiling;
  std::vector<PageIndex> counter_pages;
  std::vector<std::vector<PageIndex>> loans;
  select(memory, slice, stats, counter_pages, loans);
  memory.ledger().profiling += static_cast<double>(counter_pages.size()) * memory.costs().pebs_sample_cost;

  const std::size_t slowest = memory.topology().slowest();
  const std::size_t n_regions = regions_.size();

  // Distinct PTE units per region; samples and loans map onto them.
  std::vector<std::vector<PageIndex>> units(n_regions);
  std::vector<std::vector<std::size_t>> sample_unit(n_regions);
  std::vector<std::vector<std::size_t>> loan_unit(n_regions);
  auto unit_index = [&](std::size_t i, PageIndex page) {
    const PageIndex head = memory.unit_head(page);
    auto& u = units[i];
    auto it = std::find(u.begin(), u.end(), head);
    if (it != u.end()) return static_cast<std::size_t>(it - u.begin());
    u.push_back(head);
    return u.size() - 1;
  };
  for (std::size_t i = 0; i < n_regions; ++i) {
    if (!regions_[i].profiled) continue;
    for (PageIndex s : regions_[i].samples) sample_unit[i].push_back(unit_index(i, s));
    for (PageIndex s : loans[i]) loan_unit[i].push_back(unit_index(i, s));
  }
  std::vector<std::vector<unsigned>> unit_hits(n_regions);
  for (std::size_t i = 0; i < n_regions; ++i) unit_hits[i].assign(units[i].size(), 0);

  const bool delayed_slowest = cfg_.pebs_assist;
  auto prime = [&](bool slowest_tier) {
    for (std::size_t i = 0; i < n_regions; ++i) {
      if ((regions_[i].tier == slowest && delayed_slowest) != slowest_tier) continue;
      for (PageIndex u : units[i]) memory.clear_access_bit(u);
    }
  };
  std::vector<std::uint64_t> scans(n_regions, 0);
  auto scan_all = [&]() {
    for (std::size_t i = 0; i < n_regions; ++i) {
      for (std::size_t u = 0; u < units[i].size(); ++u) {
        if (memory.scan_pte(units[i][u], eff_scan_cost_)) ++unit_hits[i][u];
        ++scans[i];
        ++stats.scans;
      }
    }
  };

  const std::size_t n = slice.size();
  const auto counter_end =
      static_cast<std::size_t>(std::floor(cfg_.pebs_window_fraction * static_cast<double>(n)));
  prime(false);
  if (counter_end == 0) prime(true);
  std::size_t next = 0;
  for (unsigned k = 1; k <= cfg_.num_scans; ++k) {
    const std::size_t boundary = k * n / cfg_.num_scans;
    for (; next < boundary; ++next) {
      if (next == counter_end && counter_end != 0) prime(true);
      memory.apply_access(slice[next]);
    }
    scan_all();
  }

  for (std::size_t i = 0; i < n_regions; ++i) {
    Region& r = regions_[i];
    if (!r.profiled) continue;
    r.sample_counts.clear();
    double sum = 0.0;
    for (std::size_t s = 0; s < sample_unit[i].size(); ++s) {
      const unsigned c = unit_hits[i][sample_unit[i][s]];
      r.sample_counts.push_back(c);
      sum += c;
    }
    for (std::size_t s = 0; s < loan_unit[i].size(); ++s) sum += unit_hits[i][loan_unit[i][s]];
    const std::size_t denom = sample_unit[i].size() + loan_unit[i].size();
    r.hi_prev = r.hi;
    r.hi = denom ? sum / static_cast<double>(denom) : 0.0;
    ++stats.profiled_regions;
  }
  sample_origin(regions_, slice, scans, cfg_, memory.topology());
  stats.cost = memory.ledger().profiling - ledger_before;
  return stats;
}

void Profiler::restructure(const Memory& memory, IntervalProfile& stats) {
  auto merged = merge_pass(regions_, cfg_.tau1, memory, rng_, cfg_.tau2);
  stats.merges += merged.merges;
  const std::uint64_t total = total_quota(regions_);
  std::uint64_t slack = total < num_ps_ ? num_ps_ - total : 0;
  stats.splits += split_pass(regions_, cfg_.tau2, slack, memory, rng_);
  if (regions_.size() > num_ps_) {
    auto res = enforce_budget(regions_, num_ps_, cfg_, slowest_window_, memory, rng_);
    stats.merges += res.merges;
    stats.warnings.insert(stats.warnings.end(), res.warnings.begin(), res.warnings.end());
  }
  fit_quota(memory);
}

void write_profiler_csv_header(std::ostream& out) { out << "interval,region_id,start_page,len_pages,tier,quota,hi,whi\n"; }

void write_profiler_csv(std::ostream& out, std::size_t interval, const RegionSet& regions, const Topology& topology) {
  for (const auto& r : regions) {
    out << fmt::format("{},{},{},{},{},{},{:.6f},{:.6f}\n", interval, r.id, r.start, r.len,
                       topology.tier(r.tier).id.value, r.quota(), r.hi, r.whi);
  }
}

}  // namespace tiersim
