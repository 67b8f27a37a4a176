#include "tiersim/policy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>

#include <fmt/format.h>

namespace tiersim {

void PolicyConfig::validate() const {
  if (!(ema_alpha > 0.0 && ema_alpha <= 1.0)) throw ConfigError("policy.ema_alpha must lie in (0, 1]");
  if (!(bucket_width > 0.0)) throw ConfigError("policy.bucket_width must be positive");
}

std::uint64_t PolicyConfig::budget_bytes(const Topology& topology) const {
  if (migration_budget_bytes != 0) return migration_budget_bytes;
  return topology.total_capacity_bytes() / 20;
}

void update_ema(RegionSet& regions, double alpha) {
  for (auto& r : regions) {
    if (!r.profiled) continue;
    r.whi = r.has_history ? alpha * r.hi + (1.0 - alpha) * r.whi : r.hi;
    r.has_history = true;
  }
}

HotnessHistogram::HotnessHistogram(unsigned num_scans, double bucket_width) : width_(bucket_width) {
  if (num_scans == 0 || !(bucket_width > 0.0)) throw std::invalid_argument("histogram needs scans and a positive width");
  const auto n = static_cast<std::size_t>(std::ceil(static_cast<double>(num_scans) / bucket_width - 1e-9));
  buckets_.resize(std::max<std::size_t>(1, n));
}

std::size_t HotnessHistogram::bucket_of(double whi) const {
  if (!(whi > 0.0)) return 0;
  const auto b = static_cast<std::size_t>(std::floor(whi / width_ + 1e-9));
  return std::min(b, buckets_.size() - 1);
}

void HotnessHistogram::build(const RegionSet& regions) {
  for (auto& b : buckets_) b.clear();
  for (const auto& r : regions) insert(r.id, r.whi);
}

void HotnessHistogram::insert(RegionId id, double whi) {
  auto& b = buckets_[bucket_of(whi)];
  b.insert(std::lower_bound(b.begin(), b.end(), id), id);
}

void HotnessHistogram::erase(RegionId id, double whi) {
  auto& b = buckets_[bucket_of(whi)];
  auto it = std::lower_bound(b.begin(), b.end(), id);
  if (it == b.end() || *it != id) throw std::logic_error(fmt::format("region {} is not in its bucket", id));
  b.erase(it);
}

void HotnessHistogram::move(RegionId id, double old_whi, double new_whi) {
  if (bucket_of(old_whi) == bucket_of(new_whi)) return;
  erase(id, old_whi);
  insert(id, new_whi);
}

std::size_t HotnessHistogram::size() const {
  std::size_t n = 0;
  for (const auto& b : buckets_) n += b.size();
  return n;
}

NodeId dominant_node(const Region& region, const Topology& topology) {
  const auto nodes = topology.nodes();
  std::size_t best = 0;
  for (std::size_t i = 1; i < region.origin_counts.size() && i < nodes.size(); ++i) {
    if (region.origin_counts[i] > region.origin_counts[best]) best = i;
  }
  return nodes[best];
}

const std::vector<std::size_t>& resolve_destination(const Region& region, const Topology& topology) {
  return topology.view(dominant_node(region, topology));
}

std::string to_string(MoveReason reason) { return reason == MoveReason::promote ? "promote" : "demote"; }

std::vector<std::size_t> promotion_order(const RegionSet& regions, double bucket_width, unsigned num_scans) {
  HotnessHistogram hist(num_scans, bucket_width);
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    if (regions[i].has_history && regions[i].whi > 0.0) order.push_back(i);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const auto ba = hist.bucket_of(regions[a].whi), bb = hist.bucket_of(regions[b].whi);
    if (ba != bb) return ba > bb;
    if (regions[a].whi != regions[b].whi) return regions[a].whi > regions[b].whi;
    return regions[a].id < regions[b].id;
  });
  return order;
}

namespace {

struct PlanState {
  std::vector<std::size_t> tier;
  std::vector<std::int64_t> free;
  std::vector<bool> moved;
  std::vector<bool> promoted;
  std::vector<PlannedMove> moves;
};

PlanState initial_state(const RegionSet& regions, const Memory& memory) {
  PlanState s;
  s.tier.resize(regions.size());
  for (std::size_t i = 0; i < regions.size(); ++i) s.tier[i] = regions[i].tier;
  for (std::size_t t = 0; t < memory.topology().tier_count(); ++t) {
    s.free.push_back(static_cast<std::int64_t>(memory.free_bytes(t)));
  }
  s.moved.assign(regions.size(), false);
  s.promoted.assign(regions.size(), false);
  return s;
}

MigrationPlan finish(PlanState& s) {
  MigrationPlan plan;
  plan.moves = std::move(s.moves);
  for (const auto& m : plan.moves) {
    (m.reason == MoveReason::promote ? plan.promoted_bytes : plan.demoted_bytes) += m.bytes;
  }
  return plan;
}

void apply_move(PlanState& s, const Region& r, std::size_t i, std::size_t dst, MoveReason reason, std::int64_t bytes) {
  s.moves.push_back({r.id, r.start, r.len, s.tier[i], dst, reason, static_cast<std::uint64_t>(bytes)});
  s.free[s.tier[i]] += bytes;
  s.free[dst] -= bytes;
  s.tier[i] = dst;
  s.moved[i] = true;
  if (reason == MoveReason::promote) s.promoted[i] = true;
}

class Planner {
 public:
  Planner(const RegionSet& regions, const Memory& memory, const std::vector<std::size_t>* fixed_order = nullptr)
      : regions_(regions), memory_(memory), fixed_order_(fixed_order) {}

  std::int64_t bytes(std::size_t i) const {
    return static_cast<std::int64_t>(regions_[i].bytes(memory_.page_bytes()));
  }

  std::optional<std::size_t> lower_tier(std::size_t i, std::size_t from) const {
    const auto& view =
        fixed_order_ ? *fixed_order_ : memory_.topology().view(dominant_node(regions_[i], memory_.topology()));
    auto it = std::find(view.begin(), view.end(), from);
    if (it == view.end() || std::next(it) == view.end()) return std::nullopt;
    return *std::next(it);
  }

  // Frees `need` bytes in `tier` by demoting regions colder than `bound`.
  bool make_room(PlanState& s, std::size_t tier, std::int64_t need, double bound, unsigned depth) const {
    if (s.free[tier] >= need) return true;
    if (depth > memory_.topology().tier_count()) return false;
    std::vector<std::size_t> victims;
    for (std::size_t i = 0; i < regions_.size(); ++i) {
      if (s.tier[i] == tier && !s.moved[i] && !s.promoted[i] && regions_[i].whi < bound) victims.push_back(i);
    }
    std::sort(victims.begin(), victims.end(), [&](std::size_t a, std::size_t b) {
      if (regions_[a].whi != regions_[b].whi) return regions_[a].whi < regions_[b].whi;
      return regions_[a].id < regions_[b].id;
    });
    for (std::size_t v : victims) {
      if (s.free[tier] >= need) break;
      const auto lower = lower_tier(v, tier);
      if (!lower) continue;
      PlanState trial = s;
      if (!make_room(trial, *lower, bytes(v), bound, depth + 1)) continue;
      apply_move(trial, regions_[v], v, *lower, MoveReason::demote, bytes(v));
      s = std::move(trial);
    }
    return s.free[tier] >= need;
  }

 private:
  const RegionSet& regions_;
  const Memory& memory_;
  const std::vector<std::size_t>* fixed_order_;
};

}  // namespace

MigrationPlan plan_migrations(const RegionSet& regions, const Memory& memory, std::uint64_t budget_bytes,
                              double bucket_width, unsigned num_scans) {
  const Topology& topo = memory.topology();
  Planner planner(regions, memory);
  PlanState s = initial_state(regions, memory);
  std::uint64_t promoted = 0;
  for (std::size_t i : promotion_order(regions, bucket_width, num_scans)) {
    if (s.moved[i]) continue;
    const Region& r = regions[i];
    const std::int64_t b = planner.bytes(i);
    if (promoted + static_cast<std::uint64_t>(b) > budget_bytes) continue;
    const auto& view = topo.view(dominant_node(r, topo));
    const auto cur = std::find(view.begin(), view.end(), s.tier[i]);
    for (auto dst = view.begin(); dst != cur; ++dst) {
      PlanState trial = s;
      if (!planner.make_room(trial, *dst, b, r.whi, 0)) continue;
      apply_move(trial, r, i, *dst, MoveReason::promote, b);
      s = std::move(trial);
      promoted += static_cast<std::uint64_t>(b);
      break;
    }
  }
  return finish(s);
}

MigrationPlan plan_one_level_promotions(const RegionSet& regions, std::span<const std::size_t> candidates,
                                        const Memory& memory, std::uint64_t budget_bytes,
                                        const std::vector<std::size_t>& order) {
  Planner planner(regions, memory, &order);
  PlanState s = initial_state(regions, memory);
  std::uint64_t promoted = 0;
  for (std::size_t i : candidates) {
    if (s.moved[i]) continue;
    const Region& r = regions[i];
    const std::int64_t b = planner.bytes(i);
    if (promoted + static_cast<std::uint64_t>(b) > budget_bytes) continue;
    const auto cur = std::find(order.begin(), order.end(), s.tier[i]);
    if (cur == order.begin() || cur == order.end()) continue;
    const std::size_t dst = *std::prev(cur);
    PlanState trial = s;
    if (!planner.make_room(trial, dst, b, r.whi, 0)) continue;
    apply_move(trial, r, i, dst, MoveReason::promote, b);
    s = std::move(trial);
    promoted += static_cast<std::uint64_t>(b);
  }
  return finish(s);
}

MigrationPlan plan_demotions(const RegionSet& regions, const Memory& memory, std::size_t tier, std::uint64_t need_bytes) {
  if (need_bytes == 0) return {};
  Planner planner(regions, memory);
  PlanState s = initial_state(regions, memory);
  // Ask for room on top of what is already free.
  const std::int64_t need = s.free[tier] + static_cast<std::int64_t>(need_bytes);
  if (!planner.make_room(s, tier, need, std::numeric_limits<double>::infinity(), 0)) {
    throw MemoryExhausted(fmt::format("cannot free {} bytes in tier {}", need_bytes, memory.topology().tier(tier).id.value));
  }
  return finish(s);
}

void write_plan_csv_header(std::ostream& out) { out << "interval,region_id,src_tier,dst_tier,reason,bytes\n"; }

void write_plan_csv(std::ostream& out, std::size_t interval, const MigrationPlan& plan, const Topology& topology) {
  for (const auto& m : plan.moves) {
    out << fmt::format("{},{},{},{},{},{}\n", interval, m.region_id, topology.tier(m.src).id.value,
                       topology.tier(m.dst).id.value, to_string(m.reason), m.bytes);
  }
}

}  // namespace tiersim
