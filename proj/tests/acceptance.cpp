// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "tiersim/config.hpp"
#include "tiersim/experiments.hpp"
#include "tiersim/migrator.hpp"
#include "tiersim/policy.hpp"
#include "tiersim/profiler.hpp"
#include "tiersim/rng.hpp"
#include "tiersim/simulation.hpp"

using namespace tiersim;

namespace {

constexpr std::size_t kSeeds = 10;

std::string config_path(const std::string& name) { return std::string(TIERSIM_SOURCE_DIR) + "/configs/" + name; }

RunConfig seeded(const RunConfig& base, std::uint64_t seed, SystemKind system) {
  RunConfig cfg = base;
  cfg.seed = seed;
  cfg.system = system;
  cfg.finalize();
  return cfg;
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

double mean(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double window_mean(const RunResult& r, std::size_t from, std::size_t to, double IntervalMetrics::*field) {
  std::vector<double> v;
  for (std::size_t i = from; i < to && i < r.intervals.size(); ++i) v.push_back(r.intervals[i].*field);
  return mean(v);
}

// 1. Profiling ledger within t_mi * overhead_constraint in every interval of a
// 1,000-interval GUPS run, in at most 60 s.
Outcome budget_hardness() {
  RunConfig cfg = load_config(config_path("gups_4tier.conf"));
  cfg.intervals = 1000;
  cfg.workload.gups.accesses = cfg.accesses_per_interval * 1000;
  cfg.finalize();
  const auto t0 = std::chrono::steady_clock::now();
  const Workload w = build_workload(cfg);
  const RunResult r = simulate(cfg, w);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::size_t over = 0;
  for (const auto& m : r.intervals) {
    if (m.profiling_cost > r.profiling_budget) ++over;
  }
  const bool ok = r.intervals.size() == 1000 && over == 0 && r.budget_violations == 0 && secs <= 60.0;
  return {ok, fmt::format("intervals={} violations={} budget={:.3f} runtime={:.2f}s", r.intervals.size(), over,
                          r.profiling_budget, secs)};
}

// 2. compute_budget against exact rational arithmetic.
Outcome budget_oracle() {
  Rng rng(mix_seed(2024, 2));
  std::size_t mismatches = 0;
  for (int t = 0; t < 100; ++t) {
    const std::uint64_t t_mi = 1 + uniform_index(rng, 2'000'000);
    const std::uint64_t c_num = 1 + uniform_index(rng, 99);  // constraint = c_num / 1000
    const std::uint64_t s_num = 1 + uniform_index(rng, 400);  // scan cost = s_num / 100
    const unsigned scans = 1 + static_cast<unsigned>(uniform_index(rng, 6));
    const bool origin = bernoulli(rng, 0.5);
    const std::uint64_t mult = 1 + uniform_index(rng, 20);
    const unsigned period = 1 + static_cast<unsigned>(uniform_index(rng, 20));

    ProfilerConfig cfg = ProfilerConfig::with_scans(scans);
    cfg.t_mi = static_cast<double>(t_mi);
    cfg.overhead_constraint = static_cast<double>(c_num) / 1000.0;
    cfg.origin_sampling = origin;
    cfg.hint_fault_period = period;

    // num_ps = floor(t_mi * c/1000 / (s/100 * (1 + m/p) * scans))
    //        = floor(t_mi * c * 100 * p / (1000 * s * (p + m) * scans))
    using u128 = unsigned __int128;
    const std::uint64_t p_eff = origin ? period : 1;
    const std::uint64_t m_eff = origin ? mult : 0;
    const u128 num = static_cast<u128>(t_mi) * c_num * 100 * p_eff;
    const u128 den = static_cast<u128>(1000) * s_num * (p_eff + m_eff) * scans;
    const auto expected = static_cast<std::uint64_t>(num / den);

    bool threw = false;
    std::uint64_t got = 0;
    try {
      got = compute_budget(cfg, static_cast<double>(s_num) / 100.0, static_cast<double>(mult));
    } catch (const InfeasibleConstraint&) {
      threw = true;
    }
    const bool ok = expected == 0 ? threw : (!threw && got == expected);
    if (!ok) ++mismatches;
  }
  return {mismatches == 0, fmt::format("cases=100 mismatches={}", mismatches)};
}

// 3. update_ema over 50 steps against the closed-form expansion.
Outcome ema_closed_form() {
  Rng rng(mix_seed(2024, 3));
  double worst = 0.0;
  for (int t = 0; t < 100; ++t) {
    const double alpha = 0.05 + 0.9 * uniform_unit(rng);
    std::vector<double> hi(50);
    for (auto& h : hi) h = 3.0 * uniform_unit(rng);
    RegionSet regions(1);
    regions[0].len = 1;
    regions[0].profiled = true;
    for (double h : hi) {
      regions[0].hi = h;
      update_ema(regions, alpha);
    }
    // whi_n = (1-a)^(n-1) hi_1 + sum_{k=2..n} a (1-a)^(n-k) hi_k
    const std::size_t n = hi.size();
    double closed = std::pow(1.0 - alpha, static_cast<double>(n - 1)) * hi[0];
    for (std::size_t k = 1; k < n; ++k) closed += alpha * std::pow(1.0 - alpha, static_cast<double>(n - 1 - k)) * hi[k];
    worst = std::max(worst, std::abs(closed - regions[0].whi));
  }
  return {worst <= 1e-9, fmt::format("sequences=100 steps=50 max_abs_error={:.3e}", worst)};
}

std::string plan_csv(const MigrationPlan& plan, const Topology& topo) {
  std::ostringstream out;
  write_plan_csv(out, 0, plan, topo);
  return out.str();
}

// 4. Promotion planning against brute-force top-k selection by whi.
Outcome histogram_oracle() {
  Rng rng(mix_seed(2024, 4));
  std::size_t mismatches = 0;
  for (int t = 0; t < 200; ++t) {
    const std::size_t n = 1 + uniform_index(rng, 64);
    RegionSet regions;
    PageIndex cursor = 0;
    for (std::size_t i = 0; i < n; ++i) {
      Region r;
      r.start = r.id = cursor;
      r.len = 1 + uniform_index(rng, 8);
      cursor += r.len;
      r.has_history = bernoulli(rng, 0.9);
      r.whi = static_cast<double>(uniform_index(rng, 3 * 64 + 1)) / 64.0;  // multiples of 1/64
      r.hi = r.whi;
      r.profiled = true;
      regions.push_back(r);
    }
    const PageIndex fast_pages = 1 + uniform_index(rng, cursor);
    TopologySpec spec;
    spec.nodes = {0};
    spec.base_page_bytes = 4096;
    spec.huge_page_pages = 8;
    spec.tiers = {TierDesc{TierId{1}, fast_pages * 4096, {1.0}, std::nullopt},
                  TierDesc{TierId{2}, cursor * 4096, {4.0}, std::nullopt}};
    Memory memory(Topology::build(spec), CostModel{}, cursor);
    for (PageIndex p = 0; p < cursor; ++p) memory.map_page(p, 1);
    for (auto& r : regions) r.tier = 1;
    const std::uint64_t budget = (1 + uniform_index(rng, cursor)) * 4096;

    const MigrationPlan got = plan_migrations(regions, memory, budget, 1.0 / 128.0, 3);

    std::vector<std::size_t> order;
    for (std::size_t i = 0; i < n; ++i) {
      if (regions[i].has_history && regions[i].whi > 0.0) order.push_back(i);
    }
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (regions[a].whi != regions[b].whi) return regions[a].whi > regions[b].whi;
      return regions[a].id < regions[b].id;
    });
    MigrationPlan expected;
    std::uint64_t room = fast_pages * 4096;
    for (std::size_t i : order) {
      const std::uint64_t bytes = regions[i].len * 4096;
      if (expected.promoted_bytes + bytes > budget || bytes > room) continue;
      room -= bytes;
      expected.promoted_bytes += bytes;
      expected.moves.push_back(
          PlannedMove{regions[i].id, regions[i].start, regions[i].len, 1, 0, MoveReason::promote, bytes});
    }
    if (plan_csv(got, memory.topology()) != plan_csv(expected, memory.topology()) ||
        got.promoted_bytes != expected.promoted_bytes) {
      ++mismatches;
    }
  }
  return {mismatches == 0, fmt::format("instances=200 mismatches={}", mismatches)};
}

struct SeedRuns {
  std::vector<RunResult> mtm, damon, thermostat;
};

SeedRuns run_quality_experiment(const RunConfig& base, std::vector<std::string>* csv_dump = nullptr) {
  SeedRuns runs;
  for (std::uint64_t s = 1; s <= kSeeds; ++s) {
    const RunConfig mtm = seeded(base, s, SystemKind::mtm);
    const Workload w = build_workload(mtm);
    for (SystemKind k : {SystemKind::mtm, SystemKind::damon, SystemKind::thermostat}) {
      const RunConfig cfg = seeded(base, s, k);
      std::ostringstream metrics, plan, migration, profiler;
      RunSinks sinks{&metrics, &plan, &migration, &profiler};
      RunResult r = simulate(cfg, w, sinks);
      if (csv_dump) {
        csv_dump->push_back(metrics.str());
        csv_dump->push_back(plan.str());
        csv_dump->push_back(migration.str());
        csv_dump->push_back(profiler.str());
      }
      (k == SystemKind::mtm ? runs.mtm : k == SystemKind::damon ? runs.damon : runs.thermostat).push_back(std::move(r));
    }
  }
  return runs;
}

// Intervals needed to reach recall 0.8 (index + 1); never reaching counts as
// one more than the run length.
double intervals_to_recall(const RunResult& r, double target) {
  return static_cast<double>(first_interval_reaching(r.intervals, target) + 1);
}

// 5. MTM against DAMON on quality after 20 intervals and against Thermostat
// on time to recall 0.8. "After 20 intervals" is read as the steady-state
// window of intervals 20..29; the single 20th interval is printed alongside.
Outcome profiling_quality() {
  const RunConfig base = load_config(config_path("gups_4tier.conf"));
  const SeedRuns runs = run_quality_experiment(base);
  std::vector<double> mr, mp, dr, dp, mt, tt, mr20, mp20, dr20, dp20;
  for (std::size_t s = 0; s < kSeeds; ++s) {
    mr.push_back(window_mean(runs.mtm[s], 20, 30, &IntervalMetrics::recall));
    mp.push_back(window_mean(runs.mtm[s], 20, 30, &IntervalMetrics::precision));
    dr.push_back(window_mean(runs.damon[s], 20, 30, &IntervalMetrics::recall));
    dp.push_back(window_mean(runs.damon[s], 20, 30, &IntervalMetrics::precision));
    mr20.push_back(runs.mtm[s].intervals.at(19).recall);
    mp20.push_back(runs.mtm[s].intervals.at(19).precision);
    dr20.push_back(runs.damon[s].intervals.at(19).recall);
    dp20.push_back(runs.damon[s].intervals.at(19).precision);
    mt.push_back(intervals_to_recall(runs.mtm[s], 0.8));
    tt.push_back(intervals_to_recall(runs.thermostat[s], 0.8));
  }
  const bool ok = mean(mr) >= mean(dr) && mean(mp) >= mean(dp) && mean(mt) <= 0.5 * mean(tt);
  return {ok, fmt::format("intervals 20-29: mtm r={:.3f} p={:.3f}, damon r={:.3f} p={:.3f}; interval 20 alone: "
                          "mtm r={:.3f} p={:.3f}, damon r={:.3f} p={:.3f}; to recall 0.8: mtm={:.2f} thermostat={:.2f}",
                          mean(mr), mean(mp), mean(dr), mean(dp), mean(mr20), mean(mp20), mean(dr20), mean(dp20),
                          mean(mt), mean(tt))};
}

// 6. Recovery after each phase boundary: intervals from the boundary until
// recall first reaches 0.8 (the boundary interval counts as 1). A phase that
// never recovers counts as its length plus one.
Outcome phase_recovery() {
  const RunConfig base = load_config(config_path("phase_change.conf"));
  RunConfig probe = base;
  probe.seed = 1;
  probe.finalize();
  const std::size_t phase_len = probe.workload.gups.accesses / probe.accesses_per_interval;
  const std::size_t phases = probe.workload.phase_count;

  std::vector<std::vector<double>> mtm(phases - 1), damon(phases - 1);
  for (std::uint64_t s = 1; s <= kSeeds; ++s) {
    const RunConfig cm = seeded(base, s, SystemKind::mtm);
    const RunConfig cd = seeded(base, s, SystemKind::damon);
    const Workload w = build_workload(cm);
    const RunResult rm = simulate(cm, w);
    const RunResult rd = simulate(cd, w);
    for (std::size_t k = 1; k < phases; ++k) {
      const std::size_t b = k * phase_len;
      auto recovery = [&](const RunResult& r) {
        std::vector<IntervalMetrics> phase(r.intervals.begin() + static_cast<std::ptrdiff_t>(b),
                                           r.intervals.begin() + static_cast<std::ptrdiff_t>(b + phase_len));
        return static_cast<double>(first_interval_reaching(phase, 0.8) + 1);
      };
      mtm[k - 1].push_back(recovery(rm));
      damon[k - 1].push_back(recovery(rd));
    }
  }
  bool ok = true;
  std::string per_boundary;
  std::vector<double> all_m, all_d;
  for (std::size_t k = 0; k + 1 < phases; ++k) {
    const double m = mean(mtm[k]);
    const double d = mean(damon[k]);
    ok = ok && m <= 5.0 && d >= 2.0 * m;
    per_boundary += fmt::format(" b{}: mtm={:.2f} damon={:.2f};", k + 1, m, d);
    all_m.insert(all_m.end(), mtm[k].begin(), mtm[k].end());
    all_d.insert(all_d.end(), damon[k].begin(), damon[k].end());
  }
  return {ok, fmt::format("mean intervals to recall 0.8 after a boundary:{} overall mtm={:.2f} damon={:.2f}",
                          per_boundary, mean(all_m), mean(all_d))};
}

// 7. Fastest-tier application accesses over intervals 10..29.
Outcome fast_tier_traffic() {
  const RunConfig base = load_config(config_path("gups_4tier.conf"));
  double mtm = 0.0, autonuma = 0.0, first_touch = 0.0;
  for (std::uint64_t s = 1; s <= kSeeds; ++s) {
    const RunConfig cm = seeded(base, s, SystemKind::mtm);
    const Workload w = build_workload(cm);
    auto fast_accesses = [&](SystemKind k) {
      const RunConfig cfg = seeded(base, s, k);
      const RunResult r = simulate(cfg, w);
      const std::size_t fastest = Topology::build(cfg.topology).fastest();
      double sum = 0.0;
      for (std::size_t i = 10; i < 30 && i < r.intervals.size(); ++i) {
        sum += static_cast<double>(r.intervals[i].tier_accesses.at(fastest));
      }
      return sum;
    };
    mtm += fast_accesses(SystemKind::mtm);
    autonuma += fast_accesses(SystemKind::autonuma);
    first_touch += fast_accesses(SystemKind::first_touch);
  }
  const bool ok = mtm >= 1.1 * autonuma && mtm >= 1.1 * first_touch;
  return {ok, fmt::format("fastest-tier accesses over 10 seeds: mtm={:.0f} autonuma={:.0f} ({:+.1f}%) first-touch={:.0f} "
                          "({:+.1f}%)",
                          mtm, autonuma, 100.0 * (mtm / autonuma - 1.0), first_touch,
                          100.0 * (mtm / first_touch - 1.0))};
}

// 8. Adaptive against synchronous exposed cost on the three sweeps.
Outcome mechanism_ordering() {
  const auto ro = run_mechanism_bench(MicrobenchKind::read_only, 256, 4);
  const auto hr = run_mechanism_bench(MicrobenchKind::half_read, 256, 4);
  const auto wo = run_mechanism_bench(MicrobenchKind::write_only, 256, 4);
  const bool ok = ro.delta() <= -0.30 && std::abs(wo.delta()) <= 0.10 && hr.delta() > ro.delta() &&
                  hr.delta() < wo.delta();
  return {ok, fmt::format("adaptive vs sync exposed: read_only={:+.1f}% half_read={:+.1f}% write_only={:+.1f}%",
                          100.0 * ro.delta(), 100.0 * hr.delta(), 100.0 * wo.delta())};
}

// Region checks shared by the property loop: sorted, disjoint, single tier,
// samples inside, no boundary inside a huge page.
std::size_t region_violations(const RegionSet& regions, const Memory& memory) {
  std::size_t bad = 0;
  for (std::size_t i = 0; i < regions.size(); ++i) {
    const Region& r = regions[i];
    if (r.len == 0 || r.quota() == 0) ++bad;
    if (i > 0 && regions[i - 1].end() > r.start) ++bad;
    for (PageIndex p : r.samples) {
      if (!r.contains(p)) ++bad;
    }
    for (PageIndex p = r.start; p < r.end(); ++p) {
      if (memory.tier_of(p) != r.tier) {
        ++bad;
        break;
      }
    }
    if (memory.unit_head(r.start) != r.start) ++bad;
    if (r.end() < memory.footprint_pages() && memory.unit_head(r.end()) != r.end()) ++bad;
  }
  return bad;
}

// A two-tier memory with huge pages in some stretches and base pages elsewhere.
Memory mixed_memory(Rng& rng, PageIndex pages, std::uint32_t huge) {
  TopologySpec spec;
  spec.nodes = {0, 1};
  spec.huge_page_pages = huge;
  spec.tiers = {TierDesc{TierId{1}, pages * 4096, {1.0, 2.0}, 0u}, TierDesc{TierId{2}, pages * 4096, {2.0, 1.0}, 1u},
                TierDesc{TierId{3}, pages * 4096, {5.0}, std::nullopt}};
  Memory memory(Topology::build(spec), CostModel{}, pages);
  for (PageIndex p = 0; p < pages; p += huge) {
    const std::size_t tier = uniform_index(rng, 3);
    if (bernoulli(rng, 0.5)) {
      memory.map_huge(p, tier);
    } else {
      for (PageIndex q = p; q < p + huge; ++q) memory.map_page(q, tier);
    }
  }
  return memory;
}

RegionSet windows(const Memory& memory, PageIndex window, Rng& rng) {
  RegionSet regions;
  PageIndex p = 0;
  while (p < memory.footprint_pages()) {
    PageIndex end = std::min(p + window, memory.footprint_pages());
    for (PageIndex q = p + 1; q < end; ++q) {
      if (memory.tier_of(q) != memory.tier_of(p)) {
        end = q;
        break;
      }
    }
    Region r;
    r.id = r.start = p;
    r.len = end - p;
    r.tier = memory.tier_of(p);
    resample(r, 1 + uniform_index(rng, 3), memory, rng);
    regions.push_back(std::move(r));
    p = end;
  }
  return regions;
}

// 9. Structural invariants under randomized restructuring and plan execution.
Outcome structural_invariants() {
  Rng rng(mix_seed(2024, 9));
  std::size_t violations = 0;

  const std::uint32_t huge = 8;
  Memory memory = mixed_memory(rng, 512, huge);
  RegionSet regions = windows(memory, 16, rng);
  const std::uint64_t num_ps = total_quota(regions);
  for (int step = 0; step < 10'000; ++step) {
    for (auto& r : regions) {
      r.profiled = true;
      r.hi_prev = r.hi;
      r.sample_counts.clear();
      for (std::size_t s = 0; s < r.quota(); ++s) r.sample_counts.push_back(static_cast<unsigned>(uniform_index(rng, 4)));
      r.hi = std::accumulate(r.sample_counts.begin(), r.sample_counts.end(), 0.0) / static_cast<double>(r.quota());
    }
    const double tau1 = 0.5 + uniform_unit(rng);
    MergeResult m = merge_pass(regions, tau1, memory, rng, 2.0);
    std::uint64_t saved = m.saved_quota;
    split_pass(regions, 2.0, saved, memory, rng);
    redistribute_quota(regions, saved, 5, memory, rng);
    if (total_quota(regions) != num_ps) ++violations;
    violations += region_violations(regions, memory);
    PageIndex covered = 0;
    for (const auto& r : regions) covered += r.len;
    if (covered != memory.footprint_pages()) ++violations;
  }

  for (int t = 0; t < 1000; ++t) {
    Memory mem = mixed_memory(rng, 256, huge);
    RegionSet rs = windows(mem, huge * (1 + uniform_index(rng, 4)), rng);
    for (auto& r : rs) {
      r.has_history = true;
      r.whi = 3.0 * uniform_unit(rng);
      r.origin_counts = {uniform_index(rng, 5), uniform_index(rng, 5)};
    }
    const std::uint64_t before = mem.placed_bytes();
    try {
      const MigrationPlan plan = plan_migrations(rs, mem, (1 + uniform_index(rng, 128)) * 4096);
      const auto mode = static_cast<MigrationMode>(uniform_index(rng, 3));
      std::vector<AccessEvent> slice;
      for (std::uint64_t i = 0; i < 200; ++i) {
        slice.push_back(AccessEvent{i, uniform_index(rng, 256), bernoulli(rng, 0.5), 0});
      }
      const MigrationReport rep = execute_plan(mem, plan, mode, slice);
      if (rep.error) ++violations;
    } catch (const Error&) {
      ++violations;
    }
    std::uint64_t used = 0;
    for (std::size_t k = 0; k < mem.topology().tier_count(); ++k) {
      used += mem.used_bytes(k);
      if (mem.used_bytes(k) > mem.topology().tier(k).capacity_bytes) ++violations;
    }
    if (used != before || mem.placed_bytes() != before) ++violations;
  }
  return {violations == 0, fmt::format("restructure steps=10000 plan executions=1000 violations={}", violations)};
}

// 10. A region only node 1 touches goes to node 1's fastest tier.
Outcome multi_view() {
  TopologySpec spec;
  spec.nodes = {0, 1};
  spec.huge_page_pages = 8;
  spec.tiers = {TierDesc{TierId{1}, 64 * 4096, {1.0, 2.0}, 0u}, TierDesc{TierId{2}, 64 * 4096, {2.0, 1.0}, 1u},
                TierDesc{TierId{3}, 256 * 4096, {5.0, 5.0}, std::nullopt}};
  CostModel costs;
  costs.scan_cost = 0.1;
  costs.pebs_sample_period = 4;
  Memory memory(Topology::build(spec), costs, 64);
  for (PageIndex p = 0; p < 64; ++p) memory.map_page(p, 2);

  ProfilerConfig pc;
  pc.t_mi = 10'000;
  pc.default_region_pages = 16;
  Profiler profiler(pc, memory);
  std::vector<AccessEvent> trace;
  Rng rng(mix_seed(2024, 10));
  for (std::uint64_t i = 0; i < 3000; ++i) trace.push_back(AccessEvent{i, 16 + uniform_index(rng, 16), false, 1});
  MigrationPlan plan;
  for (std::size_t i = 0; i < 3; ++i) {
    std::span<const AccessEvent> slice(trace.data() + i * 1000, 1000);
    IntervalProfile stats = profiler.profile(memory, slice);
    update_ema(profiler.regions(), 0.5);
    profiler.restructure(memory, stats);
    plan = plan_migrations(profiler.regions(), memory, 64 * 4096);
  }
  const std::size_t node1_fast = memory.topology().view(1).front();
  const std::size_t node0_fast = memory.topology().view(0).front();
  std::size_t to_node1 = 0, to_node0 = 0, promotions = 0;
  for (const auto& m : plan.moves) {
    if (m.reason != MoveReason::promote) continue;
    ++promotions;
    to_node1 += m.dst == node1_fast;
    to_node0 += m.dst == node0_fast;
  }
  bool hot_covered = true;
  for (const auto& m : plan.moves) {
    if (m.reason == MoveReason::promote && (m.start + m.len <= 16 || m.start >= 32)) hot_covered = false;
  }
  const bool ok = promotions > 0 && to_node1 == promotions && to_node0 == 0 && hot_covered;
  return {ok, fmt::format("promotions={} to node1 fastest={} to node0 fastest={}", promotions, to_node1, to_node0)};
}

// 11. Two executions of the criterion-5 experiment write identical CSVs.
Outcome determinism() {
  const RunConfig base = load_config(config_path("gups_4tier.conf"));
  std::vector<std::string> a, b;
  run_quality_experiment(base, &a);
  run_quality_experiment(base, &b);
  std::size_t differing = 0;
  for (std::size_t i = 0; i < a.size(); ++i) differing += a[i] != b[i];
  return {a.size() == b.size() && differing == 0,
          fmt::format("csv files compared={} differing={}", a.size(), differing)};
}

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"1 budget hardness", budget_hardness},
      {"2 sample budget oracle", budget_oracle},
      {"3 EMA closed form", ema_closed_form},
      {"4 histogram selection oracle", histogram_oracle},
      {"5 profiling quality ordering", profiling_quality},
      {"6 phase-change recovery", phase_recovery},
      {"7 fast-tier traffic ordering", fast_tier_traffic},
      {"8 migration mechanism ordering", mechanism_ordering},
      {"9 structural invariants", structural_invariants},
      {"10 multi-view destination", multi_view},
      {"11 determinism", determinism},
  };
  int failed = 0;
  for (const auto& [name, fn] : criteria) {
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, fmt::format("exception: {}", e.what())};
    }
    std::printf("%s criterion %s: %s\n", o.pass ? "PASS" : "FAIL", name.c_str(), o.detail.c_str());
    failed += o.pass ? 0 : 1;
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(criteria.size()) - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
