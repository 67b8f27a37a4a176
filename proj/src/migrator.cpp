#include "tiersim/migrator.hpp"

#include <ostream>
#include <stdexcept>

#include <fmt/format.h>

namespace tiersim {

std::string to_string(MigrationMode mode) {
  switch (mode) {
    case MigrationMode::sync: return "sync";
    case MigrationMode::async: return "async";
    case MigrationMode::adaptive: return "adaptive";
  }
  return "?";
}

std::string to_string(Mechanism mechanism) {
  switch (mechanism) {
    case Mechanism::sync: return "sync";
    case Mechanism::async: return "async";
    case Mechanism::async_fallback: return "async_fallback";
  }
  return "?";
}

MigrationMode migration_mode_from_string(const std::string& s) {
  if (s == "sync") return MigrationMode::sync;
  if (s == "async") return MigrationMode::async;
  if (s == "adaptive") return MigrationMode::adaptive;
  throw ConfigError(fmt::format("unknown migration mode '{}'", s));
}

ConcurrentClock::ConcurrentClock(const Memory& memory, std::span<const AccessEvent> slice) : events_(slice) {
  times_.reserve(slice.size());
  double t = 0.0;
  for (const auto& e : slice) {
    times_.push_back(t);
    t += memory.topology().access_cost(e.node, memory.tier_of(e.vpage));
  }
}

namespace {

double copy_duration(const Memory& memory, std::size_t src, std::size_t dst) {
  const auto& c = memory.costs();
  return c.step_alloc + c.step_copy * c.copy_factor(src, dst);
}

double remap_steps(const Memory& memory) { return memory.costs().step_unmap + memory.costs().step_map; }

MoveRecord base_record(const Memory& memory, PageIndex start, PageIndex len, std::size_t dst) {
  MoveRecord rec;
  rec.region_id = start;
  rec.start = start;
  rec.len = len;
  rec.src = memory.tier_of(start);
  rec.dst = dst;
  return rec;
}

void commit(Memory& memory, MoveRecord& rec) {
  rec.exposed_cost += memory.costs().pte_migration_surcharge;
  memory.remap(rec.start, rec.len, rec.dst);
  memory.ledger().migration_exposed += rec.exposed_cost;
  memory.ledger().migration_background += rec.background_cost;
}

}  // namespace

AsyncWindow analyze_async_window(const Memory& memory, PageIndex start, PageIndex len, std::size_t dst,
                                 const ConcurrentClock& clock, double t0) {
  AsyncWindow w;
  const double d = copy_duration(memory, memory.tier_of(start), dst);
  w.start = t0;
  w.end = t0 + static_cast<double>(len) * d;
  std::vector<bool> dirty(len, false);
  const auto events = clock.events();
  for (std::size_t j = 0; j < events.size(); ++j) {
    const auto& e = events[j];
    if (!e.is_write || e.vpage < start || e.vpage >= start + len) continue;
    const double t = clock.time(j);
    if (t < w.start || t >= w.end) continue;
    const PageIndex head = memory.unit_head(e.vpage);
    if (t < t0 + static_cast<double>(head - start) * d) continue;
    const PageIndex unit = memory.unit_pages(e.vpage);
    w.write_hits += unit;
    if (!dirty[head - start]) {
      dirty[head - start] = true;
      w.dirty_pages += unit;
    }
  }
  return w;
}

MoveRecord migrate_region_sync(Memory& memory, PageIndex start, PageIndex len, std::size_t dst) {
  MoveRecord rec = base_record(memory, start, len, dst);
  rec.mechanism = Mechanism::sync;
  rec.exposed_cost = static_cast<double>(len) * memory.costs().sync_cost_per_page(rec.src, dst);
  commit(memory, rec);
  return rec;
}

MoveRecord migrate_region_async(Memory& memory, PageIndex start, PageIndex len, std::size_t dst,
                                const ConcurrentClock& clock, double t0) {
  MoveRecord rec = base_record(memory, start, len, dst);
  const auto w = analyze_async_window(memory, start, len, dst, clock, t0);
  const auto& c = memory.costs();
  rec.mechanism = Mechanism::async;
  rec.background_cost = static_cast<double>(len) * copy_duration(memory, rec.src, dst);
  rec.exposed_cost = static_cast<double>(len) * remap_steps(memory) +
                     static_cast<double>(w.write_hits) * c.step_copy * c.copy_factor(rec.src, dst);
  rec.recopied_pages = w.write_hits;
  commit(memory, rec);
  return rec;
}

MoveRecord migrate_region_adaptive(Memory& memory, PageIndex start, PageIndex len, std::size_t dst,
                                   const ConcurrentClock& clock, double t0) {
  MoveRecord rec = base_record(memory, start, len, dst);
  const auto w = analyze_async_window(memory, start, len, dst, clock, t0);
  rec.background_cost = static_cast<double>(len) * copy_duration(memory, rec.src, dst);
  const double clean = static_cast<double>(len - w.dirty_pages) * remap_steps(memory);
  if (w.dirty_pages == 0) {
    rec.mechanism = Mechanism::async;
    rec.exposed_cost = clean;
  } else {
    rec.mechanism = Mechanism::async_fallback;
    rec.exposed_cost = clean + static_cast<double>(w.dirty_pages) * memory.costs().sync_cost_per_page(rec.src, dst);
    rec.recopied_pages = w.dirty_pages;
  }
  commit(memory, rec);
  return rec;
}

MoveRecord migrate_huge_page(Memory& memory, PageIndex head, std::size_t dst, MigrationMode mode,
                             const ConcurrentClock& clock, double t0) {
  if (!memory.is_huge(head) || memory.unit_head(head) != head) {
    throw std::invalid_argument(fmt::format("page {} is not the head of a huge page", head));
  }
  const PageIndex len = memory.unit_pages(head);
  switch (mode) {
    case MigrationMode::sync: return migrate_region_sync(memory, head, len, dst);
    case MigrationMode::async: return migrate_region_async(memory, head, len, dst, clock, t0);
    case MigrationMode::adaptive: return migrate_region_adaptive(memory, head, len, dst, clock, t0);
  }
  throw std::logic_error("unknown migration mode");
}

MigrationReport execute_plan(Memory& memory, const MigrationPlan& plan, MigrationMode mode,
                             std::span<const AccessEvent> concurrent_slice) {
  MigrationReport report;
  const ConcurrentClock clock(memory, concurrent_slice);
  double t0 = 0.0;
  for (const auto& m : plan.moves) {
    try {
      if (memory.tier_of(m.start) != m.src) {
        throw std::logic_error(fmt::format("region {} is no longer in its planned source tier", m.region_id));
      }
      const double window = static_cast<double>(m.len) * copy_duration(memory, m.src, m.dst);
      MoveRecord rec;
      switch (mode) {
        case MigrationMode::sync: rec = migrate_region_sync(memory, m.start, m.len, m.dst); break;
        case MigrationMode::async: rec = migrate_region_async(memory, m.start, m.len, m.dst, clock, t0); break;
        case MigrationMode::adaptive: rec = migrate_region_adaptive(memory, m.start, m.len, m.dst, clock, t0); break;
      }
      if (mode != MigrationMode::sync) t0 += window;
      rec.region_id = m.region_id;
      report.exposed_cost += rec.exposed_cost;
      report.background_cost += rec.background_cost;
      report.moves.push_back(rec);
      ++report.completed;
    } catch (const std::exception& e) {
      report.error = e.what();
      break;
    }
  }
  return report;
}

void write_migration_csv_header(std::ostream& out) {
  out << "interval,region_id,src,dst,mechanism,exposed_cost,background_cost,recopied_pages\n";
}

void write_migration_csv(std::ostream& out, std::size_t interval, const MigrationReport& report,
                         const Topology& topology) {
  for (const auto& m : report.moves) {
    out << fmt::format("{},{},{},{},{},{:.6f},{:.6f},{}\n", interval, m.region_id, topology.tier(m.src).id.value,
                       topology.tier(m.dst).id.value, to_string(m.mechanism), m.exposed_cost, m.background_cost,
                       m.recopied_pages);
  }
}

MechanismBench run_mechanism_bench(MicrobenchKind kind, PageIndex array_pages, unsigned passes,
                                   const CostModel& costs) {
  TopologySpec spec;
  spec.nodes = {0};
  const std::uint64_t cap = 2 * array_pages * spec.base_page_bytes;
  spec.tiers.push_back({TierId{1}, cap, {1.0}, 0});
  spec.tiers.push_back({TierId{2}, cap, {2.0}, 0});
  const Topology topo = Topology::build(spec);
  const AccessTrace trace = gen_seq_microbench(kind, array_pages, passes, 0);

  auto fresh = [&]() {
    Memory m(topo, costs, array_pages);
    for (PageIndex p = 0; p < array_pages; ++p) m.map_page(p, 0);
    return m;
  };
  MechanismBench bench;
  {
    Memory m = fresh();
    bench.sync_exposed = migrate_region_sync(m, 0, array_pages, 1).exposed_cost;
  }
  {
    Memory m = fresh();
    const ConcurrentClock clock(m, trace.events);
    const auto rec = migrate_region_adaptive(m, 0, array_pages, 1, clock, 0.0);
    bench.adaptive_exposed = rec.exposed_cost;
    bench.adaptive_background = rec.background_cost;
    bench.mechanism = rec.mechanism;
    bench.recopied_pages = rec.recopied_pages;
  }
  return bench;
}

}  // namespace tiersim
