#include <doctest.h>

#include "helpers.hpp"
#include "tiersim/migrator.hpp"

using namespace tiersim;
using tiersim::test::linear_spec;
using tiersim::test::memory_in;

namespace {

// Events at times 0, 1, 2, ... (every page sits in a cost-1 tier).
std::vector<AccessEvent> window_slice() {
  std::vector<AccessEvent> s;
  auto add = [&](PageIndex p, bool w) { s.push_back({s.size(), p, w, 0}); };
  add(0, true);   // t=0, page 0 copy starts at 0: dirty
  add(3, true);   // t=1, page 3 copy starts at 9: clean
  for (int i = 0; i < 5; ++i) add(1, false);
  add(2, true);   // t=7, page 2 copy started at 6: dirty
  add(2, true);   // t=8, same unit again
  for (int i = 0; i < 3; ++i) add(1, false);
  add(1, true);   // t=12, window closed
  return s;
}

}  // namespace

TEST_CASE("synchronous moves cost alloc + unmap + copy*factor + map per page") {
  Memory m = memory_in(linear_spec({16, 16}), 4, 0);
  const auto rec = migrate_region_sync(m, 0, 4, 1);
  CHECK(rec.exposed_cost == doctest::Approx(4 * 5.0));
  CHECK(rec.mechanism == Mechanism::sync);
  CHECK(m.tier_of(3) == 1);
  CHECK(m.ledger().migration_exposed == doctest::Approx(20.0));

  CostModel c;
  c.inter_tier_factor = {{1.0, 1.5}, {1.5, 1.0}};
  Memory big = memory_in(linear_spec({1024, 1024}), 512, 0, c);
  CHECK(migrate_region_sync(big, 0, 512, 1).exposed_cost == doctest::Approx(3072.0));
}

TEST_CASE("the async window marks units written after their copy started") {
  const Memory m = memory_in(linear_spec({16, 16}), 4, 0);
  const auto slice = window_slice();
  const ConcurrentClock clock(m, slice);
  CHECK(clock.time(7) == doctest::Approx(7.0));
  const auto w = analyze_async_window(m, 0, 4, 1, clock, 0.0);
  CHECK(w.end == doctest::Approx(12.0));
  CHECK(w.dirty_pages == 2);
  CHECK(w.write_hits == 3);
  const auto late = analyze_async_window(m, 0, 4, 1, clock, 100.0);
  CHECK(late.dirty_pages == 0);
}

TEST_CASE("adaptive moves fall back to a synchronous copy of dirtied pages") {
  Memory m = memory_in(linear_spec({16, 16}), 4, 0);
  const auto slice = window_slice();
  const ConcurrentClock clock(m, slice);
  const auto rec = migrate_region_adaptive(m, 0, 4, 1, clock);
  CHECK(rec.mechanism == Mechanism::async_fallback);
  CHECK(rec.recopied_pages == 2);
  CHECK(rec.exposed_cost == doctest::Approx(2 * 2.0 + 2 * 5.0));
  CHECK(rec.background_cost == doctest::Approx(12.0));
  CHECK(m.ledger().migration_background == doctest::Approx(12.0));
}

TEST_CASE("async moves re-copy every late write on the critical path") {
  Memory m = memory_in(linear_spec({16, 16}), 4, 0);
  const auto slice = window_slice();
  const ConcurrentClock clock(m, slice);
  const auto rec = migrate_region_async(m, 0, 4, 1, clock);
  CHECK(rec.mechanism == Mechanism::async);
  CHECK(rec.recopied_pages == 3);
  CHECK(rec.exposed_cost == doctest::Approx(4 * 2.0 + 3 * 2.0));
}

TEST_CASE("a clean adaptive move only pays the remap") {
  Memory m = memory_in(linear_spec({16, 16}), 4, 0);
  const ConcurrentClock clock(m, {});
  const auto rec = migrate_region_adaptive(m, 0, 4, 1, clock);
  CHECK(rec.mechanism == Mechanism::async);
  CHECK(rec.exposed_cost == doctest::Approx(8.0));
}

TEST_CASE("huge pages move as a unit and must be addressed by their head") {
  Memory m(Topology::build(linear_spec({16, 16})), CostModel{}, 16);
  m.map_huge(0, 0);
  m.map_huge(8, 0);
  const ConcurrentClock clock(m, {});
  CHECK_THROWS_AS(migrate_huge_page(m, 3, 1, MigrationMode::sync, clock), std::invalid_argument);
  const auto rec = migrate_huge_page(m, 8, 1, MigrationMode::adaptive, clock);
  CHECK(rec.len == 8);
  CHECK(m.tier_of(15) == 1);
  CHECK(m.tier_of(0) == 0);

  Memory base = memory_in(linear_spec({16, 16}), 8, 0);
  CHECK_THROWS_AS(migrate_huge_page(base, 0, 1, MigrationMode::sync, clock), std::invalid_argument);
}

TEST_CASE("a write to a huge page dirties all of its base pages") {
  Memory m(Topology::build(linear_spec({16, 16})), CostModel{}, 8);
  m.map_huge(0, 0);
  const std::vector<AccessEvent> slice = {{0, 5, true, 0}};
  const ConcurrentClock clock(m, slice);
  const auto w = analyze_async_window(m, 0, 8, 1, clock, 0.0);
  CHECK(w.dirty_pages == 8);
}

TEST_CASE("plans run in order with back-to-back async windows") {
  Memory m = memory_in(linear_spec({16, 16}), 8, 0);
  MigrationPlan plan;
  plan.moves.push_back({0, 0, 4, 0, 1, MoveReason::demote, 4 * 4096});
  plan.moves.push_back({4, 4, 4, 0, 1, MoveReason::demote, 4 * 4096});
  // Page 4's copy starts at 12, when the second window opens.
  std::vector<AccessEvent> slice;
  for (std::uint64_t i = 0; i < 13; ++i) slice.push_back({i, 4, i == 12, 0});
  const auto rep = execute_plan(m, plan, MigrationMode::adaptive, slice);
  CHECK(rep.completed == 2);
  CHECK_FALSE(rep.error);
  CHECK(rep.moves[0].mechanism == Mechanism::async);
  CHECK(rep.moves[1].mechanism == Mechanism::async_fallback);
  CHECK(rep.exposed_cost == doctest::Approx(8.0 + 3 * 2.0 + 5.0));
}

TEST_CASE("a failing move stops the plan and is reported") {
  Memory m = memory_in(linear_spec({16, 4}), 8, 0);
  MigrationPlan plan;
  plan.moves.push_back({0, 0, 4, 0, 1, MoveReason::demote, 4 * 4096});
  plan.moves.push_back({4, 4, 4, 0, 1, MoveReason::demote, 4 * 4096});
  plan.moves.push_back({0, 0, 4, 0, 1, MoveReason::demote, 4 * 4096});
  const auto rep = execute_plan(m, plan, MigrationMode::sync, {});
  CHECK(rep.completed == 1);
  REQUIRE(rep.error);
  CHECK(rep.error->find("memory exhausted") != std::string::npos);
  CHECK(m.used_bytes(1) == 4 * 4096);
  CHECK(m.placed_bytes() == 8 * 4096);
}

TEST_CASE("migration modes parse from strings") {
  CHECK(migration_mode_from_string("adaptive") == MigrationMode::adaptive);
  CHECK(to_string(Mechanism::async_fallback) == "async_fallback");
  CHECK_THROWS_AS(migration_mode_from_string("fast"), ConfigError);
}

TEST_CASE("the mechanism bench favours adaptive moves for read-heavy sweeps") {
  const auto ro = run_mechanism_bench(MicrobenchKind::read_only, 64, 2);
  const auto wo = run_mechanism_bench(MicrobenchKind::write_only, 64, 2);
  CHECK(ro.delta() == doctest::Approx(-0.6));
  CHECK(ro.mechanism == Mechanism::async);
  CHECK(wo.delta() <= 0.0);
  CHECK(wo.delta() > ro.delta());
}
