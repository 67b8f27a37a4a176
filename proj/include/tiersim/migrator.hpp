#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tiersim/memmodel.hpp"
#include "tiersim/policy.hpp"
#include "tiersim/workload.hpp"

namespace tiersim {

enum class MigrationMode { sync, async, adaptive };
enum class Mechanism { sync, async, async_fallback };

std::string to_string(MigrationMode mode);
std::string to_string(Mechanism mechanism);
MigrationMode migration_mode_from_string(const std::string& s);

struct MoveRecord {
  RegionId region_id = 0;
  PageIndex start = 0;
  PageIndex len = 0;
  std::size_t src = 0;
  std::size_t dst = 0;
  Mechanism mechanism = Mechanism::sync;
  double exposed_cost = 0.0;
  double background_cost = 0.0;
  std::uint64_t recopied_pages = 0;
};

struct MigrationReport {
  std::vector<MoveRecord> moves;
  double exposed_cost = 0.0;
  double background_cost = 0.0;
  std::size_t completed = 0;
  std::optional<std::string> error;  // set when a move failed and the rest were abandoned
};

// Timestamps of the application accesses that run while migrations happen.
// Event j starts at the summed access cost of events 0..j-1.
class ConcurrentClock {
 public:
  ConcurrentClock() = default;
  ConcurrentClock(const Memory& memory, std::span<const AccessEvent> slice);

  std::span<const AccessEvent> events() const { return events_; }
  double time(std::size_t j) const { return times_[j]; }
  std::size_t size() const { return events_.size(); }

 private:
  std::span<const AccessEvent> events_;
  std::vector<double> times_;
};

// What an asynchronous copy of [start, start+len) would see if the helper
// starts at t0. Pages are copied in address order; page i starts copying at
// t0 + i*d with d = alloc + copy*factor, and the window closes at t0 + len*d.
// A copy unit (base or huge page) is dirty when written at or after its copy
// start and before the window closes.
struct AsyncWindow {
  double start = 0.0;
  double end = 0.0;
  std::uint64_t dirty_pages = 0;   // base pages inside dirty units
  std::uint64_t write_hits = 0;    // writes to units whose copy already started
};

AsyncWindow analyze_async_window(const Memory& memory, PageIndex start, PageIndex len, std::size_t dst,
                                 const ConcurrentClock& clock, double t0);

// Whole-range synchronous move: alloc + unmap + copy*factor + map per base
// page, plus the page-table surcharge. Charges the exposed ledger.
MoveRecord migrate_region_sync(Memory& memory, PageIndex start, PageIndex len, std::size_t dst);

// Asynchronous copy without fallback: every write to an already-copied unit
// forces another copy of that unit on the critical path.
MoveRecord migrate_region_async(Memory& memory, PageIndex start, PageIndex len, std::size_t dst,
                                const ConcurrentClock& clock, double t0 = 0.0);

// Asynchronous copy that falls back to a synchronous re-copy of the dirtied
// units when a write lands inside the window.
MoveRecord migrate_region_adaptive(Memory& memory, PageIndex start, PageIndex len, std::size_t dst,
                                   const ConcurrentClock& clock, double t0 = 0.0);

// Moves exactly one huge page as a unit.
MoveRecord migrate_huge_page(Memory& memory, PageIndex head, std::size_t dst, MigrationMode mode,
                             const ConcurrentClock& clock, double t0 = 0.0);

// Runs the plan in order with one helper: each asynchronous window starts
// where the previous one ended. Stops at the first failing move.
MigrationReport execute_plan(Memory& memory, const MigrationPlan& plan, MigrationMode mode,
                             std::span<const AccessEvent> concurrent_slice);

void write_migration_csv_header(std::ostream& out);
void write_migration_csv(std::ostream& out, std::size_t interval, const MigrationReport& report,
                         const Topology& topology);

struct MechanismBench {
  double sync_exposed = 0.0;
  double adaptive_exposed = 0.0;
  double adaptive_background = 0.0;
  Mechanism mechanism = Mechanism::sync;
  std::uint64_t recopied_pages = 0;

  // Relative change of adaptive exposed cost against sync; negative is better.
  double delta() const { return (adaptive_exposed - sync_exposed) / sync_exposed; }
};

// Moves one array of `array_pages` from the fast to the slow tier of a
// two-tier machine while the microbenchmark keeps sweeping it.
MechanismBench run_mechanism_bench(MicrobenchKind kind, PageIndex array_pages, unsigned passes,
                                   const CostModel& costs = {});

}  // namespace tiersim
