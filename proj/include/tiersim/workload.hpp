#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tiersim/memmodel.hpp"

namespace tiersim {

struct AccessTrace {
  PageIndex footprint_pages = 0;
  std::vector<AccessEvent> events;

  // Events [i*per_interval, (i+1)*per_interval), clipped to the trace.
  std::span<const AccessEvent> slice(std::size_t interval, std::uint64_t per_interval) const;
  std::size_t interval_count(std::uint64_t per_interval) const;
};

// Ground truth: the pages touched at least twice in each interval.
class HotOracle {
 public:
  HotOracle() = default;
  static HotOracle build(const AccessTrace& trace, std::uint64_t accesses_per_interval);

  std::size_t interval_count() const { return intervals_.size(); }
  std::uint64_t accesses_per_interval() const { return per_interval_; }
  const std::vector<PageIndex>& hot_pages(std::size_t interval) const;

 private:
  std::uint64_t per_interval_ = 0;
  std::vector<std::vector<PageIndex>> intervals_;
};

inline constexpr unsigned kOracleHotThreshold = 2;

struct GupsParams {
  PageIndex footprint_pages = 1024;
  double hotset_fraction = 0.2;
  double hot_access_fraction = 0.8;
  std::uint64_t accesses = 100000;
  std::vector<NodeId> nodes{0};
  std::optional<NodeId> pinned_node;
  double write_fraction = 0.5;
  // Draw a fresh hotset after this many accesses; 0 keeps one hotset.
  std::uint64_t rehash_hotset_every = 0;
  std::uint64_t seed = 1;
};

struct Workload {
  AccessTrace trace;
  HotOracle oracle;
  // Hotsets in the order they became active, with the first event index of each.
  std::vector<std::vector<PageIndex>> hotsets;
  std::vector<std::uint64_t> hotset_starts;
};

// The hotset is one contiguous block of round(hotset_fraction * footprint)
// pages at a seeded random offset.
Workload gen_gups(const GupsParams& params, std::uint64_t accesses_per_interval);

// Concatenates phases; each phase draws its hotset from a stream keyed by
// (seed, phase.seed), so two phases with equal seeds produce equal blocks.
Workload gen_phase_change(const std::vector<GupsParams>& phases, std::uint64_t seed,
                          std::uint64_t accesses_per_interval);

enum class MicrobenchKind { read_only, half_read, write_only };

AccessTrace gen_seq_microbench(MicrobenchKind kind, PageIndex array_pages, unsigned passes, NodeId node);

const std::vector<PageIndex>& oracle_hot_pages(const HotOracle& oracle, std::size_t interval);

void write_trace_csv(std::ostream& out, const AccessTrace& trace);
AccessTrace read_trace_csv(std::istream& in);

std::string to_string(MicrobenchKind kind);
MicrobenchKind microbench_kind_from_string(const std::string& s);

}  // namespace tiersim
