#include "tiersim/workload.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include <fmt/format.h>

#include "tiersim/rng.hpp"

namespace tiersim {

std::span<const AccessEvent> AccessTrace::slice(std::size_t interval, std::uint64_t per_interval) const {
  const std::size_t begin = std::min(events.size(), static_cast<std::size_t>(interval * per_interval));
  const std::size_t end = std::min(events.size(), static_cast<std::size_t>(begin + per_interval));
  return std::span<const AccessEvent>(events).subspan(begin, end - begin);
}

std::size_t AccessTrace::interval_count(std::uint64_t per_interval) const {
  if (per_interval == 0) return 0;
  return static_cast<std::size_t>((events.size() + per_interval - 1) / per_interval);
}

HotOracle HotOracle::build(const AccessTrace& trace, std::uint64_t accesses_per_interval) {
  if (accesses_per_interval == 0) throw std::invalid_argument("accesses_per_interval must be positive");
  HotOracle oracle;
  oracle.per_interval_ = accesses_per_interval;
  std::vector<std::uint32_t> counts(trace.footprint_pages, 0);
  const std::size_t n = trace.interval_count(accesses_per_interval);
  oracle.intervals_.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto slice = trace.slice(i, accesses_per_interval);
    for (const auto& e : slice) ++counts.at(e.vpage);
    auto& hot = oracle.intervals_[i];
    for (const auto& e : slice) {
      if (counts[e.vpage] >= kOracleHotThreshold) hot.push_back(e.vpage);
      counts[e.vpage] = 0;
    }
    std::sort(hot.begin(), hot.end());
  }
  return oracle;
}

const std::vector<PageIndex>& HotOracle::hot_pages(std::size_t interval) const {
  if (interval >= intervals_.size()) {
    throw std::out_of_range(fmt::format("oracle has no interval {} ({} intervals)", interval, intervals_.size()));
  }
  return intervals_[interval];
}

const std::vector<PageIndex>& oracle_hot_pages(const HotOracle& oracle, std::size_t interval) {
  return oracle.hot_pages(interval);
}

namespace {

void validate(const GupsParams& p) {
  if (p.footprint_pages == 0) throw std::invalid_argument("gups footprint must be nonzero");
  if (p.accesses == 0) throw std::invalid_argument("gups needs at least one access");
  if (!(p.hotset_fraction > 0.0 && p.hotset_fraction < 1.0)) {
    throw std::invalid_argument("gups hotset_fraction must lie in (0, 1)");
  }
  if (!(p.hot_access_fraction > 0.0 && p.hot_access_fraction <= 1.0)) {
    throw std::invalid_argument("gups hot_access_fraction must lie in (0, 1]");
  }
  if (p.write_fraction < 0.0 || p.write_fraction > 1.0) throw std::invalid_argument("gups write_fraction must lie in [0, 1]");
  if (p.nodes.empty() && !p.pinned_node) throw std::invalid_argument("gups needs at least one accessor node");
}

PageIndex hotset_size(const GupsParams& p) {
  const auto n = static_cast<PageIndex>(std::llround(p.hotset_fraction * static_cast<double>(p.footprint_pages)));
  return std::clamp<PageIndex>(n, 1, p.footprint_pages);
}

std::vector<PageIndex> draw_hotset(const GupsParams& p, Rng& rng) {
  const PageIndex size = hotset_size(p);
  const PageIndex start = uniform_index(rng, p.footprint_pages - size + 1);
  std::vector<PageIndex> hot(size);
  for (PageIndex i = 0; i < size; ++i) hot[i] = start + i;
  return hot;
}

// Appends one GUPS phase to `out`.
void append_gups(const GupsParams& p, Rng& rng, Workload& out) {
  validate(p);
  auto hot = draw_hotset(p, rng);
  out.hotsets.push_back(hot);
  out.hotset_starts.push_back(out.trace.events.size());
  std::uint64_t seq = out.trace.events.empty() ? 0 : out.trace.events.back().seq + 1;
  for (std::uint64_t i = 0; i < p.accesses; ++i) {
    if (p.rehash_hotset_every != 0 && i != 0 && i % p.rehash_hotset_every == 0) {
      hot = draw_hotset(p, rng);
      out.hotsets.push_back(hot);
      out.hotset_starts.push_back(out.trace.events.size());
    }
    AccessEvent e;
    e.seq = seq++;
    e.vpage = bernoulli(rng, p.hot_access_fraction) ? hot[uniform_index(rng, hot.size())] : uniform_index(rng, p.footprint_pages);
    e.is_write = bernoulli(rng, p.write_fraction);
    e.node = p.pinned_node ? *p.pinned_node : p.nodes[i % p.nodes.size()];
    out.trace.events.push_back(e);
  }
  out.trace.footprint_pages = std::max(out.trace.footprint_pages, p.footprint_pages);
}

}  // namespace

Workload gen_gups(const GupsParams& params, std::uint64_t accesses_per_interval) {
  Workload w;
  Rng rng(mix_seed(params.seed, 0x67757073));
  append_gups(params, rng, w);
  w.oracle = HotOracle::build(w.trace, accesses_per_interval);
  return w;
}

Workload gen_phase_change(const std::vector<GupsParams>& phases, std::uint64_t seed,
                          std::uint64_t accesses_per_interval) {
  if (phases.empty()) throw std::invalid_argument("phase-change workload needs phases");
  if (phases.size() < 2) throw std::invalid_argument("phase-change workload needs at least 2 phases");
  Workload w;
  for (const auto& phase : phases) {
    Rng rng(mix_seed(seed, phase.seed));
    append_gups(phase, rng, w);
  }
  w.oracle = HotOracle::build(w.trace, accesses_per_interval);
  return w;
}

AccessTrace gen_seq_microbench(MicrobenchKind kind, PageIndex array_pages, unsigned passes, NodeId node) {
  if (array_pages == 0) throw std::invalid_argument("microbenchmark array must have at least one page");
  AccessTrace t;
  t.footprint_pages = array_pages;
  std::uint64_t seq = 0;
  for (unsigned pass = 0; pass < passes; ++pass) {
    for (PageIndex p = 0; p < array_pages; ++p) {
      switch (kind) {
        case MicrobenchKind::read_only:
          t.events.push_back({seq++, p, false, node});
          break;
        case MicrobenchKind::half_read:
          t.events.push_back({seq++, p, false, node});
          t.events.push_back({seq++, p, true, node});
          break;
        case MicrobenchKind::write_only:
          t.events.push_back({seq++, p, true, node});
          break;
      }
    }
  }
  return t;
}

void write_trace_csv(std::ostream& out, const AccessTrace& trace) {
  out << "seq,vpage,rw,node\n";
  for (const auto& e : trace.events) {
    out << e.seq << ',' << e.vpage << ',' << (e.is_write ? 'W' : 'R') << ',' << e.node << '\n';
  }
}

AccessTrace read_trace_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "seq,vpage,rw,node") {
    throw ConfigError("trace file must start with header 'seq,vpage,rw,node'");
  }
  AccessTrace t;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::istringstream ss(line);
    AccessEvent e;
    char c1 = 0, c2 = 0, c3 = 0, rw = 0;
    if (!(ss >> e.seq >> c1 >> e.vpage >> c2 >> rw >> c3 >> e.node) || c1 != ',' || c2 != ',' || c3 != ',' ||
        (rw != 'R' && rw != 'W')) {
      throw ConfigError(fmt::format("trace line {}: malformed record '{}'", lineno, line));
    }
    e.is_write = rw == 'W';
    if (!t.events.empty() && e.seq <= t.events.back().seq) {
      throw ConfigError(fmt::format("trace line {}: seq must be strictly increasing", lineno));
    }
    t.footprint_pages = std::max(t.footprint_pages, e.vpage + 1);
    t.events.push_back(e);
  }
  return t;
}

std::string to_string(MicrobenchKind kind) {
  switch (kind) {
    case MicrobenchKind::read_only: return "read_only";
    case MicrobenchKind::half_read: return "half_read";
    case MicrobenchKind::write_only: return "write_only";
  }
  return "?";
}

MicrobenchKind microbench_kind_from_string(const std::string& s) {
  if (s == "read_only") return MicrobenchKind::read_only;
  if (s == "half_read") return MicrobenchKind::half_read;
  if (s == "write_only") return MicrobenchKind::write_only;
  throw ConfigError(fmt::format("unknown microbenchmark kind '{}'", s));
}

}  // namespace tiersim
