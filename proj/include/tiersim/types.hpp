#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace tiersim {

using PageIndex = std::uint64_t;
using NodeId = std::uint32_t;
using RegionId = std::uint64_t;

// Tier identifier as written in configuration files (e.g. 1..4). Positions
// inside a Topology are plain size_t indices.
struct TierId {
  std::uint32_t value = 0;

  constexpr TierId() = default;
  constexpr explicit TierId(std::uint32_t v) : value(v) {}
  friend constexpr auto operator<=>(TierId, TierId) = default;
};

// Error taxonomy. The CLI maps these onto exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class InfeasibleConstraint : public Error {
 public:
  explicit InfeasibleConstraint(const std::string& what)
      : Error("constraint infeasible: " + what) {}
};

class MemoryExhausted : public Error {
 public:
  explicit MemoryExhausted(const std::string& what)
      : Error("memory exhausted: " + what) {}
};

}  // namespace tiersim

template <>
struct std::hash<tiersim::TierId> {
  std::size_t operator()(tiersim::TierId t) const noexcept { return std::hash<std::uint32_t>{}(t.value); }
};
