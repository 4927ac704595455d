#pragma once

#include <cmath>
#include <compare>
#include <cstdint>

#include "mcsim/error.hpp"

namespace mcsim {

// The simulation clock is integer nanoseconds. Durations derived from float
// arithmetic (size/rate, scenario fields in ms) are rounded to the nearest
// nanosecond, ties up.

struct Duration {
  std::int64_t ns{0};
  constexpr auto operator<=>(const Duration&) const = default;
};

struct SimTime {
  std::uint64_t ns{0};
  constexpr auto operator<=>(const SimTime&) const = default;
};

constexpr Duration nanoseconds(std::int64_t v) { return Duration{v}; }
constexpr Duration microseconds(std::int64_t v) { return Duration{v * 1'000}; }
constexpr Duration milliseconds(std::int64_t v) { return Duration{v * 1'000'000}; }
constexpr Duration seconds(std::int64_t v) { return Duration{v * 1'000'000'000}; }

constexpr Duration operator+(Duration a, Duration b) { return Duration{a.ns + b.ns}; }
constexpr Duration operator-(Duration a, Duration b) { return Duration{a.ns - b.ns}; }
constexpr Duration operator*(Duration a, std::int64_t k) { return Duration{a.ns * k}; }

constexpr SimTime operator+(SimTime t, Duration d) {
  return SimTime{t.ns + static_cast<std::uint64_t>(d.ns)};
}

// Defined only when t >= u; callers guard with the clock monotonicity invariant.
constexpr Duration operator-(SimTime t, SimTime u) {
  return Duration{static_cast<std::int64_t>(t.ns - u.ns)};
}

inline double to_seconds(Duration d) { return static_cast<double>(d.ns) * 1e-9; }

// Exact integer (units * 1e9 / per_second), rounded half up. Used for
// serialization (bits/bps) and propagation (meters / c) so repeated runs
// never accumulate float error.
inline Duration ratio_to_ns(std::uint64_t units, std::uint64_t per_second) {
  if (per_second == 0) throw ValidationError("ratio_to_ns: zero rate");
  const unsigned __int128 num =
      static_cast<unsigned __int128>(units) * 1'000'000'000u;
  const auto q = static_cast<std::uint64_t>(num / per_second);
  const auto r = static_cast<std::uint64_t>(num % per_second);
  return Duration{static_cast<std::int64_t>(2 * r >= per_second ? q + 1 : q)};
}

// Scenario fields arrive as milliseconds (double); same rounding rule.
inline Duration duration_from_ms(double ms) {
  if (!(ms >= 0.0) || !std::isfinite(ms)) {
    throw ValidationError("duration_from_ms: negative or non-finite value");
  }
  return Duration{static_cast<std::int64_t>(std::floor(ms * 1e6 + 0.5))};
}

}  // namespace mcsim
