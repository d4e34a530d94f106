#pragma once

#include <cassert>
#include <cmath>
#include <compare>
#include <cstdint>
#include <string>

namespace nanosim {

// Virtual clock value in fixed-point ticks. One tick is 0.1 time units, so
// the 0.5-wide airtime slots and 100-unit beacon intervals are exact and
// same-instant ties can be resolved without floating-point drift.
struct SimTime {
  std::int64_t ticks = 0;

  constexpr auto operator<=>(const SimTime&) const = default;

  constexpr SimTime operator+(SimTime o) const { return SimTime{ticks + o.ticks}; }
  constexpr SimTime operator-(SimTime o) const { return SimTime{ticks - o.ticks}; }
  SimTime& operator+=(SimTime o) {
    ticks += o.ticks;
    return *this;
  }

  constexpr SimTime operator*(std::int64_t n) const { return SimTime{ticks * n}; }

  static SimTime from_units(double units) {
    return SimTime{static_cast<std::int64_t>(std::llround(units * 10.0))};
  }

  double units() const { return static_cast<double>(ticks) / 10.0; }

  // Decimal rendering with exactly one fractional digit: "0.0", "100.5".
  std::string str() const {
    std::int64_t t = ticks;
    std::string sign;
    if (t < 0) {
      sign = "-";
      t = -t;
    }
    return sign + std::to_string(t / 10) + "." + std::to_string(t % 10);
  }
};

inline constexpr SimTime kTimeZero{0};

}  // namespace nanosim
