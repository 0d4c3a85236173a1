#pragma once

// Closed intervals with worst-case endpoint propagation. Brackets carry the
// uncertainty of truncated infinite-horizon quantities; arithmetic never
// collapses to a midpoint.

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <string>

#include "condwalk/error.hpp"

namespace condwalk {

struct Bracket {
  double lower = 0.0;
  double upper = 0.0;
  std::string meaning;

  Bracket() = default;
  Bracket(double lo, double hi, std::string what = {})
      : lower(lo), upper(hi), meaning(std::move(what)) {
    if (!(lo <= hi)) throw DomainError("bracket with lower > upper");
  }
  static Bracket point(double v, std::string what = {}) { return {v, v, std::move(what)}; }
  static Bracket around(double v, double half_width, std::string what = {}) {
    return {v - half_width, v + half_width, std::move(what)};
  }

  double width() const { return upper - lower; }
  double mid() const { return 0.5 * (lower + upper); }
  bool contains(double v) const { return lower <= v && v <= upper; }
  bool overlaps(const Bracket& o) const { return lower <= o.upper && o.lower <= upper; }

  Bracket widened(double by) const { return {lower - by, upper + by, meaning}; }
  /// Intersects with [0,1]; used only where the quantity is a probability.
  Bracket clamped01() const {
    const double lo = std::clamp(lower, 0.0, 1.0), hi = std::clamp(upper, 0.0, 1.0);
    return {lo, std::max(lo, hi), meaning};
  }
  Bracket labeled(std::string what) const { return {lower, upper, std::move(what)}; }
};

inline Bracket operator+(const Bracket& a, const Bracket& b) {
  return {a.lower + b.lower, a.upper + b.upper, a.meaning};
}
inline Bracket operator-(const Bracket& a, const Bracket& b) {
  return {a.lower - b.upper, a.upper - b.lower, a.meaning};
}
inline Bracket operator-(double v, const Bracket& b) { return {v - b.upper, v - b.lower, b.meaning}; }
inline Bracket operator+(const Bracket& b, double v) { return {b.lower + v, b.upper + v, b.meaning}; }

inline Bracket operator*(const Bracket& a, const Bracket& b) {
  const double p[] = {a.lower * b.lower, a.lower * b.upper, a.upper * b.lower, a.upper * b.upper};
  return {*std::min_element(p, p + 4), *std::max_element(p, p + 4), a.meaning};
}
inline Bracket operator*(double v, const Bracket& b) {
  return v >= 0 ? Bracket{v * b.lower, v * b.upper, b.meaning}
                : Bracket{v * b.upper, v * b.lower, b.meaning};
}

/// Quotient of intervals; the divisor must exclude zero.
inline Bracket operator/(const Bracket& a, const Bracket& b) {
  if (b.lower <= 0.0 && b.upper >= 0.0) throw DomainError("bracket division by an interval containing 0");
  return a * Bracket{1.0 / b.upper, 1.0 / b.lower};
}

inline Bracket hull(const Bracket& a, const Bracket& b) {
  return {std::min(a.lower, b.lower), std::max(a.upper, b.upper), a.meaning};
}

inline std::ostream& operator<<(std::ostream& os, const Bracket& b) {
  return os << '[' << b.lower << ", " << b.upper << ']';
}

}  // namespace condwalk
