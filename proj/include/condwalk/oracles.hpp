#pragma once

// Independent routes to a(x), used to validate the recursion table:
//
//  * a_integral: the lattice Fourier representation reduced to one dimension,
//      a(m, n) = (2/pi) int_0^pi (1 - cos(m t) e^{-|n| s(t)}) / sinh s(t) dt,
//    with cosh s = 2 - cos t, evaluated by adaptive Gauss-Kronrod.
//  * a_series: partial sums of sum_k (P_0[S_k = 0] - P_x[S_k = 0]). In the
//    rotated coordinates u = x1 + x2, v = x1 - x2 the walk is a pair of
//    independent +-1 walks, so the return probabilities factor into
//    one-dimensional laws, propagated by dynamic programming.

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <numbers>
#include <vector>

#include "condwalk/error.hpp"
#include "condwalk/lattice.hpp"

namespace condwalk {

/// Potential kernel by one-dimensional quadrature; 0 at the origin.
inline double a_integral(Site x, double tol = 1e-12) {
  if (x.is_origin()) return 0.0;
  const double m = std::abs(x.x1);
  const double n = std::abs(x.x2);
  auto f = [m, n](double t) -> double {
    if (t == 0.0) return n;  // removable singularity
    const double h = std::sin(0.5 * t);
    const double u = 2.0 * h * h;  // 1 - cos t, without cancellation
    const double sinh_s = std::sqrt(u * (u + 2.0));
    const double s = std::log1p(u + sinh_s);
    const double hm = std::sin(0.5 * m * t);
    // 1 - cos(mt) e^{-ns} = 2 sin^2(mt/2) - cos(mt) expm1(-ns)
    const double num = 2.0 * hm * hm - std::cos(m * t) * std::expm1(-n * s);
    return num / sinh_s;
  };
  // Panels keep the number of oscillations per panel bounded.
  const int panels = std::max(4, static_cast<int>(m) / 2 + 1);
  const double w = std::numbers::pi / panels;
  double total = 0.0, err = 0.0;
  for (int p = 0; p < panels; ++p) {
    double e = 0.0;
    total += boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
        f, p * w, (p + 1) * w, 15, tol, &e);
    err += e;
  }
  const double value = 2.0 / std::numbers::pi * total;
  const double abs_err = 2.0 / std::numbers::pi * err;
  if (abs_err > std::max(1e-10, 100 * tol))
    throw ConvergenceError("a_integral did not converge", abs_err);
  return value;
}

struct SeriesResult {
  double partial_sum = 0.0;
  double tail_bound = 0.0;
};

/// Partial sums of the defining series for a batch of sites sharing one
/// dynamic-programming pass. K is rounded up to an even number so that the
/// two parity classes of steps are always paired.
class SeriesOracle {
 public:
  static constexpr std::int64_t kMaxSteps = 4'000'000;

  SeriesOracle(std::int64_t steps, std::int32_t max_offset) {
    if (steps < 1) throw DomainError("a_series requires K >= 1");
    if (steps > kMaxSteps) throw Error("a_series: K exceeds memory budget");
    steps_ = steps + (steps & 1);
    width_ = max_offset;  // |u|, |v| <= |x1| + |x2|
    // law_[k][u] = P[walk at u after k steps], for 0 <= u <= width_.
    law_.assign(static_cast<std::size_t>(steps_) * (width_ + 1), 0.0L);
    std::vector<long double> cur(2 * steps_ + 3, 0.0L), nxt(cur.size(), 0.0L);
    const std::int64_t c = steps_ + 1;
    cur[c] = 1.0L;
    for (std::int64_t k = 0; k < steps_; ++k) {
      for (std::int32_t u = 0; u <= width_ && u <= k; ++u) law(k, u) = cur[c + u];
      const std::int64_t lo = c - k - 1, hi = c + k + 1;
      for (std::int64_t i = lo; i <= hi; ++i)
        nxt[i] = 0.5L * (cur[i - 1] + cur[i + 1]);
      std::swap(cur, nxt);
    }
  }

  std::int64_t steps() const { return steps_; }

  /// Partial sum over k < K with the tail estimated from the K/2 partial sum:
  /// paired terms decay like 1/k^2, so the remainder after K is about
  /// S(K) - S(K/2); the bound doubles that.
  SeriesResult evaluate(Site x) const {
    const std::int32_t u = std::abs(x.x1 + x.x2), v = std::abs(x.x1 - x.x2);
    if (u > width_ || v > width_) throw DomainError("a_series: site outside oracle range");
    long double sum = 0.0L, half = 0.0L;
    const std::int64_t half_steps = (steps_ / 2) + ((steps_ / 2) & 1);
    for (std::int64_t k = 0; k < steps_; ++k) {
      const long double p0 = law(k, 0) * law(k, 0);
      const long double px = law(k, u) * law(k, v);
      sum += p0 - px;
      if (k + 1 == half_steps) half = sum;
    }
    SeriesResult r;
    r.partial_sum = static_cast<double>(sum);
    r.tail_bound = 2.0 * static_cast<double>(std::abs(sum - half)) + 1e-15;
    return r;
  }

 private:
  long double& law(std::int64_t k, std::int32_t u) {
    return law_[static_cast<std::size_t>(k) * (width_ + 1) + u];
  }
  long double law(std::int64_t k, std::int32_t u) const {
    return law_[static_cast<std::size_t>(k) * (width_ + 1) + u];
  }

  std::int64_t steps_ = 0;
  std::int32_t width_ = 0;
  std::vector<long double> law_;
};

inline SeriesResult a_series(Site x, std::int64_t steps) {
  if (x.is_origin()) {
    if (steps < 1) throw DomainError("a_series requires K >= 1");
    return {0.0, 0.0};
  }
  return SeriesOracle(steps, std::abs(x.x1) + std::abs(x.x2)).evaluate(x);
}

}  // namespace condwalk
