#pragma once

// Potential kernel a(x) of the two-dimensional simple random walk.
//
// The exact table covers the octant 0 <= x2 <= x1 <= N and is filled by the
// harmonicity recursion marching in x1:
//
//   a(x1+1, x2) = 4 a(x1, x2) - a(x1-1, x2) - a(x1, x2+1) - a(x1, x2-1),
//
// closed on the octant edge by symmetry, seeded with a(0,0) = 0, a(1,0) = 1
// and the diagonal a(n,n) = (4/pi) * sum_{k=1..n} 1/(2k-1). The march
// amplifies rounding by up to (3 + 2 sqrt 2) per column, so it runs in MPFR
// with about 2.6 bits per column of headroom and rounds to double on store.

#include <mpfr.h>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <mutex>
#include <numbers>
#include <utility>
#include <vector>

#include "condwalk/error.hpp"
#include "condwalk/lattice.hpp"

namespace condwalk {

/// Constants of the large-|x| expansion a(x) = (2/pi) ln|x| + gamma' + O(|x|^-2).
struct AsymptoticParams {
  static constexpr double gamma = 0.57721566490153286060651209008240243;
  static constexpr double ln8 = 2.07944154167983592825169636437452970;
  static constexpr double gamma_prime = (2.0 * gamma + ln8) / std::numbers::pi;
};

/// (2/pi) ln r + gamma', the potential kernel "of a real argument" r >= 1.
inline double a_real(double r) {
  if (!(r >= 1.0)) throw DomainError("a_real requires r >= 1");
  return 2.0 / std::numbers::pi * std::log(r) + AsymptoticParams::gamma_prime;
}

/// Leading asymptotics of a(x); undefined at the origin.
inline double a_asym(Site x) {
  if (x.is_origin()) throw DomainError("log singularity");
  // ln|x| = 0.5 ln |x|^2 avoids the extra rounding of sqrt.
  return 1.0 / std::numbers::pi * std::log(static_cast<double>(x.norm2())) +
         AsymptoticParams::gamma_prime;
}

namespace detail {

// Minimal RAII holder for an mpfr_t.
class Mpfr {
 public:
  explicit Mpfr(mpfr_prec_t bits) { mpfr_init2(v_, bits); mpfr_set_zero(v_, 1); }
  Mpfr(const Mpfr& o) { mpfr_init2(v_, mpfr_get_prec(o.v_)); mpfr_set(v_, o.v_, MPFR_RNDN); }
  Mpfr& operator=(const Mpfr& o) { mpfr_set(v_, o.v_, MPFR_RNDN); return *this; }
  ~Mpfr() { mpfr_clear(v_); }
  mpfr_ptr get() { return v_; }
  mpfr_srcptr get() const { return v_; }
  double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }

 private:
  mpfr_t v_;
};

}  // namespace detail

/// Exact potential-kernel values on the octant window of radius N.
class KernelTable {
 public:
  static constexpr std::int32_t kDefaultRadius = 256;

  /// Bits of working precision used for a window of radius n.
  static mpfr_prec_t working_precision(std::int32_t n) {
    return static_cast<mpfr_prec_t>(2.6 * n) + 128;
  }

  explicit KernelTable(std::int32_t radius = kDefaultRadius)
      : KernelTable(radius, working_precision(radius)) {}

  KernelTable(std::int32_t radius, mpfr_prec_t bits) : radius_(radius), bits_(bits) {
    if (radius < 1) throw DomainError("kernel window radius must be >= 1");
    build();
  }

  std::int32_t radius() const { return radius_; }
  mpfr_prec_t precision_bits() const { return bits_; }

  bool in_window(Site x) const { return x.norm_inf() <= radius_; }

  /// a(x) from the table; throws outside the window.
  double at(Site x) const {
    if (!in_window(x)) throw DomainError("outside exact window");
    return octant(std::abs(x.x1), std::abs(x.x2));
  }

  /// Octant lookup with 0 <= i, j <= N in any order.
  double octant(std::int32_t i, std::int32_t j) const {
    if (i < j) std::swap(i, j);
    return values_[index(i, j)];
  }

  std::size_t size() const { return values_.size(); }

  /// Max |a(x) - (1/4) sum a(y)| over non-origin sites whose neighbours are
  /// all inside the window.
  double max_harmonicity_residual() const {
    double worst = 0.0;
    for (std::int32_t i = 1; i < radius_; ++i) {
      for (std::int32_t j = 0; j <= i; ++j) {
        const Site x{i, j};
        double s = 0.0;
        for (Site y : neighbours(x)) s += at(y);
        worst = std::max(worst, std::abs(at(x) - 0.25 * s));
      }
    }
    return worst;
  }

 private:
  static std::size_t index(std::int32_t i, std::int32_t j) {
    return static_cast<std::size_t>(i) * (i + 1) / 2 + j;
  }

  void build() {
    using detail::Mpfr;
    const std::int32_t n = radius_;
    values_.assign(index(n, n) + 1, 0.0);

    Mpfr four_over_pi(bits_), diag(bits_), term(bits_);
    mpfr_const_pi(four_over_pi.get(), MPFR_RNDN);
    mpfr_ui_div(four_over_pi.get(), 4, four_over_pi.get(), MPFR_RNDN);

    // Columns x1-1, x1, x1+1 of the octant, each of length x1+2.
    std::vector<Mpfr> left(n + 2, Mpfr(bits_)), mid(n + 2, Mpfr(bits_)),
        right(n + 2, Mpfr(bits_));

    // Column 1: a(1,0) = 1, a(1,1) = 4/pi. Column 0 is a(0,0) = 0.
    mpfr_set_ui(mid[0].get(), 1, MPFR_RNDN);
    mpfr_set(diag.get(), four_over_pi.get(), MPFR_RNDN);  // (4/pi) * 1
    mpfr_set(mid[1].get(), diag.get(), MPFR_RNDN);
    values_[index(1, 0)] = 1.0;
    values_[index(1, 1)] = mid[1].to_double();

    Mpfr acc(bits_);
    for (std::int32_t x1 = 1; x1 < n; ++x1) {
      for (std::int32_t x2 = 0; x2 < x1; ++x2) {
        mpfr_mul_ui(acc.get(), mid[x2].get(), 4, MPFR_RNDN);
        mpfr_sub(acc.get(), acc.get(), left[x2].get(), MPFR_RNDN);
        mpfr_sub(acc.get(), acc.get(), mid[x2 + 1].get(), MPFR_RNDN);
        mpfr_sub(acc.get(), acc.get(), mid[x2 == 0 ? 1 : x2 - 1].get(), MPFR_RNDN);
        mpfr_set(right[x2].get(), acc.get(), MPFR_RNDN);
      }
      // Harmonicity on the diagonal: 4a(k,k) = 2a(k+1,k) + 2a(k,k-1).
      mpfr_mul_ui(acc.get(), mid[x1].get(), 2, MPFR_RNDN);
      mpfr_sub(right[x1].get(), acc.get(), mid[x1 - 1].get(), MPFR_RNDN);
      // a(k+1,k+1) = a(k,k) + (4/pi)/(2k+1).
      mpfr_div_ui(term.get(), four_over_pi.get(), 2 * static_cast<unsigned long>(x1) + 1,
                  MPFR_RNDN);
      mpfr_add(diag.get(), diag.get(), term.get(), MPFR_RNDN);
      mpfr_set(right[x1 + 1].get(), diag.get(), MPFR_RNDN);

      for (std::int32_t x2 = 0; x2 <= x1 + 1; ++x2)
        values_[index(x1 + 1, x2)] = right[x2].to_double();
      std::swap(left, mid);
      std::swap(mid, right);
    }
  }

  std::int32_t radius_;
  mpfr_prec_t bits_;
  std::vector<double> values_;
};

/// max over sites with rmin <= |x| <= rmax inside the window of
/// |x|^2 * |a_exact(x) - a_asym(x)|.
inline double asymptotic_error_constant(const KernelTable& t, double rmin, double rmax) {
  double worst = 0.0;
  const auto hi = static_cast<std::int32_t>(std::min<double>(rmax, t.radius()));
  for (std::int32_t i = 1; i <= hi; ++i) {
    for (std::int32_t j = 0; j <= i; ++j) {
      const Site x{i, j};
      const double r = x.norm();
      if (r < rmin || r > rmax) continue;
      const double d = std::abs(t.octant(i, j) - a_asym(x));
      worst = std::max(worst, static_cast<double>(x.norm2()) * d);
    }
  }
  return worst;
}

/// Hybrid evaluator: the exact table inside its window, the asymptotic
/// expansion outside. Immutable and safe to share between threads.
class PotentialKernel {
 public:
  explicit PotentialKernel(std::int32_t radius = KernelTable::kDefaultRadius)
      : table_(radius) {
    const double n = table_.radius();
    tail_constant_ = n >= 8 ? asymptotic_error_constant(table_, n / 2.0, n) : 0.1;
  }

  const KernelTable& table() const { return table_; }
  std::int32_t window() const { return table_.radius(); }

  double exact(Site x) const { return table_.at(x); }

  double operator()(Site x) const {
    const std::int32_t i = x.x1 < 0 ? -x.x1 : x.x1;
    const std::int32_t j = x.x2 < 0 ? -x.x2 : x.x2;
    if (i <= table_.radius() && j <= table_.radius()) return table_.octant(i, j);
    return a_asym(x);
  }

  /// Bound on |a_eval(x) - a(x)|: roundoff inside the window, the fitted
  /// O(|x|^-2) term (with a factor 2 margin) outside.
  double error_bound(Site x) const {
    if (table_.in_window(x)) return 1e-14;
    return 2.0 * tail_constant_ / static_cast<double>(x.norm2());
  }

  /// Fitted constant of the O(|x|^-2) term over the outer half of the window.
  double tail_constant() const { return tail_constant_; }

 private:
  KernelTable table_;
  double tail_constant_;
};

/// Process-wide kernel whose exact window is at least min_window (and at
/// least the default). Rebuilt larger on demand; older instances stay valid.
inline std::shared_ptr<const PotentialKernel> shared_kernel(
    std::int32_t min_window = KernelTable::kDefaultRadius) {
  static std::mutex mu;
  static std::shared_ptr<const PotentialKernel> cached;
  std::lock_guard lock(mu);
  if (!cached || cached->window() < min_window)
    cached = std::make_shared<const PotentialKernel>(std::max(min_window, KernelTable::kDefaultRadius));
  return cached;
}

}  // namespace condwalk
