#pragma once

// Closed-form quantities of the walk conditioned on never hitting the origin
// (the Doob h-transform of SRW by the potential kernel a):
//
//   P^(x,y)  = a(y) / (4 a(x))                      x ~ y, x != 0
//   G^(x,y)  = a(y)/a(x) * (a(x) + a(y) - a(x-y))
//   g^(x,y)  = G^(x,y) / a(y)^2                     (symmetric)
//   l^(x,y)  = G^(x,y) / a(y) = 1 + (a(y) - a(x-y)) / a(x)
//
// together with return/hit probabilities and the leading-order evaluators
// of the hitting lemmas, which return the value with an error scale.
//
// Every a-evaluation goes through PotentialKernel::operator(), the single
// window/asymptotic crossover policy.

#include <algorithm>
#include <cmath>
#include <memory>

#include "condwalk/error.hpp"
#include "condwalk/kernel.hpp"
#include "condwalk/lattice.hpp"

namespace condwalk {

/// A leading-order value whose O(.) correction has unknown constant;
/// error_scale is the size of that correction with constant 1.
struct LeadingOrder {
  double value = 0.0;
  double error_scale = 0.0;
};

class HatKernel {
 public:
  static constexpr std::int32_t kMinWindow = 16;

  explicit HatKernel(std::shared_ptr<const PotentialKernel> kernel)
      : kernel_(std::move(kernel)) {
    if (!kernel_) throw DomainError("null kernel");
    if (kernel_->window() < kMinWindow) throw DomainError("kernel window must be >= 16");
  }

  const PotentialKernel& kernel() const { return *kernel_; }
  std::shared_ptr<const PotentialKernel> kernel_ptr() const { return kernel_; }
  double a(Site x) const { return (*kernel_)(x); }

  double p_hat(Site x, Site y) const {
    if (x.is_origin()) throw DomainError("origin is not a state");
    if (!adjacent(x, y)) return 0.0;
    return a(y) / (4.0 * a(x));
  }

  double green_hat(Site x, Site y) const {
    require_states(x, y);
    const double ax = a(x), ay = a(y);
    return ay / ax * (ax + ay - a(x - y));
  }

  double g_hat(Site x, Site y) const {
    require_states(x, y);
    const double ax = a(x), ay = a(y);
    return (ax + ay - a(x - y)) / (ax * ay);
  }

  double ell_hat(Site x, Site y) const {
    require_states(x, y);
    return 1.0 + (a(y) - a(x - y)) / a(x);
  }

  /// P_x[return to x], 1 - 1/(2a(x)).
  double return_prob_hat(Site x) const {
    if (x.is_origin()) throw DomainError("origin is not a state");
    return 1.0 - 1.0 / (2.0 * a(x));
  }

  /// P_x[ever hit y] for x != y.
  double hit_prob_hat(Site x, Site y) const {
    require_states(x, y);
    if (x == y) throw DomainError("use return_prob_hat");
    const double ax = a(x);
    return (ax + a(y) - a(x - y)) / (2.0 * ax);
  }

  /// P_x[never hit B(r)] ~ 1 - a(r)/a(x) for r >= 1, |x| >= r + 1.
  LeadingOrder escape_ball_leading(Site x, double r) const {
    if (!(r >= 1.0)) throw DomainError("escape_ball_leading requires r >= 1");
    if (x.norm() < r + 1.0) throw DomainError("escape_ball_leading requires |x| >= r+1");
    const double ax = a(x);
    return {std::clamp(1.0 - a_real(r) / ax, 0.0, 1.0), 1.0 / (r * ax)};
  }

  /// SRW: P_x[reach the boundary of B(y,r) before returning to 0] ~ a(x)/a(r),
  /// for x in B(y,r), x != 0 and r >= |y|.
  LeadingOrder srw_exit_before_origin(Site x, Site y, double r) const {
    if (x.is_origin()) throw DomainError("srw_exit_before_origin requires x != 0");
    if (!(r >= 1.0) || r < y.norm())
      throw DomainError("srw_exit_before_origin requires r >= max(1, |y|)");
    if (!Ball(y, r).contains(x)) throw DomainError("srw_exit_before_origin requires x in B(y,r)");
    return {std::clamp(a(x) / a_real(r), 0.0, 1.0), (y.norm() + 1.0) / r};
  }

  /// P_x[ever hit A] ~ cap(A) g^(x, y0) from a distant x, given cap(A).
  /// The error scale carries the cap factor and both logarithms.
  LeadingOrder hit_set_far(Site x, const SiteSet& set, Site y0, double cap) const {
    set.require_origin_free();
    if (!set.contains(y0)) throw DomainError("hit_set_far requires y0 in A");
    if (x.is_origin()) throw DomainError("origin is not a state");
    const double d = dist(x, set);
    const double dm = set.diameter();
    if (!(d > 5.0 * dm) || d == 0.0) throw DomainError("hit_set_far requires dist(x,A) > 5 diam(A)");
    const double inner = y0.norm() + dm;
    const double scale =
        dm / (d * std::log(1.0 + std::max(x.norm(), inner)) * std::log(1.0 + inner));
    return {std::clamp(cap * g_hat(x, y0), 0.0, 1.0), cap * scale};
  }

 private:
  static void require_states(Site x, Site y) {
    if (x.is_origin() || y.is_origin()) throw DomainError("origin is not a state");
  }

  std::shared_ptr<const PotentialKernel> kernel_;
};

}  // namespace condwalk
