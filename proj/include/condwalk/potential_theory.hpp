#pragma once

// Escape probabilities, capacity and harmonic measure of the conditioned
// walk, and the SRW capacity of A u {0} computed from truncated SRW solves.
//
//   Es(y)  = P_y[never return to A]           y in A
//   cap(A) = sum_y a(y)^2 Es(y)
//   hm(y)  = a(y)^2 Es(y) / cap(A)

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <vector>

#include "condwalk/bracket.hpp"
#include "condwalk/bracketing.hpp"
#include "condwalk/closed_forms.hpp"
#include "condwalk/error.hpp"
#include "condwalk/lattice.hpp"
#include "condwalk/solver.hpp"

namespace condwalk {

struct CapacityReport {
  SiteSet set;
  std::vector<Bracket> es_hat;  // in set order
  Bracket cap_hat;
  std::vector<Bracket> hm_hat;
  double radius_used = 0.0;
  FarField far_field = FarField::KernelRepresentation;
};

namespace detail {

inline CapacityReport capacity_at(const SiteSet& set, double radius, const BracketOptions& opts) {
  const HitField field(set, set, radius, opts);
  CapacityReport rep;
  rep.set = set;
  rep.radius_used = radius;
  rep.far_field = opts.far_field;
  Bracket cap = Bracket::point(0.0);
  for (Site y : set) {
    rep.es_hat.push_back(field.escape(y).labeled("escape"));
    const double ay = field.hat().a(y);
    cap = cap + (ay * ay) * rep.es_hat.back();
  }
  if (const auto self = field.capacity()) {
    // Both are valid enclosures of the same number.
    const double lo = std::max(cap.lower, self->lower), hi = std::min(cap.upper, self->upper);
    if (lo <= hi) cap = Bracket(lo, hi);
  }
  rep.cap_hat = cap.labeled("cap");
  if (!(cap.lower > 0.0)) throw Error("capacity bracket does not exclude 0");
  for (std::size_t i = 0; i < set.size(); ++i) {
    if (set.size() == 1) {
      rep.hm_hat.push_back(Bracket::point(1.0, "hm"));
      continue;
    }
    const double ay = field.hat().a(set[i]);
    rep.hm_hat.push_back(((ay * ay) * rep.es_hat[i] / cap).clamped01().labeled("hm"));
  }
  return rep;
}

}  // namespace detail

/// Escape, capacity and harmonic-measure brackets from one truncation
/// ladder; stops when the capacity bracket is narrower than opts.tol.
inline CapacityReport capacity_report(const SiteSet& set, const BracketOptions& opts = {}) {
  set.require_origin_free();
  if (set.empty()) throw DomainError("empty set");
  std::optional<CapacityReport> best;
  for (double r = ladder_start(opts.radius, set.max_norm()); r <= opts.max_radius; r *= 2.0) {
    CapacityReport rep = detail::capacity_at(set, r, opts);
    const bool done = rep.cap_hat.width() <= opts.tol;
    if (!best || rep.cap_hat.width() < best->cap_hat.width()) best = std::move(rep);
    if (done) return *best;
  }
  if (!best) throw DomainError("max_radius below the smallest admissible truncation");
  throw BracketBudgetExceeded("capacity bracket did not reach tolerance within max_radius", best->cap_hat);
}

inline std::vector<Bracket> es_hat(const SiteSet& set, const BracketOptions& opts = {}) {
  return capacity_report(set, opts).es_hat;
}
inline Bracket cap_hat(const SiteSet& set, const BracketOptions& opts = {}) {
  return capacity_report(set, opts).cap_hat;
}
inline std::vector<Bracket> hm_hat(const SiteSet& set, const BracketOptions& opts = {}) {
  return capacity_report(set, opts).hm_hat;
}

/// P_x[ever hit A] = sum_y G^(x,y) Es(y), closed-form Green's function times
/// escape brackets.
inline Bracket hit_prob_via_decomposition(Site x, const SiteSet& set, const BracketOptions& opts = {}) {
  set.require_origin_free();
  if (set.contains(x)) throw DomainError("x must lie outside A");
  if (x.is_origin()) throw DomainError("origin is not a state");
  const CapacityReport rep = capacity_report(set, opts);
  const HatKernel hat(shared_kernel());
  Bracket s = Bracket::point(0.0);
  for (std::size_t i = 0; i < set.size(); ++i) s = s + hat.green_hat(x, set[i]) * rep.es_hat[i];
  return s.labeled("hit");
}

namespace detail {

// Normalized SRW escape probabilities P_y[reach the outside of B(R) before
// returning to A], y in A.
inline std::vector<double> srw_escape_distribution(const SiteSet& set, double radius,
                                                   const SolveOptions& opts) {
  TruncatedDomain dom{Chain::Srw, radius, {}, {{"A", set}}};
  auto grid = std::make_shared<const DomainGrid>(dom);
  const SolveResult v = solve_dirichlet(grid, {{0.0, 1.0}, {}}, std::nullopt, opts);
  std::vector<double> e;
  double total = 0.0;
  for (Site y : set) {
    double s = 0.0;
    for (Site w : neighbours(y))
      if (!set.contains(w)) s += 0.25 * v.value(w);
    e.push_back(s);
    total += s;
  }
  for (double& x : e) x /= total;
  return e;
}

}  // namespace detail

/// SRW harmonic measure from infinity, bracketed by the truncated measures
/// at R and 2R: [min, max] widened by their difference.
inline std::vector<Bracket> hm_srw(const SiteSet& set, double radius, const SolveOptions& opts = {}) {
  if (set.empty()) throw DomainError("empty set");
  if (set.size() == 1) return {Bracket::point(1.0, "hm")};
  if (4.0 * (set.max_norm() + 1.0) > radius) throw DomainError("hm_srw requires A inside B(R/4)");
  const auto h1 = detail::srw_escape_distribution(set, radius, opts);
  const auto h2 = detail::srw_escape_distribution(set, 2.0 * radius, opts);
  std::vector<Bracket> out;
  for (std::size_t i = 0; i < set.size(); ++i) {
    const double d = std::abs(h1[i] - h2[i]);
    out.push_back(Bracket(std::min(h1[i], h2[i]) - d, std::max(h1[i], h2[i]) + d, "hm").clamped01());
  }
  return out;
}

/// SRW capacity sum_y hm_B(y) a(y) of a set containing the origin; ladder
/// over R until the bracket is narrower than opts.tol.
inline Bracket cap_srw_with_origin(const SiteSet& set, const BracketOptions& opts = {}) {
  if (!set.contains_origin()) throw DomainError("cap_srw_with_origin requires 0 in B");
  if (set.size() == 1) return Bracket::point(0.0, "cap");
  const auto& a = *shared_kernel();
  std::optional<Bracket> best;
  for (double r = std::max(opts.radius, 4.0 * (set.max_norm() + 1.0)); r <= opts.max_radius; r *= 2.0) {
    const auto hm = hm_srw(set, r, opts.solver);
    Bracket c = Bracket::point(0.0);
    for (std::size_t i = 0; i < set.size(); ++i) c = c + a(set[i]) * hm[i];
    c = c.labeled("cap");
    if (!best || c.width() < best->width()) best = c;
    if (c.width() <= opts.tol) return c;
  }
  if (!best) throw DomainError("max_radius below the smallest admissible truncation");
  throw BracketBudgetExceeded("SRW capacity did not reach tolerance within max_radius", *best);
}

struct CapacityIdentity {
  Bracket cap_hat;
  Bracket cap_srw;
  bool overlap() const { return cap_hat.overlaps(cap_srw); }
  double midpoint_gap() const { return std::abs(cap_hat.mid() - cap_srw.mid()); }
};

/// cap^(A) against the SRW capacity of A u {0}, by independent solves.
inline CapacityIdentity verify_capacity_identity(const SiteSet& set, const BracketOptions& opts = {}) {
  set.require_origin_free();
  return {cap_hat(set, opts), cap_srw_with_origin(set.with(kOrigin), opts)};
}

}  // namespace condwalk
