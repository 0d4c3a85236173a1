#pragma once

// Brackets for infinite-horizon quantities of the conditioned walk from
// Dirichlet solves on a truncated ball.
//
// Let T be the exit time of B(R) and A a finite set with 0 not in A. For
// u(x) = P_x[hit targets in A first among A] (targets = A gives the hitting
// probability, targets = {y} the entrance probability at y),
//
//   u(x) = E_x[ 1{first site of A is a target}; tau_A < T ] + E_x[ u(S_T); T < tau_A ],
//
// so u solves the truncated Dirichlet problem with u on the external
// boundary as data. By the maximum principle, bracketing the data bounds u.
// Two far-field models supply the data:
//
//  * KernelRepresentation: a path of the conditioned walk from z to an end
//    site w has weight a(w)/a(z) times its SRW weight, hence
//      u(z) = sum_{y in targets} a(y) H_{A u {0}}(z, y) / a(z)
//    with the SRW hitting distribution H computed exactly (hitting.hpp).
//    The data error is only the kernel-evaluation error.
//  * LeadingOrder: u(z) = cap(A) (g^(z, y0) +- kappa * scale(z)) with the
//    leading-order error scale of the far-field hitting estimate; cap is
//    unknown and solved self-consistently from the escape probabilities.
//    Hitting probabilities only.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "condwalk/bracket.hpp"
#include "condwalk/closed_forms.hpp"
#include "condwalk/error.hpp"
#include "condwalk/hitting.hpp"
#include "condwalk/kernel.hpp"
#include "condwalk/lattice.hpp"
#include "condwalk/solver.hpp"

namespace condwalk {

enum class FarField { KernelRepresentation, LeadingOrder };

inline const char* far_field_name(FarField f) {
  return f == FarField::KernelRepresentation ? "kernel-representation" : "leading-order";
}

struct BracketOptions {
  double radius = 64.0;       // first rung of the truncation ladder
  double max_radius = 1024.0;
  double tol = 1e-3;          // target bracket width
  FarField far_field = FarField::KernelRepresentation;
  double kappa = 2.0;         // constant on the leading-order error scale
  SolveOptions solver;
};

/// Thrown when the ladder reaches max_radius without meeting tol; carries
/// the tightest bracket found.
class BracketBudgetExceeded : public Error {
 public:
  BracketBudgetExceeded(const std::string& what, Bracket best) : Error(what), best_(std::move(best)) {}
  const Bracket& best() const { return best_; }

 private:
  Bracket best_;
};

/// Bracketed solution of one truncated hitting problem, valid at every site
/// of the solve grid.
class HitField {
 public:
  HitField(const SiteSet& set, const SiteSet& targets, double radius, const BracketOptions& opts)
      : set_(set), targets_(targets), model_(opts.far_field), radius_(radius) {
    set.require_origin_free();
    if (set.empty()) throw DomainError("empty set");
    for (Site t : targets)
      if (!set.contains(t)) throw DomainError("targets must lie in A");
    const auto rmax = static_cast<std::int32_t>(std::floor(radius));
    kernel_ = shared_kernel(rmax + 2);
    hat_ = std::make_unique<HatKernel>(kernel_);
    if (set.max_norm() + 2.0 > radius) throw DomainError("A must lie well inside the truncation ball");

    TruncatedDomain dom{Chain::Hat, radius, {}, {}};
    for (std::size_t i = 0; i < set.size(); ++i)
      dom.absorbing.push_back({"a" + std::to_string(i), SiteSet{set[i]}});
    grid_ = std::make_shared<const DomainGrid>(dom, kernel_);
    std::vector<double> target_values(grid_->label_names().size(), 0.0);
    for (std::size_t i = 0; i < set.size(); ++i) target_values[i] = targets.contains(set[i]) ? 1.0 : 0.0;

    if (model_ == FarField::KernelRepresentation) {
      const SrwHitting srw(*kernel_, set.with(kOrigin));
      std::vector<std::size_t> idx;
      for (Site t : targets) idx.push_back(static_cast<std::size_t>(srw.set().index_of(t)));
      double delta = 0.0;
      auto data = [&](Site z) {
        const double az = (*kernel_)(z);
        double s = 0.0, e = 0.0;
        for (std::size_t i : idx) {
          const double ay = (*kernel_)(srw.set()[i]);
          s += ay * srw.hit(z, i);
          e += ay * srw.hit_error(z, i);
        }
        // a(z) relative error enters through the 1/a(z) factor.
        e += s * kernel_->error_bound(z) / az;
        delta = std::max(delta, e / az);
        return s / az;
      };
      mid_ = solve_dirichlet(grid_, {target_values, data}, std::nullopt, opts.solver);
      width_ = mid_.error_bound + delta;
      return;
    }

    if (targets != set) throw DomainError("the leading-order far field brackets hitting probabilities only");
    const Site y0 = set[0];
    const double dm = set.diameter();
    const double inner = y0.norm() + dm;
    if (radius - set.max_norm() <= 5.0 * dm)
      throw DomainError("truncation radius too small for the far-field estimate");
    mid_ = solve_dirichlet(grid_, {target_values, {}}, std::nullopt, opts.solver);
    std::vector<double> zero(grid_->label_names().size(), 0.0);
    w_ = solve_dirichlet(grid_, {zero, [&](Site z) { return hat_->g_hat(z, y0); }}, std::nullopt,
                         opts.solver);
    const double kappa = opts.kappa;
    e_ = solve_dirichlet(grid_,
                         {zero,
                          [&](Site z) {
                            if (dm == 0.0) return 0.0;
                            const double d = dist(z, set);
                            return kappa * dm /
                                   (d * std::log(1.0 + std::max(z.norm(), inner)) * std::log(1.0 + inner));
                          }},
                         std::nullopt, opts.solver);

    // cap = sum a^2 Es with Es(y) = alpha_y - cap * (beta_y +- eta_y).
    Bracket alpha = Bracket::point(0.0), beta = Bracket::point(0.0);
    for (Site y : set) {
      const double a2 = hat_->a(y) * hat_->a(y);
      Bracket al = Bracket::point(1.0), be = Bracket::point(0.0);
      for (Site w : neighbours(y)) {
        const double p = hat_->p_hat(y, w);
        if (p == 0.0) continue;
        if (set.contains(w)) {
          al = al + (-p);
          continue;
        }
        al = al - p * Bracket::around(mid_.value(w), mid_.error_bound);
        be = be + p * Bracket::around(w_.value(w), w_.error_bound + e_.value(w) + e_.error_bound);
      }
      alpha = alpha + a2 * al;
      beta = beta + a2 * be;
    }
    if (!(1.0 + beta.lower > 0.0)) throw Error("self-consistent capacity is unbounded");
    cap_ = Bracket(std::max(0.0, alpha.lower) / (1.0 + beta.upper), alpha.upper / (1.0 + beta.lower),
                   "cap");
  }

  FarField model() const { return model_; }
  double radius() const { return radius_; }
  const SiteSet& set() const { return set_; }
  const HatKernel& hat() const { return *hat_; }

  /// Self-consistent capacity (leading-order model only).
  std::optional<Bracket> capacity() const {
    if (model_ == FarField::LeadingOrder) return cap_;
    return std::nullopt;
  }

  /// Solver error of the representation model, uniform over the grid.
  double width() const { return width_; }

  Bracket at(Site x) const {
    const int l = grid_->label_of(x);
    if (l == DomainGrid::kUnreachable || l == DomainGrid::kForbidden)
      throw DomainError("site outside the bracketed domain");
    if (l >= 0 && l != grid_->outside_label()) return Bracket::point(mid_.value(x));
    if (model_ == FarField::KernelRepresentation)
      return Bracket::around(mid_.value(x), width_).clamped01();
    const Bracket h = Bracket::around(mid_.value(x), mid_.error_bound);
    const double spread = w_.error_bound + e_.value(x) + e_.error_bound;
    const Bracket w = Bracket::around(w_.value(x), spread);
    return (h + cap_ * w).clamped01();
  }

  /// Escape probability Es_A(y) = 1 - sum_w P^(y,w) u(w), for y in A; needs
  /// targets = A.
  Bracket escape(Site y) const {
    if (!set_.contains(y)) throw DomainError("escape requires y in A");
    if (targets_ != set_) throw DomainError("escape requires the hitting field of A");
    Bracket s = Bracket::point(1.0);
    for (Site w : neighbours(y)) {
      const double p = hat_->p_hat(y, w);
      if (p == 0.0) continue;
      s = s - p * at(w);
    }
    return s.clamped01();
  }

 private:
  SiteSet set_, targets_;
  FarField model_;
  double radius_;
  std::shared_ptr<const PotentialKernel> kernel_;
  std::unique_ptr<HatKernel> hat_;
  std::shared_ptr<const DomainGrid> grid_;
  SolveResult mid_, w_, e_;
  double width_ = 0.0;
  Bracket cap_;
};

enum class Quantity { Hit, Entrance, Escape };

inline double ladder_start(double requested, double extent) {
  return std::max(requested, 2.0 * (extent + 2.0));
}

/// Ladder over R = radius, 2 radius, ... <= max_radius until the bracket of
/// the requested quantity is narrower than tol.
///   Hit:      P_x[ever hit A]              (y unused)
///   Entrance: P_x[first site of A is y]
///   Escape:   Es_A(y)                      (x unused)
inline Bracket bracket_infinite(Quantity q, Site x, const SiteSet& set, const BracketOptions& opts,
                                Site y = kOrigin) {
  set.require_origin_free();
  if (q == Quantity::Entrance && opts.far_field == FarField::LeadingOrder)
    throw DomainError("entrance brackets use the kernel-representation far field");
  if (q != Quantity::Escape && x.is_origin()) throw DomainError("origin is not a state");
  if (q != Quantity::Hit && !set.contains(y)) throw DomainError("y must lie in A");
  if (q == Quantity::Hit && set.contains(x)) return Bracket::point(1.0, "hit");
  if (q == Quantity::Entrance && set.contains(x))
    return Bracket::point(x == y ? 1.0 : 0.0, "entrance");

  const double extent = std::max(q == Quantity::Escape ? 0.0 : x.norm(), set.max_norm());
  std::optional<Bracket> best;
  for (double r = ladder_start(opts.radius, extent); r <= opts.max_radius; r *= 2.0) {
    Bracket b;
    if (q == Quantity::Entrance) {
      b = HitField(set, SiteSet{y}, r, opts).at(x).labeled("entrance");
    } else {
      const HitField f(set, set, r, opts);
      b = q == Quantity::Hit ? f.at(x).labeled("hit") : f.escape(y).labeled("escape");
    }
    if (!best || b.width() < best->width()) best = b;
    if (b.width() <= opts.tol) return b;
  }
  if (!best) throw DomainError("max_radius below the smallest admissible truncation");
  throw BracketBudgetExceeded("bracket did not reach tolerance within max_radius", *best);
}

struct EntranceMeasure {
  Bracket hit;                       // P_x[ever hit A]
  std::vector<Bracket> joint;        // P_x[first site of A is y_i]
  std::vector<Bracket> conditional;  // joint / hit
  double radius = 0.0;
};

/// Entrance measure of A from x, conditioned on hitting A. Uses the
/// kernel-representation far field at a single truncation radius from the
/// ladder start, enlarged until every conditional bracket meets tol.
inline EntranceMeasure entrance_measure(Site x, const SiteSet& set, const BracketOptions& opts) {
  set.require_origin_free();
  if (set.contains(x)) throw DomainError("x must lie outside A");
  BracketOptions o = opts;
  o.far_field = FarField::KernelRepresentation;
  const double extent = std::max(x.norm(), set.max_norm());
  std::optional<EntranceMeasure> best;
  for (double r = ladder_start(o.radius, extent); r <= o.max_radius; r *= 2.0) {
    EntranceMeasure m;
    m.radius = r;
    Bracket total = Bracket::point(0.0);
    for (Site y : set) {
      m.joint.push_back(HitField(set, SiteSet{y}, r, o).at(x));
      total = total + m.joint.back();
    }
    // The joint probabilities partition the hitting event; intersect the
    // summed bracket with the direct one.
    const Bracket direct = HitField(set, set, r, o).at(x);
    m.hit = Bracket(std::max(total.lower, direct.lower), std::min(total.upper, direct.upper), "hit");
    double worst = 0.0;
    for (const Bracket& j : m.joint) {
      m.conditional.push_back((j / m.hit).clamped01());
      worst = std::max(worst, m.conditional.back().width());
    }
    best = m;
    if (worst <= o.tol) return m;
  }
  if (!best) throw DomainError("max_radius below the smallest admissible truncation");
  Bracket widest = best->conditional.front();
  for (const Bracket& c : best->conditional)
    if (c.width() > widest.width()) widest = c;
  throw BracketBudgetExceeded("entrance measure did not reach tolerance within max_radius", widest);
}

/// Green's function of the conditioned walk from truncated solves:
///   G^(x,y) = G^_R(x,y) + w(x) G^(y,y),  G^(y,y) = G^_R(y,y) / (1 - w(y)),
/// where w(x) = E_x[P^_{S_T}[hit y]] solves the harmonic problem with the
/// exact singleton far field.
inline Bracket green_bracket(Site x, Site y, const BracketOptions& opts) {
  if (x.is_origin() || y.is_origin()) throw DomainError("origin is not a state");
  const double extent = std::max(x.norm(), y.norm());
  std::optional<Bracket> best;
  for (double r = ladder_start(opts.radius, extent); r <= opts.max_radius; r *= 2.0) {
    const auto rmax = static_cast<std::int32_t>(std::floor(r));
    auto kernel = shared_kernel(rmax + 2);
    const TruncatedDomain dom{Chain::Hat, r, {}, {}};
    auto grid = std::make_shared<const DomainGrid>(dom, kernel);
    const SrwHitting srw(*kernel, SiteSet{kOrigin, y});
    const auto iy = static_cast<std::size_t>(srw.set().index_of(y));
    const double ay = (*kernel)(y);
    double delta = 0.0;
    auto q = [&](Site z) {
      const double az = (*kernel)(z);
      const double v = ay * srw.hit(z, iy) / az;
      delta = std::max(delta, (ay * srw.hit_error(z, iy) + v * kernel->error_bound(z)) / az);
      return v;
    };
    const std::vector<double> zero(grid->label_names().size(), 0.0);
    const SolveResult gr = solve_dirichlet(grid, {zero, {}}, y, opts.solver);
    const SolveResult w = solve_dirichlet(grid, {zero, q}, std::nullopt, opts.solver);
    const double ew = w.error_bound + delta;
    const Bracket gyy =
        Bracket::around(gr.value(y), gr.error_bound) / (1.0 - Bracket::around(w.value(y), ew));
    const Bracket b = (Bracket::around(gr.value(x), gr.error_bound) +
                       Bracket::around(w.value(x), ew) * gyy)
                          .labeled("green");
    if (!best || b.width() < best->width()) best = b;
    if (b.width() <= opts.tol) return b;
  }
  if (!best) throw DomainError("max_radius below the smallest admissible truncation");
  throw BracketBudgetExceeded("green bracket did not reach tolerance within max_radius", *best);
}

}  // namespace condwalk
