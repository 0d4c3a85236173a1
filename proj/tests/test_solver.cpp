#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "condwalk/bracketing.hpp"
#include "condwalk/closed_forms.hpp"
#include "condwalk/hitting.hpp"
#include "condwalk/potential_theory.hpp"
#include "condwalk/solver.hpp"

using namespace condwalk;

namespace {

const HatKernel& hat() {
  static const HatKernel h(shared_kernel());
  return h;
}

FiniteChain ring(int n) {
  FiniteChain c{Eigen::MatrixXd::Zero(n, n)};
  for (int i = 0; i < n; ++i) {
    c.p(i, (i + 1) % n) = 0.5;
    c.p(i, (i + n - 1) % n) = 0.5;
  }
  return c;
}

}  // namespace

TEST(DomainGrid, ClassifiesEverySite) {
  const TruncatedDomain dom{Chain::Hat, 10.0, SiteSet{{2, 2}}, {{"A", SiteSet{{3, 0}, {4, 0}}}}};
  const DomainGrid g(dom);
  const SiteSet ball = enumerate_ball(Ball(kOrigin, 10.0));
  // Interior: ball minus the origin, the forbidden site and the absorbing set.
  EXPECT_EQ(g.interior_size(), ball.size() - 4);
  EXPECT_EQ(g.label_of({3, 0}), 0);
  EXPECT_EQ(g.label_names().back(), kOutsideLabel);
  EXPECT_EQ(g.label_of({11, 0}), g.outside_label());
  EXPECT_EQ(g.label_of({5, 5}), DomainGrid::kInterior);
  EXPECT_THROW((DomainGrid(TruncatedDomain{Chain::Hat, 10.0, {}, {{"A", SiteSet{{3, 0}}}, {"B", SiteSet{{3, 0}}}}})),
               DomainError);
}

TEST(Solver, SrwExitBeforeOrigin) {
  // P_x[leave B(100) before hitting 0] ~ a(x)/a(100).
  const TruncatedDomain dom{Chain::Srw, 100.0, {}, {{"origin", SiteSet{kOrigin}}}};
  const HitPartition hp = hit_partition(dom, {1, 0});
  EXPECT_LE(hp.defect, 1e-12);
  const LeadingOrder lo = hat().srw_exit_before_origin({1, 0}, kOrigin, 100.0);
  EXPECT_LE(std::abs(hp.probability.at(kOutsideLabel) - lo.value), lo.error_scale + hp.error_bound);
  EXPECT_NEAR(hp.probability.at(kOutsideLabel) + hp.probability.at("origin"), 1.0, 1e-9);
}

TEST(Solver, SrwGreenIdentity) {
  // G_R(x,y) = E_x[a(S_T - y)] - a(x - y) for SRW killed at 0 and outside B(R).
  const Site x{3, 0}, y{5, 1};
  const TruncatedDomain dom{Chain::Srw, 100.0, {}, {{"origin", SiteSet{kOrigin}}}};
  const auto& a = *shared_kernel();
  const SolveResult g = green_truncated(dom, y);
  auto grid = std::make_shared<const DomainGrid>(dom);
  const SolveResult e = solve_dirichlet(grid, {{a(kOrigin - y), 0.0}, [&](Site z) { return a(z - y); }});
  EXPECT_NEAR(g.value(x), e.value(x) - a(x - y), 1e-8);
}

TEST(Solver, TruncatedGreenBelowInfiniteVolume) {
  const TruncatedDomain dom{Chain::Hat, 200.0, {}, {}};
  const SolveResult g = green_truncated(dom, {1, 0});
  const double v = g.value({1, 0});
  EXPECT_LE(v, 2.0 + g.error_bound);
  EXPECT_GE(v, 2.0 - 4.0 / a_real(200.0));
  // Visits from afar are rare.
  EXPECT_LT(g.value({199, 0}), 0.1);
  EXPECT_GE(g.value({199, 0}), 0.0);
}

TEST(Solver, ValuesAreProbabilitiesAndResidualMeetsTolerance) {
  const SiteSet a{{3, 0}, {4, 0}, {3, 1}};
  TruncatedDomain dom{Chain::Hat, 40.0, {}, {}};
  for (Site s : a) dom.absorbing.emplace_back("s" + std::to_string(s.x1) + std::to_string(s.x2), SiteSet{s});
  SolveOptions opts;
  opts.tol = 1e-11;
  std::mt19937 gen(1);
  std::uniform_int_distribution<int> c(-25, 25);
  for (int k = 0; k < 5; ++k) {
    Site x{c(gen), c(gen)};
    if (x.is_origin() || a.contains(x)) continue;
    const HitPartition hp = hit_partition(dom, x, opts);
    EXPECT_LE(hp.defect, opts.tol);
    double total = 0.0;
    for (const auto& [label, p] : hp.probability) {
      EXPECT_GE(p, -hp.error_bound);
      EXPECT_LE(p, 1.0 + hp.error_bound);
      total += p;
    }
    // The conditioned walk never reaches 0: no mass is killed.
    EXPECT_NEAR(total, 1.0, 1e-8);
  }
}

TEST(Solver, RejectsBadInput) {
  const TruncatedDomain dom{Chain::Hat, 20.0, {}, {}};
  EXPECT_THROW(hit_partition(dom, {30, 0}), DomainError);
  auto grid = std::make_shared<const DomainGrid>(dom);
  EXPECT_THROW(solve_dirichlet(grid, {{}, {}}), DomainError);
  SolveOptions o;
  o.tol = 0.0;
  EXPECT_THROW(solve_dirichlet(grid, {{0.0}, {}}, std::nullopt, o), DomainError);
}

TEST(SrwHitting, TwoPointSetAndPartitionOfUnity) {
  const auto& a = *shared_kernel();
  const SrwHitting h(a, SiteSet{kOrigin, {1, 0}});
  EXPECT_NEAR(h.harmonic_measure()[0], 0.5, 1e-14);
  EXPECT_NEAR(h.harmonic_measure()[1], 0.5, 1e-14);
  EXPECT_NEAR(h.capacity(), 0.5, 1e-14);
  const SrwHitting l(a, SiteSet{kOrigin, {3, 0}, {4, 0}, {3, 1}});
  double s = 0.0;
  for (double v : l.harmonic_measure()) s += v;
  EXPECT_NEAR(s, 1.0, 1e-13);
  std::mt19937 gen(2);
  std::uniform_int_distribution<int> c(-300, 300);
  for (int k = 0; k < 200; ++k) {
    const Site z{c(gen), c(gen)};
    double t = 0.0;
    for (std::size_t i = 0; i < l.size(); ++i) {
      const double v = l.hit(z, i);
      EXPECT_GE(v, -l.hit_error(z, i));
      t += v;
    }
    EXPECT_NEAR(t, 1.0, 1e-10);
  }
  EXPECT_EQ(l.hit({3, 0}, static_cast<std::size_t>(l.set().index_of({3, 0}))), 1.0);
  EXPECT_EQ(l.hit({3, 0}, 0), 0.0);
}

TEST(SrwHitting, MatchesTruncatedSolveFromAfar) {
  // H_B(z, .) against a truncated SRW solve: walks that leave B(R) first
  // enter B with law hm_B up to O(diam/R).
  const auto& a = *shared_kernel();
  const SiteSet b{kOrigin, {2, 0}, {0, 2}};
  const SrwHitting h(a, b);
  const auto hm = h.harmonic_measure();
  double prev_err = 1.0;
  for (double radius : {100.0, 200.0}) {
    TruncatedDomain dom{Chain::Srw, radius, {}, {}};
    for (Site s : b) dom.absorbing.emplace_back(std::to_string(s.x1) + "," + std::to_string(s.x2), SiteSet{s});
    const HitPartition hp = hit_partition(dom, {6, 3});
    const double out = hp.probability.at(kOutsideLabel);
    double err = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      const std::string key = std::to_string(b[i].x1) + "," + std::to_string(b[i].x2);
      err = std::max(err, std::abs(hp.probability.at(key) + out * hm[i] - h.hit({6, 3}, i)));
    }
    EXPECT_LT(err, 1e-3) << radius;
    EXPECT_LT(err, prev_err) << radius;
    prev_err = err;
  }
}

TEST(HitField, EscapeAndHitContainClosedForms) {
  BracketOptions o;
  o.tol = 1e-6;
  const Bracket esc = bracket_infinite(Quantity::Escape, kOrigin, SiteSet{{1, 0}}, o, {1, 0});
  EXPECT_TRUE(esc.contains(0.5)) << esc;
  const Bracket hit = bracket_infinite(Quantity::Hit, {5, 0}, SiteSet{{1, 0}}, o);
  EXPECT_TRUE(hit.contains(hat().hit_prob_hat({5, 0}, {1, 0}))) << hit;
  EXPECT_LE(hit.width(), o.tol);
  EXPECT_EQ(bracket_infinite(Quantity::Hit, {1, 0}, SiteSet{{1, 0}}, o).lower, 1.0);
}

TEST(HitField, LeadingOrderFarFieldNarrowsWithRadius) {
  BracketOptions o;
  o.far_field = FarField::LeadingOrder;
  // Not a singleton: for one site the leading-order field is exact and the
  // width is solver error only.
  const SiteSet two{{3, 0}, {4, 0}};
  const double w1 = HitField(two, two, 64.0, o).at({6, 0}).width();
  const double w2 = HitField(two, two, 128.0, o).at({6, 0}).width();
  const double w4 = HitField(two, two, 256.0, o).at({6, 0}).width();
  EXPECT_LT(w2, 0.6 * w1);
  EXPECT_LT(w4, 0.6 * w2);
  const SiteSet a{{1, 0}};
  // Both far-field models bracket the same number.
  o.tol = 1e-3;
  const Bracket lead = bracket_infinite(Quantity::Hit, {5, 0}, a, o);
  EXPECT_TRUE(lead.contains(hat().hit_prob_hat({5, 0}, {1, 0}))) << lead;
}

TEST(HitField, EntranceMeasureApproachesHarmonicMeasure) {
  const SiteSet a{{3, 0}, {4, 0}, {3, 1}};
  BracketOptions o;
  o.tol = 1e-4;
  const EntranceMeasure m = entrance_measure({64, 0}, a, o);
  const CapacityReport cap = capacity_report(a, o);
  double lo = 0.0, hi = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    lo += m.conditional[i].lower;
    hi += m.conditional[i].upper;
    const double gap = std::abs(m.conditional[i].mid() - cap.hm_hat[i].mid());
    EXPECT_LE(gap, 2.0 * a.diameter() / dist({64, 0}, a)) << a[i];
  }
  EXPECT_LE(lo, 1.0 + 1e-12);
  EXPECT_GE(hi, 1.0 - 1e-12);
}

TEST(HitField, GreenBracketContainsClosedForm) {
  BracketOptions o;
  o.tol = 1e-6;
  for (auto [x, y] : {std::pair{Site{1, 0}, Site{1, 0}}, std::pair{Site{1, 0}, Site{-1, 0}},
                      std::pair{Site{4, -3}, Site{-2, 7}}}) {
    const Bracket b = green_bracket(x, y, o);
    EXPECT_TRUE(b.contains(hat().green_hat(x, y))) << x << " " << y << " " << b;
  }
}

TEST(HitField, BudgetExceededCarriesBestBracket) {
  BracketOptions o;
  o.tol = 1e-15;
  o.max_radius = 64.0;
  try {
    bracket_infinite(Quantity::Hit, {5, 0}, SiteSet{{1, 0}}, o);
    FAIL() << "expected BracketBudgetExceeded";
  } catch (const BracketBudgetExceeded& e) {
    EXPECT_TRUE(e.best().contains(hat().hit_prob_hat({5, 0}, {1, 0})));
  }
}

TEST(ConditionalHitting, RingChain) {
  const ConditionalHitCheck c = conditional_hit_check(ring(5), 0, {2}, {3});
  EXPECT_NEAR(c.lhs, c.rhs, 1e-12);
}

TEST(ConditionalHitting, RandomChains) {
  std::mt19937 gen(6);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 10; ++trial) {
    FiniteChain c{Eigen::MatrixXd::Zero(6, 6)};
    for (int i = 0; i < 6; ++i) {
      // Both ring directions are present, so the chain is irreducible.
      c.p(i, (i + 1) % 6) = 0.1 + u(gen);
      c.p(i, (i + 5) % 6) = 0.1 + u(gen);
      c.p(i, (i + 3) % 6) = u(gen);
      c.p.row(i) /= c.p.row(i).sum();
    }
    const ConditionalHitCheck r = conditional_hit_check(c, 0, {2, 3}, {4});
    EXPECT_NEAR(r.lhs, r.rhs, 1e-10);
  }
  FiniteChain split{Eigen::MatrixXd::Identity(3, 3)};
  EXPECT_THROW(conditional_hit_check(split, 0, {1}, {2}), DomainError);
  EXPECT_THROW(conditional_hit_check(ring(5), 0, {0}, {2}), DomainError);
}
