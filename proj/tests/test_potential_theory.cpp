#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "condwalk/potential_theory.hpp"

using namespace condwalk;
using std::numbers::pi;

namespace {

BracketOptions opts(double tol = 1e-5) {
  BracketOptions o;
  o.tol = tol;
  return o;
}

double a(Site x) { return (*shared_kernel())(x); }

}  // namespace

TEST(Escape, SingletonsMatchReturnProbability) {
  EXPECT_TRUE(es_hat(SiteSet{{1, 0}}, opts())[0].contains(0.5));
  EXPECT_TRUE(es_hat(SiteSet{{1, 1}}, opts())[0].contains(pi / 8.0));
  for (Site x : {Site{2, 1}, Site{-3, 0}, Site{4, 4}}) {
    const Bracket b = es_hat(SiteSet{x}, opts())[0];
    EXPECT_TRUE(b.contains(1.0 / (2.0 * a(x)))) << x << " " << b;
  }
}

TEST(Capacity, SingletonsAreHalfTheKernel) {
  EXPECT_TRUE(cap_hat(SiteSet{{1, 1}}, opts()).contains(2.0 / pi));
  for (int i = -5; i <= 5; ++i)
    for (int j = 0; j <= 5; j += 5) {
      const Site x{i, j};
      if (x.is_origin() || x.norm() > 5.0) continue;
      const Bracket b = cap_hat(SiteSet{x}, opts());
      EXPECT_TRUE(b.contains(a(x) / 2.0)) << x << " " << b;
    }
}

TEST(Capacity, ReportForSingletonMatchesClosedFormColumn) {
  const CapacityReport r = capacity_report(SiteSet{{1, 0}}, opts(1e-7));
  ASSERT_EQ(r.es_hat.size(), 1u);
  EXPECT_TRUE(r.es_hat[0].contains(0.5));
  EXPECT_TRUE(r.cap_hat.contains(0.5));
  EXPECT_EQ(r.hm_hat[0].lower, 1.0);
  EXPECT_LE(r.cap_hat.width(), 1e-7);
}

TEST(Capacity, MonotoneUnderInclusion) {
  const SiteSet a{{3, 0}, {4, 0}};
  const Bracket small = cap_hat(a, opts());
  for (Site z : {Site{3, 1}, Site{-2, 2}, Site{8, 0}}) {
    const Bracket big = cap_hat(a.with(z), opts());
    EXPECT_LE(small.lower, big.upper) << z;
    EXPECT_LT(small.mid(), big.mid()) << z;
  }
}

TEST(HarmonicMeasure, NormalizedAndSymmetric) {
  const SiteSet a{{3, 0}, {4, 0}, {3, 1}};
  const auto hm = hm_hat(a, opts());
  double lo = 0.0, hi = 0.0;
  for (const Bracket& b : hm) {
    lo += b.lower;
    hi += b.upper;
  }
  EXPECT_LE(lo, 1.0);
  EXPECT_GE(hi, 1.0);
  // Reflection across the x1 axis leaves the pair symmetric.
  const auto sym = hm_hat(SiteSet{{2, 3}, {2, -3}}, opts());
  EXPECT_TRUE(sym[0].contains(0.5));
  EXPECT_TRUE(sym[1].contains(0.5));
}

TEST(HarmonicMeasure, ThreeSiteRegression) {
  // Solver values at tolerance 1e-7, recorded once.
  const auto hm = hm_hat(SiteSet{{3, 0}, {4, 0}, {3, 1}}, opts(1e-7));
  // Set order is lexicographic: (3,0), (3,1), (4,0).
  EXPECT_NEAR(hm[0].mid(), 0.2053517, 2e-7);
  EXPECT_NEAR(hm[1].mid(), 0.3466677, 2e-7);
  EXPECT_NEAR(hm[2].mid(), 0.4479806, 2e-7);
}

TEST(Decomposition, DualRouteOverlaps) {
  const SiteSet a{{3, 0}, {4, 0}, {3, 1}};
  for (Site x : {Site{64, 0}, Site{-5, 2}, Site{3, 2}}) {
    const Bracket via = hit_prob_via_decomposition(x, a, opts());
    const Bracket direct = bracket_infinite(Quantity::Hit, x, a, opts());
    EXPECT_TRUE(via.overlaps(direct)) << x << " " << via << " " << direct;
  }
  EXPECT_THROW(hit_prob_via_decomposition({3, 0}, a, opts()), DomainError);
}

TEST(SrwCapacity, TwoPointSets) {
  EXPECT_TRUE(cap_srw_with_origin(SiteSet{kOrigin, {1, 0}}, opts(1e-4)).contains(0.5));
  for (Site x : {Site{1, 1}, Site{3, 2}, Site{-4, 0}}) {
    const Bracket b = cap_srw_with_origin(SiteSet{kOrigin, x}, opts(1e-4));
    EXPECT_TRUE(b.contains(a(x) / 2.0)) << x << " " << b;
  }
  EXPECT_THROW(cap_srw_with_origin(SiteSet{{1, 0}}, opts()), DomainError);
}

TEST(SrwCapacity, HarmonicMeasureSumsToOne) {
  const auto hm = hm_srw(SiteSet{kOrigin, {3, 0}, {4, 0}, {3, 1}}, 64.0);
  double lo = 0.0, hi = 0.0;
  for (const Bracket& b : hm) {
    lo += b.lower;
    hi += b.upper;
  }
  EXPECT_LE(lo, 1.0 + 1e-9);
  EXPECT_GE(hi, 1.0 - 1e-9);
  EXPECT_THROW(hm_srw(SiteSet{{10, 0}, {0, 0}}, 32.0), DomainError);
}

TEST(CapacityIdentity, IndependentRoutesAgree) {
  for (const SiteSet& s : {SiteSet{{1, 0}}, SiteSet{{1, 1}}, SiteSet{{2, 0}, {0, 2}}, SiteSet{{3, 0}, {4, 0}, {3, 1}}}) {
    const CapacityIdentity id = verify_capacity_identity(s, opts(1e-4));
    EXPECT_TRUE(id.overlap()) << s[0] << " " << id.cap_hat << " " << id.cap_srw;
    EXPECT_LT(id.midpoint_gap(), 0.5 * (id.cap_hat.width() + id.cap_srw.width()) + 1e-12);
  }
}
