#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "condwalk/closed_forms.hpp"
#include "condwalk/potential_theory.hpp"

using namespace condwalk;
using std::numbers::pi;

namespace {

const HatKernel& hat() {
  static const HatKernel h(shared_kernel());
  return h;
}

std::vector<Site> random_states(std::uint32_t seed, int n, int range) {
  std::mt19937 gen(seed);
  std::uniform_int_distribution<int> c(-range, range);
  std::vector<Site> out;
  while (static_cast<int>(out.size()) < n) {
    const Site x{c(gen), c(gen)};
    if (!x.is_origin()) out.push_back(x);
  }
  return out;
}

}  // namespace

TEST(ClosedForms, TransitionKernelValues) {
  EXPECT_NEAR(hat().p_hat({1, 0}, {2, 0}), (4.0 - 8.0 / pi) / 4.0, 1e-14);
  EXPECT_NEAR(hat().p_hat({1, 0}, {1, 1}), 1.0 / pi, 1e-14);
  EXPECT_EQ(hat().p_hat({1, 0}, {0, 0}), 0.0);
  EXPECT_EQ(hat().p_hat({1, 0}, {3, 0}), 0.0);
  EXPECT_THROW(hat().p_hat({0, 0}, {1, 0}), DomainError);
}

TEST(ClosedForms, TransitionKernelIsStochasticAndReversible) {
  // Inside the exact window; a_asym is harmonic only up to its truncation.
  for (Site x : random_states(1, 400, 255)) {
    double s = 0.0;
    for (Site y : neighbours(x)) {
      const double p = hat().p_hat(x, y);
      EXPECT_GE(p, 0.0);
      s += p;
      if (!y.is_origin()) {
        const double ax = hat().a(x), ay = hat().a(y);
        EXPECT_NEAR(ax * ax * p, ay * ay * hat().p_hat(y, x), 1e-12 * ax * ay);
      }
    }
    EXPECT_NEAR(s, 1.0, 1e-12) << x;
  }
}

TEST(ClosedForms, GreenFunctionValues) {
  EXPECT_NEAR(hat().green_hat({1, 0}, {1, 0}), 2.0, 1e-14);
  EXPECT_NEAR(hat().green_hat({1, 0}, {-1, 0}), 8.0 / pi - 2.0, 1e-14);
  EXPECT_NEAR(hat().green_hat({1, 0}, {0, 1}), 2.0 - 4.0 / pi, 1e-14);
  EXPECT_THROW(hat().green_hat({0, 0}, {1, 0}), DomainError);
  EXPECT_THROW(hat().green_hat({1, 0}, {0, 0}), DomainError);
}

TEST(ClosedForms, SymmetrizedGreenFunction) {
  EXPECT_NEAR(hat().g_hat({1, 1}, {1, 1}), pi / 2.0, 1e-14);
  const double a100 = hat().a({100, 0}), a99 = hat().a({99, 0});
  EXPECT_NEAR(hat().g_hat({1, 0}, {100, 0}), (1.0 + a100 - a99) / a100, 1e-14);
  EXPECT_NEAR(hat().g_hat({1, 0}, {100, 0}), 1.0 / a100, 1e-2);
  for (Site x : random_states(2, 100, 40))
    for (Site y : random_states(3, 5, 40)) {
      EXPECT_NEAR(hat().g_hat(x, y), hat().g_hat(y, x), 1e-14);
      const double ay = hat().a(y);
      EXPECT_NEAR(hat().green_hat(x, y), ay * ay * hat().g_hat(x, y), 1e-12);
      EXPECT_NEAR(hat().ell_hat(x, y), hat().green_hat(x, y) / ay, 1e-12);
    }
}

TEST(ClosedForms, EllHatValues) {
  EXPECT_NEAR(hat().ell_hat({1, 0}, {-1, 0}), 8.0 / pi - 2.0, 1e-14);
  // Vanishes at infinity only like 1/a(x): a(x) ell^(x,y) -> a(y).
  EXPECT_NEAR(hat().ell_hat({10000, 0}, {1, 0}), 0.1450869, 1e-6);
  double prev = 1.0;
  for (int n : {100, 1000, 10000, 100000, 1000000}) {
    const double l = hat().ell_hat({n, 0}, {1, 0});
    EXPECT_LT(l, prev) << n;
    EXPECT_NEAR(hat().a({n, 0}) * l, 1.0, 2.0 / n) << n;
    prev = l;
  }
}

TEST(ClosedForms, ReturnProbability) {
  EXPECT_NEAR(hat().return_prob_hat({1, 0}), 0.5, 1e-15);
  EXPECT_NEAR(hat().return_prob_hat({1, 1}), 1.0 - pi / 8.0, 1e-14);
  EXPECT_GT(hat().return_prob_hat({1000, 0}), 0.9);
  EXPECT_LT(hat().return_prob_hat({1000, 0}), 1.0);
  // Geometric number of visits: G^(x,x) = 1 / (1 - return probability).
  for (Site x : random_states(4, 100, 200))
    EXPECT_NEAR(hat().green_hat(x, x), 1.0 / (1.0 - hat().return_prob_hat(x)), 1e-11);
}

TEST(ClosedForms, HittingProbability) {
  EXPECT_NEAR(hat().hit_prob_hat({1, 0}, {-1, 0}), 4.0 / pi - 1.0, 1e-14);
  EXPECT_NEAR(hat().hit_prob_hat({1, 0}, {0, 1}), 1.0 - 2.0 / pi, 1e-14);
  EXPECT_NEAR(hat().hit_prob_hat({1, 0}, {1000, 0}), 0.5, 0.05);
  EXPECT_THROW(hat().hit_prob_hat({1, 0}, {1, 0}), DomainError);
  // First-passage decomposition G^(x,y) = P_x[hit y] G^(y,y), and the
  // probability stays in [0, 1].
  for (Site x : random_states(5, 60, 100))
    for (Site y : random_states(6, 6, 100)) {
      if (x == y) continue;
      const double h = hat().hit_prob_hat(x, y);
      EXPECT_GE(h, 0.0);
      EXPECT_LE(h, 1.0);
      EXPECT_NEAR(hat().green_hat(x, y), h * hat().green_hat(y, y), 1e-11);
    }
}

TEST(ClosedForms, GreenFunctionIsHarmonicOffTheDiagonal) {
  // G^(., y) is p_hat-harmonic away from y, with unit excess at y.
  for (Site y : random_states(7, 8, 30))
    for (Site x : random_states(8, 40, 35)) {
      double m = 0.0;
      for (Site z : neighbours(x))
        if (!z.is_origin()) m += hat().p_hat(x, z) * hat().green_hat(z, y);
      EXPECT_NEAR(m + (x == y ? 1.0 : 0.0), hat().green_hat(x, y), 1e-10);
    }
}

TEST(ClosedForms, EscapeBallLeadingOrder) {
  const LeadingOrder e = hat().escape_ball_leading({200, 0}, 100.0);
  EXPECT_NEAR(e.value, 1.0 - a_real(100.0) / hat().a({200, 0}), 1e-14);
  EXPECT_NEAR(e.value, 0.1002, 5e-4);
  EXPECT_NEAR(e.error_scale, 1.0 / (100.0 * hat().a({200, 0})), 1e-15);
  const LeadingOrder near = hat().escape_ball_leading({101, 0}, 100.0);
  EXPECT_GT(near.value, 0.0);
  EXPECT_LT(near.value, 0.01);
  EXPECT_GT(hat().escape_ball_leading({1000000, 0}, 1.0).value, 0.88);
  EXPECT_THROW(hat().escape_ball_leading({50, 0}, 100.0), DomainError);
  EXPECT_THROW(hat().escape_ball_leading({5, 0}, 0.5), DomainError);
}

TEST(ClosedForms, SrwExitBeforeOriginLeadingOrder) {
  EXPECT_NEAR(hat().srw_exit_before_origin({1, 0}, {0, 0}, 100.0).value, 0.2524541, 1e-6);
  EXPECT_NEAR(hat().srw_exit_before_origin({1, 1}, {0, 0}, 1000.0).value, 0.2346126, 1e-6);
  EXPECT_GE(hat().srw_exit_before_origin({196, 0}, {0, 0}, 200.0).value, 0.95);
  EXPECT_NEAR(hat().srw_exit_before_origin({1, 0}, {3, 4}, 50.0).error_scale, 6.0 / 50.0, 1e-15);
  EXPECT_THROW(hat().srw_exit_before_origin({0, 0}, {0, 0}, 10.0), DomainError);
  EXPECT_THROW(hat().srw_exit_before_origin({1, 0}, {30, 0}, 10.0), DomainError);
  EXPECT_THROW(hat().srw_exit_before_origin({20, 0}, {0, 0}, 10.0), DomainError);
}

TEST(ClosedForms, FarFieldHittingIsInsensitiveToTheReferenceSite) {
  const SiteSet a{{5, 0}, {-5, 0}};
  BracketOptions o;
  o.tol = 1e-4;
  const double cap = cap_hat(a, o).mid();
  const LeadingOrder l = hat().hit_set_far({200, 200}, a, {5, 0}, cap);
  const LeadingOrder r = hat().hit_set_far({200, 200}, a, {-5, 0}, cap);
  EXPECT_LT(std::abs(l.value - r.value), std::max(l.error_scale, r.error_scale));
  // Against the solver.
  const Bracket direct = bracket_infinite(Quantity::Hit, {200, 200}, a, o);
  EXPECT_LT(std::abs(direct.mid() - l.value), l.error_scale + direct.width());
  EXPECT_THROW(hat().hit_set_far({12, 0}, a, {5, 0}, cap), DomainError);
  EXPECT_THROW(hat().hit_set_far({200, 200}, a, {1, 0}, cap), DomainError);
}
