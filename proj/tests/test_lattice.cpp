#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>
#include <sstream>

#include "condwalk/lattice.hpp"

using namespace condwalk;

namespace {

std::set<Site> brute_ball(Site c, double r) {
  std::set<Site> out;
  const int m = static_cast<int>(r) + 2;
  for (int i = -m; i <= m; ++i)
    for (int j = -m; j <= m; ++j)
      if (std::hypot(static_cast<long double>(i), static_cast<long double>(j)) <= r) out.insert({c.x1 + i, c.x2 + j});
  return out;
}

}  // namespace

TEST(Lattice, BallOfRadiusTwoHasThirteenSites) {
  EXPECT_EQ(enumerate_ball(Ball({0, 0}, 2.0)).size(), 13u);
}

TEST(Lattice, BallMatchesBruteForceScan) {
  for (double r : {0.0, 1.0, 1.4142135623730951, 2.5, 5.0, 7.3, 10.0, 31.7}) {
    for (Site c : {Site{0, 0}, Site{3, -2}}) {
      const SiteSet s = enumerate_ball(Ball(c, r));
      const auto ref = brute_ball(c, r);
      ASSERT_EQ(s.size(), ref.size()) << "r=" << r;
      for (Site x : s) EXPECT_TRUE(ref.count(x));
    }
  }
}

TEST(Lattice, SquaredCutoffIsExactNearPerfectSquares) {
  for (std::int64_t k = 1; k < 2000; ++k) {
    for (double r : {std::sqrt(static_cast<double>(k)), std::nextafter(std::sqrt(static_cast<double>(k)), 0.0)}) {
      std::int64_t ref = k + 1;
      while (std::sqrt(static_cast<long double>(ref)) > r) --ref;
      EXPECT_EQ(squared_radius_cutoff(r), ref) << "r=" << r;
    }
  }
  EXPECT_EQ(squared_radius_cutoff(5.0), 25);
  EXPECT_THROW(squared_radius_cutoff(-1.0), DomainError);
}

TEST(Lattice, BoundariesOfUnitBall) {
  const SiteSet a = enumerate_ball(Ball({0, 0}, 1.0));
  ASSERT_EQ(a.size(), 5u);
  const SiteSet in = boundary(a);
  EXPECT_EQ(in, (SiteSet{{1, 0}, {0, 1}, {-1, 0}, {0, -1}}));

  std::set<Site> ext;
  for (int i = -3; i <= 3; ++i)
    for (int j = -3; j <= 3; ++j) {
      const Site x{i, j};
      if (a.contains(x)) continue;
      for (Site y : neighbours(x))
        if (a.contains(y)) ext.insert(x);
    }
  const SiteSet out = external_boundary(a);
  ASSERT_EQ(out.size(), 8u);
  EXPECT_EQ(out.size(), ext.size());
  for (Site x : out) {
    EXPECT_TRUE(ext.count(x));
    const auto n2 = x.norm2();
    EXPECT_TRUE(n2 == 2 || n2 == 4);
  }
}

TEST(Lattice, BoundaryInvariantsOnRandomSets) {
  std::mt19937 gen(7);
  std::uniform_int_distribution<int> coord(-6, 6);
  for (int trial = 0; trial < 50; ++trial) {
    std::set<Site> raw;
    const int n = 1 + trial % 12;
    while (static_cast<int>(raw.size()) < n) raw.insert({coord(gen), coord(gen)});
    const SiteSet a(std::vector<Site>(raw.begin(), raw.end()));
    for (Site x : boundary(a)) {
      EXPECT_TRUE(a.contains(x));
      bool open = false;
      for (Site y : neighbours(x)) open |= !a.contains(y);
      EXPECT_TRUE(open);
    }
    for (Site x : external_boundary(a)) {
      EXPECT_FALSE(a.contains(x));
      bool touches = false;
      for (Site y : neighbours(x)) touches |= a.contains(y);
      EXPECT_TRUE(touches);
    }
    double d = 0.0;
    for (Site x : a)
      for (Site y : a) d = std::max(d, (x - y).norm());
    EXPECT_DOUBLE_EQ(a.diameter(), d);
  }
}

TEST(Lattice, SiteSetRejectsDuplicatesAndSorts) {
  EXPECT_THROW((SiteSet{{1, 0}, {1, 0}}), DomainError);
  const SiteSet s{{3, 1}, {-2, 0}, {3, 0}};
  EXPECT_EQ(s[0], (Site{-2, 0}));
  EXPECT_TRUE(s.contains({3, 1}));
  EXPECT_EQ(s.index_of({3, 0}), 1);
  EXPECT_EQ(s.index_of({9, 9}), -1);
  EXPECT_THROW((SiteSet{{0, 0}, {1, 0}}.require_origin_free()), DomainError);
  EXPECT_THROW(SiteSet{}.require_origin_free(), DomainError);
  EXPECT_EQ(s.with({0, 0}).size(), 4u);
  EXPECT_EQ(s.with({3, 0}).size(), 3u);
}

TEST(Lattice, DistanceAndDiameter) {
  const SiteSet a{{3, 0}, {4, 0}, {3, 1}};
  EXPECT_DOUBLE_EQ(diam(a), std::sqrt(2.0));
  EXPECT_DOUBLE_EQ(dist({64, 0}, a), 60.0);
  EXPECT_DOUBLE_EQ(dist({3, 5}, a), 4.0);
}

TEST(Lattice, DihedralGroupPreservesNorm) {
  const Site s{5, -2};
  std::set<Site> images;
  for (int k = 0; k < 8; ++k) {
    EXPECT_EQ(dihedral(s, k).norm2(), s.norm2());
    images.insert(dihedral(s, k));
  }
  EXPECT_EQ(images.size(), 8u);
  EXPECT_EQ(dihedral(s, 0), s);
}

TEST(Lattice, SitesFileFormat) {
  std::istringstream in("# a comment\n3 0\n\n4 0  # trailing comment\n3 1\n");
  EXPECT_EQ(read_sites(in), (SiteSet{{3, 0}, {4, 0}, {3, 1}}));
  std::istringstream bad("3\n");
  EXPECT_THROW(read_sites(bad), Error);
  std::istringstream junk("3 4 5\n");
  EXPECT_THROW(read_sites(junk), Error);
  std::ostringstream out;
  write_sites(out, SiteSet{{1, 2}, {-3, 4}});
  std::istringstream back(out.str());
  EXPECT_EQ(read_sites(back), (SiteSet{{1, 2}, {-3, 4}}));
  EXPECT_EQ(parse_site("-3,7"), (Site{-3, 7}));
  EXPECT_THROW(parse_site("3;7"), Error);
}
