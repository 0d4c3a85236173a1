#pragma once

// Geometry of the square lattice Z^2: sites, finite site sets, balls,
// boundaries and distances. Ball membership and set enumeration use exact
// integer arithmetic on squared norms, so every enumeration is bit-reproducible.

#include <algorithm>
#include <array>
#include <cmath>
#include <compare>
#include <cstdint>
#include <fstream>
#include <functional>
#include <istream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "condwalk/error.hpp"

namespace condwalk {

struct Site {
  std::int32_t x1 = 0;
  std::int32_t x2 = 0;

  constexpr Site() = default;
  constexpr Site(std::int32_t a, std::int32_t b) : x1(a), x2(b) {}

  constexpr auto operator<=>(const Site&) const = default;

  constexpr Site operator+(Site o) const { return {x1 + o.x1, x2 + o.x2}; }
  constexpr Site operator-(Site o) const { return {x1 - o.x1, x2 - o.x2}; }
  constexpr Site operator-() const { return {-x1, -x2}; }

  constexpr std::int64_t norm2() const {
    return std::int64_t{x1} * x1 + std::int64_t{x2} * x2;
  }
  // sqrt of an exactly representable integer is correctly rounded.
  double norm() const { return std::sqrt(static_cast<double>(norm2())); }
  constexpr std::int32_t norm_inf() const {
    return std::max(x1 < 0 ? -x1 : x1, x2 < 0 ? -x2 : x2);
  }
  constexpr bool is_origin() const { return x1 == 0 && x2 == 0; }
};

inline std::ostream& operator<<(std::ostream& os, Site s) {
  return os << '(' << s.x1 << ',' << s.x2 << ')';
}

inline constexpr Site kOrigin{0, 0};

/// Nearest-neighbour offsets in the fixed order E, N, W, S.
inline constexpr std::array<Site, 4> kNeighbourOffsets{
    Site{1, 0}, Site{0, 1}, Site{-1, 0}, Site{0, -1}};

inline std::array<Site, 4> neighbours(Site x) {
  return {x + kNeighbourOffsets[0], x + kNeighbourOffsets[1],
          x + kNeighbourOffsets[2], x + kNeighbourOffsets[3]};
}

constexpr bool adjacent(Site x, Site y) {
  const Site d = x - y;
  return d.norm2() == 1;
}

/// The eight symmetries of Z^2 fixing the origin; index 0 is the identity.
constexpr Site dihedral(Site s, int k) {
  switch (k & 7) {
    case 0: return {s.x1, s.x2};
    case 1: return {-s.x2, s.x1};
    case 2: return {-s.x1, -s.x2};
    case 3: return {s.x2, -s.x1};
    case 4: return {s.x2, s.x1};
    case 5: return {-s.x1, s.x2};
    case 6: return {-s.x2, -s.x1};
    default: return {s.x1, -s.x2};
  }
}

/// Largest integer k with k <= r^2, i.e. the squared-norm cutoff of B(., r).
inline std::int64_t squared_radius_cutoff(double r) {
  if (!(r >= 0.0)) throw DomainError("negative radius");
  auto k = static_cast<std::int64_t>(std::floor(r * r));
  // Repair double rounding of r*r in either direction.
  while (k > 0 && std::sqrt(static_cast<long double>(k)) > r) --k;
  while (std::sqrt(static_cast<long double>(k + 1)) <= r) ++k;
  return k;
}

struct Ball {
  Site center{};
  double radius = 0.0;

  Ball() = default;
  Ball(Site c, double r) : center(c), radius(r), cutoff_(squared_radius_cutoff(r)) {}

  bool contains(Site y) const { return (y - center).norm2() <= cutoff_; }
  std::int64_t squared_cutoff() const { return cutoff_; }

 private:
  std::int64_t cutoff_ = 0;
};

/// Finite set of distinct sites, stored in lexicographic order.
class SiteSet {
 public:
  SiteSet() = default;

  explicit SiteSet(std::vector<Site> sites) : sites_(std::move(sites)) {
    std::sort(sites_.begin(), sites_.end());
    if (std::adjacent_find(sites_.begin(), sites_.end()) != sites_.end())
      throw DomainError("duplicate site in SiteSet");
    diameter_ = compute_diameter();
  }

  SiteSet(std::initializer_list<Site> sites) : SiteSet(std::vector<Site>(sites)) {}

  static SiteSet from_sorted_unique(std::vector<Site> sites) {
    SiteSet s;
    s.sites_ = std::move(sites);
    s.diameter_ = s.compute_diameter();
    return s;
  }

  std::size_t size() const { return sites_.size(); }
  bool empty() const { return sites_.empty(); }
  bool contains(Site s) const {
    return std::binary_search(sites_.begin(), sites_.end(), s);
  }
  /// Position of s in lexicographic order, or -1.
  std::ptrdiff_t index_of(Site s) const {
    auto it = std::lower_bound(sites_.begin(), sites_.end(), s);
    if (it == sites_.end() || *it != s) return -1;
    return it - sites_.begin();
  }
  const Site& operator[](std::size_t i) const { return sites_[i]; }
  auto begin() const { return sites_.begin(); }
  auto end() const { return sites_.end(); }
  std::span<const Site> sites() const { return sites_; }

  /// Euclidean diameter; 0 for singletons.
  double diameter() const {
    if (sites_.empty()) throw DomainError("diam of empty set");
    return diameter_;
  }
  bool contains_origin() const { return contains(kOrigin); }
  std::int32_t max_norm_inf() const {
    std::int32_t m = 0;
    for (Site s : sites_) m = std::max(m, s.norm_inf());
    return m;
  }
  double max_norm() const {
    double m = 0.0;
    for (Site s : sites_) m = std::max(m, s.norm());
    return m;
  }

  SiteSet with(Site s) const {
    if (contains(s)) return *this;
    std::vector<Site> v = sites_;
    v.insert(std::lower_bound(v.begin(), v.end(), s), s);
    return from_sorted_unique(std::move(v));
  }

  /// Throws unless the set is usable as a target of the conditioned walk.
  void require_origin_free() const {
    if (sites_.empty()) throw DomainError("empty set");
    if (contains_origin()) throw DomainError("target set contains the origin");
  }

  bool operator==(const SiteSet& o) const { return sites_ == o.sites_; }

 private:
  // Diameter is attained on the convex hull; the sites are already sorted,
  // which is what the monotone-chain construction needs.
  double compute_diameter() const {
    if (sites_.size() < 2) return 0.0;
    auto cross = [](Site o, Site a, Site b) {
      return std::int64_t{a.x1 - o.x1} * (b.x2 - o.x2) -
             std::int64_t{a.x2 - o.x2} * (b.x1 - o.x1);
    };
    std::vector<Site> hull(2 * sites_.size());
    std::size_t k = 0;
    for (Site p : sites_) {
      while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
      hull[k++] = p;
    }
    for (std::size_t i = sites_.size() - 1, t = k + 1; i-- > 0;) {
      Site p = sites_[i];
      while (k >= t && cross(hull[k - 2], hull[k - 1], p) <= 0) --k;
      hull[k++] = p;
    }
    hull.resize(k > 1 ? k - 1 : k);
    std::int64_t best = 0;
    for (std::size_t i = 0; i < hull.size(); ++i)
      for (std::size_t j = i + 1; j < hull.size(); ++j)
        best = std::max(best, (hull[i] - hull[j]).norm2());
    return std::sqrt(static_cast<double>(best));
  }

  std::vector<Site> sites_;
  double diameter_ = 0.0;
};

/// inf over y in A of |x - y|.
inline double dist(Site x, const SiteSet& a) {
  if (a.empty()) throw DomainError("empty set");
  std::int64_t best = INT64_MAX;
  for (Site y : a) best = std::min(best, (x - y).norm2());
  return std::sqrt(static_cast<double>(best));
}

inline double diam(const SiteSet& a) { return a.diameter(); }

/// Sites of A having a neighbour outside A.
inline SiteSet boundary(const SiteSet& a) {
  std::vector<Site> out;
  for (Site x : a) {
    for (Site y : neighbours(x)) {
      if (!a.contains(y)) {
        out.push_back(x);
        break;
      }
    }
  }
  return SiteSet::from_sorted_unique(std::move(out));
}

/// Sites outside A having a neighbour in A.
inline SiteSet external_boundary(const SiteSet& a) {
  std::vector<Site> out;
  for (Site x : a)
    for (Site y : neighbours(x))
      if (!a.contains(y)) out.push_back(y);
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return SiteSet::from_sorted_unique(std::move(out));
}

inline constexpr std::size_t kDefaultSiteBudget = 50'000'000;

/// All lattice sites of the ball, in lexicographic order.
inline SiteSet enumerate_ball(const Ball& b, std::size_t budget = kDefaultSiteBudget) {
  if (b.radius < 0.0) throw DomainError("negative radius");
  const double estimate = 3.15 * (b.radius + 1.0) * (b.radius + 1.0);
  if (estimate > static_cast<double>(budget)) throw Error("budget exceeded");
  const std::int64_t cut = b.squared_cutoff();
  const auto r = static_cast<std::int32_t>(std::floor(b.radius));
  std::vector<Site> out;
  out.reserve(static_cast<std::size_t>(estimate));
  for (std::int32_t d1 = -r; d1 <= r; ++d1) {
    const std::int64_t rest = cut - std::int64_t{d1} * d1;
    auto h = static_cast<std::int32_t>(std::sqrt(static_cast<double>(rest)));
    while (std::int64_t{h} * h > rest) --h;
    while (std::int64_t{h + 1} * (h + 1) <= rest) ++h;
    for (std::int32_t d2 = -h; d2 <= h; ++d2)
      out.push_back({b.center.x1 + d1, b.center.x2 + d2});
  }
  if (out.size() > budget) throw Error("budget exceeded");
  return SiteSet::from_sorted_unique(std::move(out));
}

/// Reads the "x1 x2 per line, '#' comments" site format.
inline SiteSet read_sites(std::istream& in) {
  std::vector<Site> v;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto h = line.find('#'); h != std::string::npos) line.resize(h);
    std::istringstream ls(line);
    long long a = 0, b = 0;
    if (!(ls >> a)) continue;
    if (!(ls >> b)) throw Error("malformed site on line " + std::to_string(lineno));
    std::string junk;
    if (ls >> junk) throw Error("trailing text on line " + std::to_string(lineno));
    v.push_back({static_cast<std::int32_t>(a), static_cast<std::int32_t>(b)});
  }
  return SiteSet(std::move(v));
}

inline SiteSet read_sites_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw Error("cannot open " + path);
  return read_sites(f);
}

inline void write_sites(std::ostream& os, const SiteSet& s) {
  for (Site x : s) os << x.x1 << ' ' << x.x2 << '\n';
}

/// Parses "X1,X2".
inline Site parse_site(const std::string& text) {
  auto comma = text.find(',');
  if (comma == std::string::npos) throw Error("expected X1,X2 but got '" + text + "'");
  try {
    return {static_cast<std::int32_t>(std::stol(text.substr(0, comma))),
            static_cast<std::int32_t>(std::stol(text.substr(comma + 1)))};
  } catch (const std::exception&) {
    throw Error("expected X1,X2 but got '" + text + "'");
  }
}

}  // namespace condwalk

template <>
struct std::hash<condwalk::Site> {
  std::size_t operator()(condwalk::Site s) const noexcept {
    return std::hash<std::uint64_t>{}((std::uint64_t(std::uint32_t(s.x1)) << 32) |
                                      std::uint32_t(s.x2));
  }
};
