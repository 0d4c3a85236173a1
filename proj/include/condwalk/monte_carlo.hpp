#pragma once

// Trajectory sampling for SRW and the conditioned walk.
//
// A transition from x draws one 64-bit uniform U and moves in direction
// d = #{k : U >= t_k} of (E, N, W, S), where t_k are the cumulative
// neighbour weights a(x+e_1) + ... + a(x+e_k) over their sum (1/4 steps for
// SRW). The comparison is exact: U and t_k 2^64 are both representable in
// long double. The precomputed arena stores the top 32 bits of each
// threshold and falls back to the exact comparison on ties, so arena walks
// are bit-identical to step().

#include <boost/random/binomial_distribution.hpp>

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <thread>
#include <vector>

#include "condwalk/closed_forms.hpp"
#include "condwalk/error.hpp"
#include "condwalk/hitting.hpp"
#include "condwalk/kernel.hpp"
#include "condwalk/lattice.hpp"
#include "condwalk/rng.hpp"
#include "condwalk/solver.hpp"

namespace condwalk {

using Thresholds = std::array<double, 3>;

inline Thresholds transition_thresholds(Chain chain, Site x, const PotentialKernel& a) {
  if (chain == Chain::Srw) return {0.25, 0.5, 0.75};
  if (x.is_origin()) throw DomainError("origin is not a state of the conditioned walk");
  const auto nb = neighbours(x);
  const double e = a(nb[0]), n = a(nb[1]), w = a(nb[2]), s = a(nb[3]);
  const double total = e + n + w + s;
  return {e / total, (e + n) / total, (e + n + w) / total};
}

/// Direction index in E, N, W, S order for the 64-bit uniform u.
inline int direction(std::uint64_t u, const Thresholds& t) {
  const long double v = static_cast<long double>(u);
  int d = 0;
  for (double tk : t) d += v >= std::ldexp(static_cast<long double>(tk), 64);
  return d;
}

/// One exact transition of the chain.
inline Site step(Chain chain, Site x, Xoshiro256& rng, const PotentialKernel& a) {
  return x + kNeighbourOffsets[direction(rng(), transition_thresholds(chain, x, a))];
}

/// Precomputed transition data and stop tags on the box [-L, L]^2.
class WalkArena {
 public:
  static constexpr std::int32_t kFree = 0;
  static constexpr std::int32_t kEdge = -1;
  static constexpr std::int32_t kOrigin = -2;

  WalkArena(Chain chain, std::int32_t half_width, const std::function<std::int32_t(Site)>& tag)
      : chain_(chain), l_(half_width), w_(2 * half_width + 1) {
    if (half_width < 2) throw DomainError("walk arena too small");
    if (static_cast<double>(w_) * w_ > 1e8) throw Error("budget exceeded");
    kernel_ = shared_kernel(half_width + 1);
    const std::size_t n = static_cast<std::size_t>(w_) * w_;
    cells_.resize(n);
    exact_.resize(n);
    for (std::int32_t x2 = -l_; x2 <= l_; ++x2) {
      for (std::int32_t x1 = -l_; x1 <= l_; ++x1) {
        const Site x{x1, x2};
        const std::size_t c = cell(x);
        Cell& out = cells_[c];
        if (x1 == -l_ || x1 == l_ || x2 == -l_ || x2 == l_) {
          out.tag = kEdge;
          continue;
        }
        if (chain == Chain::Hat && x.is_origin()) {
          out.tag = kOrigin;
          continue;
        }
        exact_[c] = transition_thresholds(chain, x, *kernel_);
        for (int k = 0; k < 3; ++k) {
          const long double scaled = std::ldexp(static_cast<long double>(exact_[c][k]), 32);
          out.hi[k] = static_cast<std::uint32_t>(std::min(scaled, 4294967295.0L));
        }
        out.tag = tag(x);
      }
    }
  }

  Chain chain() const { return chain_; }
  std::int32_t half_width() const { return l_; }
  bool in_box(Site x) const { return x.norm_inf() <= l_; }
  std::size_t cell(Site x) const {
    return static_cast<std::size_t>(x.x2 + l_) * w_ + static_cast<std::size_t>(x.x1 + l_);
  }
  Site site(std::size_t c) const {
    return {static_cast<std::int32_t>(c % w_) - l_, static_cast<std::int32_t>(c / w_) - l_};
  }
  std::int32_t tag(std::size_t c) const { return cells_[c].tag; }

  std::size_t advance(std::size_t c, std::uint64_t u) const {
    const Cell& e = cells_[c];
    const auto hi = static_cast<std::uint32_t>(u >> 32);
    int d;
    if (hi == e.hi[0] || hi == e.hi[1] || hi == e.hi[2]) [[unlikely]] {
      d = direction(u, exact_[c]);
    } else {
      d = (hi > e.hi[0]) + (hi > e.hi[1]) + (hi > e.hi[2]);
    }
    return c + offsets_[d];
  }

 private:
  struct alignas(16) Cell {
    std::uint32_t hi[3] = {0, 0, 0};
    std::int32_t tag = kFree;
  };

  Chain chain_;
  std::int32_t l_, w_;
  std::shared_ptr<const PotentialKernel> kernel_;
  std::vector<Cell> cells_;
  std::vector<Thresholds> exact_;
  std::array<std::ptrdiff_t, 4> offsets_{1, 2 * l_ + 1, -1, -(2 * l_ + 1)};
};

struct WalkOutcome {
  std::size_t cell = 0;
  std::int64_t steps = 0;
  bool exhausted = false;
};

/// Walks from `start` until on_tag(tag, cell, t) returns true; on_tag is
/// called whenever the current cell carries a nonzero tag (time 0 included).
/// `each` sees every visited cell.
template <class OnTag, class Each>
WalkOutcome run_walk(const WalkArena& arena, Site start, Xoshiro256& rng, std::int64_t max_steps,
                     OnTag&& on_tag, Each&& each) {
  if (!arena.in_box(start)) throw DomainError("start outside the walk arena");
  WalkOutcome out;
  std::size_t c = arena.cell(start);
  std::int64_t t = 0;
  for (;;) {
    each(c, t);
    const std::int32_t tag = arena.tag(c);
    if (tag != WalkArena::kFree) {
      if (tag == WalkArena::kEdge) throw Error("walk left the simulation box");
      if (tag == WalkArena::kOrigin) throw Error("conditioned walk visited the origin");
      if (on_tag(tag, c, t)) break;
    }
    if (t == max_steps) {
      out.exhausted = true;
      break;
    }
    c = arena.advance(c, rng());
    ++t;
  }
  out.cell = c;
  out.steps = t;
  return out;
}

template <class OnTag>
WalkOutcome run_walk(const WalkArena& arena, Site start, Xoshiro256& rng, std::int64_t max_steps,
                     OnTag&& on_tag) {
  return run_walk(arena, start, rng, max_steps, std::forward<OnTag>(on_tag), [](std::size_t, std::int64_t) {});
}

inline int resolve_threads(int threads) {
  if (threads > 0) return threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

/// results[k] = f(k) for k < n, computed by a pool of threads pulling
/// fixed-size blocks; the output does not depend on the thread count.
template <class R, class F>
std::vector<R> map_replicas(std::int64_t n, int threads, F&& f) {
  std::vector<R> out(static_cast<std::size_t>(n));
  constexpr std::int64_t kBlock = 64;
  std::atomic<std::int64_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    try {
      for (;;) {
        const std::int64_t b = next.fetch_add(kBlock);
        if (b >= n) return;
        for (std::int64_t k = b; k < std::min(n, b + kBlock); ++k) out[k] = f(k);
      }
    } catch (...) {
      std::lock_guard lock(failure_mu);
      if (!failure) failure = std::current_exception();
      next = n;
    }
  };
  const int t = std::min<std::int64_t>(resolve_threads(threads), std::max<std::int64_t>(1, n / kBlock));
  if (t <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int i = 0; i < t; ++i) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

/// Pairwise (cascade) summation.
inline double pairwise_sum(std::span<const double> v) {
  if (v.size() <= 16) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
  }
  const std::size_t h = v.size() / 2;
  return pairwise_sum(v.subspan(0, h)) + pairwise_sum(v.subspan(h));
}

struct Estimate {
  double mean = 0.0;
  double stderr_ = 0.0;  // sample standard deviation / sqrt(n)
  std::int64_t n = 0;
  double truncation_bias_bound = 0.0;
};

inline Estimate summarize(std::span<const double> samples, double bias = 0.0) {
  Estimate e;
  e.n = static_cast<std::int64_t>(samples.size());
  e.truncation_bias_bound = bias;
  if (samples.empty()) return e;
  e.mean = pairwise_sum(samples) / static_cast<double>(e.n);
  if (e.n > 1) {
    std::vector<double> dev(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) dev[i] = (samples[i] - e.mean) * (samples[i] - e.mean);
    e.stderr_ = std::sqrt(pairwise_sum(dev) / static_cast<double>(e.n - 1) / static_cast<double>(e.n));
  }
  return e;
}

struct WalkConfig {
  Chain chain = Chain::Hat;
  double truncation_radius = 512.0;
  std::int64_t max_steps = 0;  // 0: 16 R^2
  std::uint64_t seed = 1;
  std::int64_t replicas = 100000;
  int threads = 0;  // 0: hardware concurrency

  std::int64_t step_cap() const {
    const double r = truncation_radius;
    const auto floor = static_cast<std::int64_t>(std::ceil(16.0 * r * r));
    return max_steps > 0 ? max_steps : floor;
  }

  void validate(std::initializer_list<Site> sites_of_interest) const {
    if (!(truncation_radius >= 2.0)) throw DomainError("truncation radius must be >= 2");
    if (replicas < 1) throw DomainError("replicas must be >= 1");
    if (step_cap() < static_cast<std::int64_t>(16.0 * truncation_radius * truncation_radius))
      throw DomainError("max_steps must be >= 16 R^2");
    for (Site s : sites_of_interest)
      if (truncation_radius < 8.0 * s.norm())
        throw DomainError("truncation radius must be >= 8 |site| for every site of interest");
  }
};

/// Leading-order bound on sup_{|z| > R} P^_z[ever hit B(r)]: (a(r) + kappa/r)/a(R).
inline double return_to_ball_bound(double r, double big_r, double kappa = 2.0) {
  r = std::max(r, 1.0);
  const double denom = a_real(big_r) - 0.1 / (big_r * big_r);
  return std::min(1.0, (a_real(r) + kappa / r) / denom);
}

namespace detail {

// Experiment tags for stream derivation.
enum StreamTag : std::uint64_t {
  kGreenStream = 1,
  kEntranceStream = 2,
  kSrwRejectionStream = 3,
  kHatPathStream = 4,
  kBootstrapStream = 5,
  kAnnulusStream = 6,
  kDiskStream = 7,
};

inline void check_exhaustion(std::int64_t exhausted, std::int64_t n) {
  if (static_cast<double>(exhausted) > 1e-3 * static_cast<double>(n))
    throw Error("max_steps exhausted in more than 0.1% of replicas; raise the step cap");
}

inline std::int32_t box_for(double radius) { return static_cast<std::int32_t>(std::ceil(radius)) + 2; }

// Sites outside B(R) with a neighbour inside: where a walk leaving B(R) lands.
inline std::vector<Site> exit_layer(double radius) {
  const Ball ball(kOrigin, radius);
  const auto r = static_cast<std::int32_t>(std::floor(radius)) + 1;
  std::vector<Site> out;
  for (std::int32_t x1 = -r; x1 <= r; ++x1) {
    for (std::int32_t x2 = -r; x2 <= r; ++x2) {
      const Site z{x1, x2};
      if (ball.contains(z)) continue;
      for (Site w : neighbours(z)) {
        if (ball.contains(w)) {
          out.push_back(z);
          break;
        }
      }
    }
  }
  return out;
}

// sup over the exit layer of B(R) of P^_z[ever hit A], from the exact
// path-weight identity P^_z[hit A at y] = a(y) H_{A u {0}}(z, y) / a(z).
inline double far_hit_sup(const SiteSet& set, double radius) {
  const auto kernel = shared_kernel(static_cast<std::int32_t>(radius + set.max_norm()) + 4);
  const SiteSet b = set.with(kOrigin);
  const SrwHitting srw(*kernel, b);
  const auto& a = *kernel;
  double sup = 0.0;
  for (Site z : exit_layer(radius)) {
    double p = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i)
      if (!b[i].is_origin()) p += a(b[i]) * (srw.hit(z, i) + srw.hit_error(z, i));
    sup = std::max(sup, p / (a(z) - a.error_bound(z)));
  }
  return std::min(1.0, sup);
}

}  // namespace detail

/// Mean visits to each y (time 0 included) by the conditioned walk from x
/// before it leaves B(R). The bias bound covers visits after leaving:
/// G^(y,y) times the largest chance to come back to y from outside B(R).
inline std::vector<Estimate> estimate_green_hat(Site x, const std::vector<Site>& ys, const WalkConfig& cfg) {
  if (cfg.chain != Chain::Hat) throw DomainError("estimate_green_hat samples the conditioned walk");
  if (x.is_origin()) throw DomainError("origin is not a state");
  for (Site y : ys) {
    if (y.is_origin()) throw DomainError("origin is not a state");
    cfg.validate({x, y});
  }
  if (SiteSet(std::vector<Site>(ys.begin(), ys.end())).size() != ys.size())
    throw DomainError("duplicate target");
  const double r = cfg.truncation_radius;
  const Ball ball(kOrigin, r);
  const WalkArena arena(Chain::Hat, detail::box_for(r), [&](Site z) -> std::int32_t {
    if (!ball.contains(z)) return 1;
    for (std::size_t k = 0; k < ys.size(); ++k)
      if (z == ys[k]) return static_cast<std::int32_t>(2 + k);
    return 0;
  });
  const std::size_t m = ys.size();
  const std::int64_t cap = cfg.step_cap();
  struct Sample {
    std::vector<double> visits;
    bool exhausted = false;
  };
  const auto samples = map_replicas<Sample>(cfg.replicas, cfg.threads, [&](std::int64_t k) {
    Xoshiro256 rng = replica_stream(cfg.seed, detail::kGreenStream, static_cast<std::uint64_t>(k));
    Sample s;
    s.visits.assign(m, 0.0);
    const WalkOutcome o = run_walk(arena, x, rng, cap, [&](std::int32_t tag, std::size_t, std::int64_t) {
      if (tag == 1) return true;
      s.visits[tag - 2] += 1.0;
      return false;
    });
    s.exhausted = o.exhausted;
    return s;
  });
  std::int64_t exhausted = 0;
  for (const auto& s : samples) exhausted += s.exhausted;
  detail::check_exhaustion(exhausted, cfg.replicas);

  const HatKernel hat(shared_kernel());
  std::vector<Estimate> out;
  std::vector<double> col(samples.size());
  for (std::size_t j = 0; j < m; ++j) {
    for (std::size_t k = 0; k < samples.size(); ++k) col[k] = samples[k].visits[j];
    const double bias = hat.green_hat(ys[j], ys[j]) * detail::far_hit_sup(SiteSet{ys[j]}, r);
    out.push_back(summarize(col, bias));
  }
  return out;
}

struct EntranceEstimate {
  std::vector<Estimate> conditional;  // in set order
  std::int64_t hits = 0;
  std::int64_t replicas = 0;
};

/// Empirical first-entrance distribution on A conditioned on hitting A
/// before leaving B(R); paths leaving B(R) count as misses.
inline EntranceEstimate estimate_entrance(Site x, const SiteSet& set, const WalkConfig& cfg) {
  set.require_origin_free();
  if (set.contains(x)) throw DomainError("x must lie outside A");
  if (cfg.chain == Chain::Hat && x.is_origin()) throw DomainError("origin is not a state");
  cfg.validate({x});
  if (cfg.truncation_radius < 8.0 * set.max_norm()) throw DomainError("truncation radius must be >= 8 max|A|");
  const double r = cfg.truncation_radius;
  const Ball ball(kOrigin, r);
  const WalkArena arena(cfg.chain, detail::box_for(r), [&](Site z) -> std::int32_t {
    if (!ball.contains(z)) return 1;
    const auto i = set.index_of(z);
    return i >= 0 ? static_cast<std::int32_t>(2 + i) : 0;
  });
  const std::int64_t cap = cfg.step_cap();
  struct Sample {
    std::int32_t entry = -1;
    bool exhausted = false;
  };
  const auto samples = map_replicas<Sample>(cfg.replicas, cfg.threads, [&](std::int64_t k) {
    Xoshiro256 rng = replica_stream(cfg.seed, detail::kEntranceStream, static_cast<std::uint64_t>(k));
    Sample s;
    const WalkOutcome o = run_walk(arena, x, rng, cap, [&](std::int32_t tag, std::size_t, std::int64_t) {
      if (tag >= 2) s.entry = tag - 2;
      return true;
    });
    s.exhausted = o.exhausted;
    return s;
  });
  std::int64_t exhausted = 0, hits = 0;
  std::vector<std::int64_t> counts(set.size(), 0);
  for (const auto& s : samples) {
    exhausted += s.exhausted;
    if (s.entry >= 0) {
      ++hits;
      ++counts[s.entry];
    }
  }
  detail::check_exhaustion(exhausted, cfg.replicas);
  if (hits < 100) throw Error("insufficient conditioning events");

  EntranceEstimate out;
  out.hits = hits;
  out.replicas = cfg.replicas;
  const double p_hit = static_cast<double>(hits) / static_cast<double>(cfg.replicas);
  // A path that leaves B(R) enters A later with probability at most q, so
  // each conditional frequency moves by at most (1 - p) q / p. SRW is
  // recurrent: the truncation is not small.
  const double bias = cfg.chain == Chain::Hat
                          ? (1.0 - p_hit) * detail::far_hit_sup(set, r) / p_hit
                          : 1.0;
  std::vector<double> ind(static_cast<std::size_t>(hits));
  for (std::size_t j = 0; j < set.size(); ++j) {
    std::size_t i = 0;
    for (const auto& s : samples)
      if (s.entry >= 0) ind[i++] = s.entry == static_cast<std::int32_t>(j) ? 1.0 : 0.0;
    out.conditional.push_back(summarize(ind, std::min(1.0, bias)));
  }
  return out;
}

/// Half-open angular sector [k pi/4, (k+1) pi/4) containing z != 0.
inline int octant_of(Site z) {
  const std::int32_t x = z.x1, y = z.x2;
  if (z.is_origin()) throw DomainError("origin has no octant");
  if (y >= 0 && x > 0) return y < x ? 0 : 1;
  if (x <= 0 && y > 0) return -x < y ? 2 : 3;
  if (y <= 0 && x < 0) return -y < -x ? 4 : 5;
  return x < -y ? 6 : 7;
}

enum class PathFunctional { ExitOctant, ReturnsToStart, MaxNormBeforeReturn, Constant };

struct AbsContReport {
  std::vector<double> p_srw;  // conditioned SRW
  std::vector<double> p_hat;  // conditioned walk
  double tv = 0.0;
  double tv_sd = 0.0;        // bootstrap sd of the TV estimate
  double null_mean = 0.0;    // TV estimate under a common law (pooled bootstrap)
  double null_sd = 0.0;
  std::int64_t accepted = 0;
  std::int64_t attempts = 0;
  std::int64_t n_hat = 0;
  double acceptance() const { return static_cast<double>(accepted) / static_cast<double>(attempts); }
  /// TV in excess of its null-law mean plus three null sds; 0 when no gap
  /// is resolved at this sample size.
  double detected_gap() const { return std::max(0.0, tv - null_mean - 3.0 * null_sd); }
  bool consistent() const { return tv <= null_mean + 3.0 * null_sd; }
};

namespace detail {

inline double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

inline std::vector<double> multinomial_frequencies(std::int64_t n, const std::vector<double>& p, Xoshiro256& rng) {
  std::vector<double> out(p.size(), 0.0);
  std::int64_t left = n;
  double mass = 1.0;
  for (std::size_t i = 0; i + 1 < p.size() && left > 0; ++i) {
    const double q = mass > 0.0 ? std::clamp(p[i] / mass, 0.0, 1.0) : 0.0;
    boost::random::binomial_distribution<std::int64_t, double> bin(left, q);
    const std::int64_t c = bin(rng);
    out[i] = static_cast<double>(c) / static_cast<double>(n);
    left -= c;
    mass -= p[i];
  }
  if (!p.empty()) out.back() = static_cast<double>(left) / static_cast<double>(n);
  return out;
}

}  // namespace detail

/// Compares SRW conditioned to reach the boundary of B(R) before 0
/// (rejection sampling) with the conditioned walk stopped on that boundary,
/// through the law of a path functional.
inline AbsContReport abs_continuity_check(Site x, double radius, PathFunctional functional,
                                          const WalkConfig& cfg, int bootstrap = 200) {
  if (x.is_origin()) throw DomainError("x must differ from the origin");
  const Ball ball(kOrigin, radius);
  if (!ball.contains(x)) throw DomainError("x must lie in B(R)");
  if (cfg.replicas < 1) throw DomainError("replicas must be >= 1");
  const SiteSet bdry = boundary(enumerate_ball(ball));
  const auto r_int = static_cast<std::int32_t>(std::floor(radius));
  std::size_t categories = 1;
  switch (functional) {
    case PathFunctional::ExitOctant: categories = 8; break;
    case PathFunctional::ReturnsToStart: categories = 31; break;
    case PathFunctional::MaxNormBeforeReturn: categories = static_cast<std::size_t>(r_int) + 2; break;
    case PathFunctional::Constant: categories = 1; break;
  }
  auto tags = [&](Site z) -> std::int32_t {
    if (!ball.contains(z)) return 0;  // never reached: the walk stops on the boundary
    if (z.is_origin()) return 1;
    if (bdry.contains(z)) return 2;
    if (z == x) return 3;
    return 0;
  };
  const std::int32_t box = r_int + 3;
  const WalkArena srw(Chain::Srw, box, tags);
  const WalkArena hat(Chain::Hat, box, tags);
  const std::int64_t cap = static_cast<std::int64_t>(16.0 * (radius + 1) * (radius + 1)) + 1000;

  struct Path {
    bool accepted = false;
    std::int32_t category = 0;
  };
  auto sample = [&](const WalkArena& arena, std::uint64_t tag, std::int64_t k) {
    Xoshiro256 rng = replica_stream(cfg.seed, tag, static_cast<std::uint64_t>(k));
    Path p;
    std::int64_t returns = 0, max_norm2 = 0;
    bool returned = false;
    auto each = [&](std::size_t c, std::int64_t) {
      if (functional == PathFunctional::MaxNormBeforeReturn && !returned)
        max_norm2 = std::max(max_norm2, arena.site(c).norm2());
    };
    const WalkOutcome o = run_walk(
        arena, x, rng, cap,
        [&](std::int32_t t, std::size_t c, std::int64_t time) {
          if (t == 1) return true;
          if (t == 3) {
            if (time > 0) {
              ++returns;
              returned = true;
            }
            return false;
          }
          p.accepted = true;
          if (functional == PathFunctional::ExitOctant) p.category = octant_of(arena.site(c));
          return true;
        },
        each);
    if (o.exhausted) throw Error("path exceeded the step cap");
    if (functional == PathFunctional::ReturnsToStart)
      p.category = static_cast<std::int32_t>(std::min<std::int64_t>(returns, 30));
    if (functional == PathFunctional::MaxNormBeforeReturn)
      p.category = static_cast<std::int32_t>(std::floor(std::sqrt(static_cast<double>(max_norm2))));
    return p;
  };

  AbsContReport rep;
  std::vector<double> srw_counts(categories, 0.0), hat_counts(categories, 0.0);
  // Rejection sampling in attempt order, in batches.
  const std::int64_t batch = std::max<std::int64_t>(1024, cfg.replicas / 4);
  while (rep.accepted < cfg.replicas) {
    const auto paths = map_replicas<Path>(batch, cfg.threads, [&](std::int64_t k) {
      return sample(srw, detail::kSrwRejectionStream, rep.attempts + k);
    });
    for (const Path& p : paths) {
      if (rep.accepted == cfg.replicas) break;
      ++rep.attempts;
      if (!p.accepted) continue;
      ++rep.accepted;
      srw_counts[p.category] += 1.0;
    }
    if (rep.attempts >= 100000 && rep.acceptance() < 1e-3)
      throw Error("rejection acceptance below 1e-3; raise |x| or lower R");
  }
  const auto hat_paths = map_replicas<Path>(cfg.replicas, cfg.threads,
                                            [&](std::int64_t k) { return sample(hat, detail::kHatPathStream, k); });
  for (const Path& p : hat_paths) {
    if (!p.accepted) throw Error("conditioned walk absorbed at the origin");
    hat_counts[p.category] += 1.0;
  }
  rep.n_hat = cfg.replicas;
  rep.p_srw.resize(categories);
  rep.p_hat.resize(categories);
  std::vector<double> pooled(categories);
  const double n1 = static_cast<double>(rep.accepted), n2 = static_cast<double>(rep.n_hat);
  for (std::size_t i = 0; i < categories; ++i) {
    rep.p_srw[i] = srw_counts[i] / n1;
    rep.p_hat[i] = hat_counts[i] / n2;
    pooled[i] = (srw_counts[i] + hat_counts[i]) / (n1 + n2);
  }
  rep.tv = detail::total_variation(rep.p_srw, rep.p_hat);

  Xoshiro256 rng = replica_stream(cfg.seed, detail::kBootstrapStream, 0);
  std::vector<double> null_tv, own_tv;
  for (int b = 0; b < bootstrap; ++b) {
    null_tv.push_back(detail::total_variation(detail::multinomial_frequencies(rep.accepted, pooled, rng),
                                              detail::multinomial_frequencies(rep.n_hat, pooled, rng)));
    own_tv.push_back(detail::total_variation(detail::multinomial_frequencies(rep.accepted, rep.p_srw, rng),
                                             detail::multinomial_frequencies(rep.n_hat, rep.p_hat, rng)));
  }
  const Estimate nul = summarize(null_tv), own = summarize(own_tv);
  rep.null_mean = nul.mean;
  rep.null_sd = nul.stderr_ * std::sqrt(static_cast<double>(nul.n));
  rep.tv_sd = own.stderr_ * std::sqrt(static_cast<double>(own.n));
  return rep;
}

/// P_{x0}[the conditioned walk reaches the boundary of B(y0, C r) before
/// entering B(y0, r)]. No truncation is involved.
inline Estimate annulus_exit_estimate(Site x0, Site y0, double r, double c, const WalkConfig& cfg) {
  if (!(r >= 1.0) || !(c > 1.0)) throw DomainError("annulus requires r >= 1 and C > 1");
  if (x0.is_origin()) throw DomainError("origin is not a state");
  const Ball outer(y0, c * r), inner(y0, r);
  if (!outer.contains(x0)) throw DomainError("x0 must lie in B(y0, C r)");
  const SiteSet rim = boundary(enumerate_ball(outer));
  if (inner.contains(x0)) return {0.0, 0.0, cfg.replicas, 0.0};
  if (rim.contains(x0)) return {1.0, 0.0, cfg.replicas, 0.0};
  const auto box = static_cast<std::int32_t>(std::ceil(std::max(std::abs(y0.x1), std::abs(y0.x2)) + c * r)) + 3;
  const WalkArena arena(Chain::Hat, box, [&](Site z) -> std::int32_t {
    if (inner.contains(z)) return 1;
    if (rim.contains(z)) return 2;
    return 0;
  });
  const std::int64_t cap = cfg.step_cap();
  const auto hits = map_replicas<double>(cfg.replicas, cfg.threads, [&](std::int64_t k) {
    Xoshiro256 rng = replica_stream(cfg.seed, detail::kAnnulusStream, static_cast<std::uint64_t>(k));
    double success = 0.0;
    const WalkOutcome o = run_walk(arena, x0, rng, cap, [&](std::int32_t tag, std::size_t, std::int64_t) {
      success = tag == 2 ? 1.0 : 0.0;
      return true;
    });
    if (o.exhausted) throw Error("path exceeded the step cap");
    return success;
  });
  return summarize(hits);
}

/// P_{x0}[the conditioned walk never enters B(y0, r)], from walks stopped on
/// leaving B(R_T) with R_T = cfg.truncation_radius. The truncated frequency
/// is an upper estimate; after leaving B(R_T) the walk avoids B(|y0| + r)
/// forever with probability at least 1 - (a(|y0|+r) + kappa/(|y0|+r))/a(R_T)
/// to leading order, which gives the reported downward bias bound.
inline Estimate disk_avoidance_estimate(Site x0, Site y0, double r, const WalkConfig& cfg,
                                        double kappa = 2.0) {
  if (!(r >= 1.0)) throw DomainError("disk radius must be >= 1");
  if (x0.is_origin()) throw DomainError("origin is not a state");
  const Ball disk(y0, r);
  if (disk.contains(x0)) return {0.0, 0.0, cfg.replicas, 0.0};
  const double rho = y0.norm() + r;
  const double rt = cfg.truncation_radius;
  if (rt < rho + 1.0 || rt <= x0.norm()) throw DomainError("truncation radius must enclose the disk and x0");
  const Ball ball(kOrigin, rt);
  const WalkArena arena(Chain::Hat, detail::box_for(rt), [&](Site z) -> std::int32_t {
    if (!ball.contains(z)) return 2;
    if (disk.contains(z)) return 1;
    return 0;
  });
  const std::int64_t cap = cfg.step_cap();
  const auto escapes = map_replicas<double>(cfg.replicas, cfg.threads, [&](std::int64_t k) {
    Xoshiro256 rng = replica_stream(cfg.seed, detail::kDiskStream, static_cast<std::uint64_t>(k));
    double success = 0.0;
    const WalkOutcome o = run_walk(arena, x0, rng, cap, [&](std::int32_t tag, std::size_t, std::int64_t) {
      success = tag == 2 ? 1.0 : 0.0;
      return true;
    });
    if (o.exhausted) throw Error("path exceeded the step cap");
    return success;
  });
  Estimate e = summarize(escapes);
  const double keep = std::max(0.0, 1.0 - return_to_ball_bound(rho, rt, kappa));
  e.truncation_bias_bound = e.mean * (1.0 - keep);
  return e;
}

}  // namespace condwalk
