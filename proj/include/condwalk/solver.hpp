#pragma once

// Dirichlet problems for SRW and the conditioned walk on a truncated ball.
//
// Both chains are reversible nearest-neighbour chains with conductances
// c(x,y) = h(x) h(y) / 4, where h = 1 for SRW and h = a for the conditioned
// walk. Multiplying u - P u = s by mu(x) = sum_y c(x,y) gives a symmetric
// positive definite system on the interior, solved by conjugate gradients
// preconditioned with symmetric SOR sweeps in lexicographic order.
//
// Error control: the defect d = u - P u - s of the returned solution is
// recomputed exactly; the error then satisfies |u - u*| <= max|d| * E[T],
// with E_x[T] <= (h_max / h(x)) (R+1)^2 from the SRW exit time of the ball.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "condwalk/error.hpp"
#include "condwalk/kernel.hpp"
#include "condwalk/lattice.hpp"

namespace condwalk {

enum class Chain { Srw, Hat };

inline const char* chain_name(Chain c) { return c == Chain::Srw ? "srw" : "hat"; }

/// Label of the external boundary of the outer ball.
inline const std::string kOutsideLabel = "outside";

struct TruncatedDomain {
  Chain chain = Chain::Hat;
  double radius = 0.0;  // outer ball B(0, radius)
  SiteSet forbidden;    // killed on entry; the origin is added for the conditioned walk
  std::vector<std::pair<std::string, SiteSet>> absorbing;
};

/// Cell classification of a TruncatedDomain on a padded square grid.
class DomainGrid {
 public:
  static constexpr int kInterior = -2;
  static constexpr int kForbidden = -1;
  static constexpr int kUnreachable = -3;

  explicit DomainGrid(const TruncatedDomain& dom, std::shared_ptr<const PotentialKernel> kernel = nullptr)
      : dom_(dom) {
    if (!(dom.radius >= 1.0)) throw DomainError("truncation radius must be >= 1");
    ball_ = Ball(kOrigin, dom.radius);
    r_ = static_cast<std::int32_t>(std::floor(dom.radius));
    off_ = r_ + 1;
    w_ = 2 * r_ + 3;
    if (static_cast<double>(w_) * w_ > 4e8) throw Error("budget exceeded");

    for (const auto& [name, set] : dom.absorbing) {
      if (name == kOutsideLabel) throw DomainError("label 'outside' is reserved");
      for (Site s : set)
        if (!ball_.contains(s)) throw DomainError("absorbing site outside the truncation ball");
      names_.push_back(name);
    }
    names_.push_back(kOutsideLabel);
    for (Site s : dom.forbidden)
      if (!ball_.contains(s)) throw DomainError("forbidden site outside the truncation ball");

    label_.assign(static_cast<std::size_t>(w_) * w_, kUnreachable);
    for (std::int32_t x2 = -r_ - 1; x2 <= r_ + 1; ++x2)
      for (std::int32_t x1 = -r_ - 1; x1 <= r_ + 1; ++x1)
        if (ball_.contains({x1, x2})) label_[cell({x1, x2})] = kInterior;
    for (Site s : dom.forbidden) label_[cell(s)] = kForbidden;
    for (std::size_t l = 0; l < dom.absorbing.size(); ++l)
      for (Site s : dom.absorbing[l].second) {
        if (label_[cell(s)] != kInterior) throw DomainError("overlapping absorbing/forbidden sets");
        label_[cell(s)] = static_cast<int>(l);
      }
    if (dom.chain == Chain::Hat && label_[cell(kOrigin)] == kInterior) label_[cell(kOrigin)] = kForbidden;
    const int outside = static_cast<int>(dom.absorbing.size());
    for (std::int32_t x2 = -r_ - 1; x2 <= r_ + 1; ++x2)
      for (std::int32_t x1 = -r_ - 1; x1 <= r_ + 1; ++x1) {
        const Site x{x1, x2};
        if (label_[cell(x)] != kUnreachable) continue;
        for (Site y : neighbours(x))
          if (in_box(y) && ball_.contains(y) && label_[cell(y)] == kInterior) {
            label_[cell(x)] = outside;
            break;
          }
      }

    h_.assign(label_.size(), 1.0);
    if (dom.chain == Chain::Hat) {
      if (!kernel) kernel = shared_kernel(r_ + 2);
      if (kernel->window() < r_ + 1) throw DomainError("kernel window smaller than truncation radius + 1");
      kernel_ = kernel;
      for (std::int32_t x2 = -r_ - 1; x2 <= r_ + 1; ++x2)
        for (std::int32_t x1 = -r_ - 1; x1 <= r_ + 1; ++x1) h_[cell({x1, x2})] = (*kernel)({x1, x2});
    }

    double hmax = 0.0, hmin = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < label_.size(); ++i) {
      if (label_[i] != kInterior) continue;
      cells_.push_back(static_cast<std::int32_t>(i));
      hmax = std::max(hmax, h_[i]);
      hmin = std::min(hmin, h_[i]);
    }
    for (std::size_t i = 0; i < label_.size(); ++i)
      if (label_[i] >= 0) hmax = std::max(hmax, h_[i]);
    const std::size_t n = cells_.size();
    diag_.resize(n);
    coupling_.resize(4 * n);
    const std::int32_t step[4] = {1, w_, -1, -w_};  // E, N, W, S
    for (std::size_t k = 0; k < n; ++k) {
      const std::int32_t i = cells_[k];
      double sum = 0.0;
      for (int d = 0; d < 4; ++d) {
        const std::int32_t j = i + step[d];
        const double c = 0.25 * h_[i] * h_[j];
        sum += c;
        coupling_[4 * k + d] = label_[j] == kInterior ? c : 0.0;
      }
      diag_[k] = sum;
    }
    exit_bound_ = cells_.empty() ? 0.0 : hmax / hmin * (dom.radius + 1.0) * (dom.radius + 1.0);
  }

  const TruncatedDomain& domain() const { return dom_; }
  Chain chain() const { return dom_.chain; }
  std::int32_t width() const { return w_; }
  std::size_t interior_size() const { return cells_.size(); }

  bool in_box(Site x) const {
    return x.x1 >= -off_ && x.x1 <= off_ && x.x2 >= -off_ && x.x2 <= off_;
  }
  std::size_t cell(Site x) const {
    return static_cast<std::size_t>(x.x2 + off_) * w_ + static_cast<std::size_t>(x.x1 + off_);
  }
  Site site(std::size_t c) const {
    return {static_cast<std::int32_t>(c % w_) - off_, static_cast<std::int32_t>(c / w_) - off_};
  }

  /// kInterior, kForbidden, kUnreachable or an index into label_names().
  int label_of(Site x) const { return in_box(x) ? label_[cell(x)] : kUnreachable; }
  const std::vector<std::string>& label_names() const { return names_; }
  int outside_label() const { return static_cast<int>(names_.size()) - 1; }

  double h(Site x) const { return h_[cell(x)]; }
  /// Upper bound on the expected number of interior steps from any start.
  double exit_time_bound() const { return exit_bound_; }

  // Raw solver data.
  const std::vector<std::int32_t>& cells() const { return cells_; }
  const std::vector<double>& diag() const { return diag_; }
  const std::vector<double>& coupling() const { return coupling_; }
  const std::vector<int>& labels() const { return label_; }
  const std::vector<double>& h_field() const { return h_; }

 private:
  TruncatedDomain dom_;
  Ball ball_;
  std::int32_t r_ = 0, off_ = 0, w_ = 0;
  std::vector<std::string> names_;
  std::vector<int> label_;
  std::vector<double> h_;
  std::vector<std::int32_t> cells_;
  std::vector<double> diag_;
  std::vector<double> coupling_;
  std::shared_ptr<const PotentialKernel> kernel_;
  double exit_bound_ = 0.0;
};

/// Dirichlet data: one constant per label (outside included), optionally
/// replaced on the outside boundary by a site function.
struct BoundaryData {
  std::vector<double> label_values;
  std::function<double(Site)> outside;
};

struct SolveOptions {
  double tol = 1e-12;          // target max |defect|
  std::int64_t max_iterations = 0;  // 0: automatic
  double omega = 0.0;          // SSOR relaxation; 0: automatic
};

struct SolveResult {
  std::shared_ptr<const DomainGrid> grid;
  std::vector<double> values;  // on every grid cell, boundary data included
  double defect = 0.0;         // max |u - P u - s| over the interior
  std::int64_t iterations = 0;
  double error_bound = 0.0;    // defect * exit_time_bound

  double value(Site x) const {
    if (!grid->in_box(x) || grid->label_of(x) == DomainGrid::kUnreachable)
      throw DomainError("site outside the solve domain");
    return values[grid->cell(x)];
  }
};

namespace detail {

class Pcg {
 public:
  Pcg(const DomainGrid& g, double omega) : g_(g), omega_(omega) {
    const auto& d = g.diag();
    inv_.resize(d.size());
    for (std::size_t k = 0; k < d.size(); ++k) inv_[k] = omega / d[k];
  }

  void apply(const std::vector<double>& v, std::vector<double>& out) const {
    const auto& cells = g_.cells();
    const auto& d = g_.diag();
    const double* c = g_.coupling().data();
    const std::int32_t w = g_.width();
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const std::int32_t i = cells[k];
      out[i] = d[k] * v[i] -
               (c[4 * k] * v[i + 1] + c[4 * k + 1] * v[i + w] + c[4 * k + 2] * v[i - 1] +
                c[4 * k + 3] * v[i - w]);
    }
  }

  void precondition(const std::vector<double>& r, std::vector<double>& z) const {
    const auto& cells = g_.cells();
    const double* c = g_.coupling().data();
    const std::int32_t w = g_.width();
    for (std::size_t k = 0; k < cells.size(); ++k) {
      const std::int32_t i = cells[k];
      z[i] = inv_[k] * (r[i] + c[4 * k + 2] * z[i - 1] + c[4 * k + 3] * z[i - w]);
    }
    for (std::size_t k = cells.size(); k-- > 0;) {
      const std::int32_t i = cells[k];
      z[i] += inv_[k] * (c[4 * k] * z[i + 1] + c[4 * k + 1] * z[i + w]);
    }
  }

  double dot(const std::vector<double>& a, const std::vector<double>& b) const {
    double s = 0.0;
    for (std::int32_t i : g_.cells()) s += a[i] * b[i];
    return s;
  }

  double max_defect(const std::vector<double>& r) const {
    const auto& cells = g_.cells();
    const auto& d = g_.diag();
    double m = 0.0;
    for (std::size_t k = 0; k < cells.size(); ++k) m = std::max(m, std::abs(r[cells[k]]) / d[k]);
    return m;
  }

 private:
  const DomainGrid& g_;
  double omega_;
  std::vector<double> inv_;
};

}  // namespace detail

/// Solves u = P u + s on the interior with u = data off it. `source`, when
/// given, is the unit source s = 1{x = source} (Green's function column).
inline SolveResult solve_dirichlet(std::shared_ptr<const DomainGrid> grid, const BoundaryData& data,
                                   std::optional<Site> source = std::nullopt,
                                   const SolveOptions& opts = {}) {
  const DomainGrid& g = *grid;
  if (data.label_values.size() != g.label_names().size())
    throw DomainError("boundary data must give one value per label");
  if (!(opts.tol > 0.0)) throw DomainError("solver tolerance must be positive");
  const std::size_t ncell = g.labels().size();
  const auto& labels = g.labels();
  const std::int32_t w = g.width();
  const std::int32_t step[4] = {1, w, -1, -w};

  SolveResult res;
  res.grid = grid;
  res.values.assign(ncell, 0.0);
  for (std::size_t i = 0; i < ncell; ++i) {
    const int l = labels[i];
    if (l < 0) continue;
    res.values[i] = (l == g.outside_label() && data.outside) ? data.outside(g.site(i))
                                                             : data.label_values[l];
  }

  // b = mu s + sum over non-interior neighbours of c(x,y) data(y).
  const auto& cells = g.cells();
  const auto& diag = g.diag();
  const auto& hf = g.h_field();
  std::vector<double> b(ncell, 0.0);
  for (std::size_t k = 0; k < cells.size(); ++k) {
    const std::int32_t i = cells[k];
    double s = 0.0;
    for (int d = 0; d < 4; ++d) {
      const std::int32_t j = i + step[d];
      if (labels[j] >= 0) s += 0.25 * hf[i] * hf[j] * res.values[j];
    }
    b[i] = s;
  }
  if (source) {
    if (g.label_of(*source) != DomainGrid::kInterior) throw DomainError("source must be an interior site");
    const std::size_t i = g.cell(*source);
    const auto k = std::lower_bound(cells.begin(), cells.end(), static_cast<std::int32_t>(i)) - cells.begin();
    b[i] += diag[k];
  }
  if (cells.empty()) return res;

  const double radius = g.domain().radius;
  const double omega = opts.omega > 0.0 ? opts.omega : 2.0 / (1.0 + 2.2 / (radius + 1.0));
  const std::int64_t cap = opts.max_iterations > 0
                               ? opts.max_iterations
                               : static_cast<std::int64_t>(40.0 * (radius + 10.0) * std::log(1.0 / opts.tol));
  detail::Pcg pcg(g, omega);

  std::vector<double> u(ncell, 0.0), r(ncell, 0.0), z(ncell, 0.0), p(ncell, 0.0), q(ncell, 0.0);
  std::int64_t it = 0;
  double defect = 0.0;
  for (int restart = 0; restart < 4; ++restart) {
    pcg.apply(u, q);
    for (std::int32_t i : cells) r[i] = b[i] - q[i];
    defect = pcg.max_defect(r);
    if (defect <= opts.tol) break;
    pcg.precondition(r, z);
    for (std::int32_t i : cells) p[i] = z[i];
    double rz = pcg.dot(r, z);
    while (it < cap) {
      ++it;
      pcg.apply(p, q);
      const double alpha = rz / pcg.dot(p, q);
      for (std::int32_t i : cells) {
        u[i] += alpha * p[i];
        r[i] -= alpha * q[i];
      }
      // Stop a little early on the recursive residual; the true one decides.
      if (pcg.max_defect(r) <= 0.5 * opts.tol) break;
      pcg.precondition(r, z);
      const double rz_new = pcg.dot(r, z);
      const double beta = rz_new / rz;
      rz = rz_new;
      for (std::int32_t i : cells) p[i] = z[i] + beta * p[i];
    }
    if (it >= cap) {
      pcg.apply(u, q);
      for (std::int32_t i : cells) r[i] = b[i] - q[i];
      defect = pcg.max_defect(r);
      break;
    }
  }
  if (defect > opts.tol) throw ConvergenceError("solver did not reach tolerance", defect);

  for (std::int32_t i : cells) res.values[i] = u[i];
  res.defect = defect;
  res.iterations = it;
  res.error_bound = defect * g.exit_time_bound();
  return res;
}

struct HitPartition {
  std::map<std::string, double> probability;  // by label, outside included
  double defect = 0.0;                        // worst over the label solves
  double error_bound = 0.0;
  std::int64_t iterations = 0;
};

/// Distribution of the absorbing label (or the outside boundary) hit first
/// from x; killed mass is the deficit from 1.
inline HitPartition hit_partition(const TruncatedDomain& dom, Site x, const SolveOptions& opts = {}) {
  auto grid = std::make_shared<const DomainGrid>(dom);
  const int start = grid->label_of(x);
  if (start == DomainGrid::kUnreachable) throw DomainError("start outside the truncation ball");
  HitPartition out;
  const auto& names = grid->label_names();
  for (std::size_t l = 0; l < names.size(); ++l) {
    if (start != DomainGrid::kInterior) {
      out.probability[names[l]] = start == static_cast<int>(l) ? 1.0 : 0.0;
      continue;
    }
    BoundaryData data{std::vector<double>(names.size(), 0.0), {}};
    data.label_values[l] = 1.0;
    const SolveResult s = solve_dirichlet(grid, data, std::nullopt, opts);
    out.probability[names[l]] = s.value(x);
    out.defect = std::max(out.defect, s.defect);
    out.error_bound = std::max(out.error_bound, s.error_bound);
    out.iterations += s.iterations;
  }
  return out;
}

/// Truncated Green's function: expected visits to y before leaving the
/// interior, started at x (time 0 counted).
inline SolveResult green_truncated(const TruncatedDomain& dom, Site y, const SolveOptions& opts = {}) {
  auto grid = std::make_shared<const DomainGrid>(dom);
  BoundaryData zero{std::vector<double>(grid->label_names().size(), 0.0), {}};
  return solve_dirichlet(grid, zero, y, opts);
}

/// A finite chain given by its transition matrix, for the conditional
/// hitting identity checked on small examples.
struct FiniteChain {
  Eigen::MatrixXd p;
};

struct ConditionalHitCheck {
  double lhs = 0.0;  // P_x[tau_A < tau_B]
  double rhs = 0.0;  // P_x[tau_A < tau_B | tau_x^+ > tau_{A u B}]
  double abs_diff() const { return std::abs(lhs - rhs); }
};

namespace detail {

// P_z[hit `good` before `bad`] for all z, by a dense solve; good and bad
// are disjoint state-index masks.
inline Eigen::VectorXd hit_before(const Eigen::MatrixXd& p, const std::vector<bool>& good,
                                  const std::vector<bool>& bad) {
  const Eigen::Index n = p.rows();
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (good[i]) {
      rhs(i) = 1.0;
    } else if (!bad[i]) {
      m.row(i) -= p.row(i);
    }
  }
  return m.fullPivLu().solve(rhs);
}

inline bool irreducible(const Eigen::MatrixXd& p) {
  const Eigen::Index n = p.rows();
  for (int dir = 0; dir < 2; ++dir) {
    std::vector<bool> seen(n, false);
    std::vector<Eigen::Index> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      const Eigen::Index i = stack.back();
      stack.pop_back();
      for (Eigen::Index j = 0; j < n; ++j) {
        const double e = dir == 0 ? p(i, j) : p(j, i);
        if (e > 0.0 && !seen[j]) {
          seen[j] = true;
          stack.push_back(j);
        }
      }
    }
    if (std::find(seen.begin(), seen.end(), false) != seen.end()) return false;
  }
  return true;
}

}  // namespace detail

/// For a recurrent irreducible finite chain and disjoint A, B not containing
/// x: compares P_x[tau_A < tau_B] with the same probability conditioned on
/// hitting A u B before returning to x.
inline ConditionalHitCheck conditional_hit_check(const FiniteChain& chain, Eigen::Index x,
                                         const std::vector<Eigen::Index>& a,
                                         const std::vector<Eigen::Index>& b) {
  const Eigen::MatrixXd& p = chain.p;
  const Eigen::Index n = p.rows();
  if (p.cols() != n || n < 2) throw DomainError("transition matrix must be square");
  for (Eigen::Index i = 0; i < n; ++i) {
    if (std::abs(p.row(i).sum() - 1.0) > 1e-12 || p.row(i).minCoeff() < 0.0)
      throw DomainError("rows must be probability vectors");
  }
  if (!detail::irreducible(p)) throw DomainError("chain is not irreducible");
  std::vector<bool> in_a(n, false), in_b(n, false);
  for (auto i : a) in_a.at(i) = true;
  for (auto i : b) {
    if (in_a.at(i)) throw DomainError("A and B must be disjoint");
    in_b[i] = true;
  }
  if (a.empty() || b.empty()) throw DomainError("A and B must be non-empty");
  if (in_a.at(x) || in_b.at(x)) throw DomainError("x must lie outside A and B");

  ConditionalHitCheck out;
  out.lhs = detail::hit_before(p, in_a, in_b)(x);

  // Numerator: hit A before B u {x} after the first step; denominator: hit
  // A u B before returning to x.
  std::vector<bool> bad_x = in_b, good_ab(n, false), only_x(n, false);
  bad_x[x] = true;
  only_x[x] = true;
  for (Eigen::Index i = 0; i < n; ++i) good_ab[i] = in_a[i] || in_b[i];
  const Eigen::VectorXd num = detail::hit_before(p, in_a, bad_x);
  const Eigen::VectorXd den = detail::hit_before(p, good_ab, only_x);
  double nsum = 0.0, dsum = 0.0;
  for (Eigen::Index z = 0; z < n; ++z) {
    if (z == x) continue;
    nsum += p(x, z) * num(z);
    dsum += p(x, z) * den(z);
  }
  out.rhs = nsum / dsum;
  return out;
}

}  // namespace condwalk
