#pragma once

// Exact SRW hitting distribution of a finite set B.
//
// z -> H_B(z, y) is bounded, harmonic off B and equal to 1{z = y} on B, so it
// has the form c_y + sum_{w in B} lambda_{yw} a(z - w) with sum_w lambda_{yw} = 0.
// The coefficients solve the bordered system
//
//   [ A  1 ] [ lambda_y ]   [ e_y ]
//   [ 1' 0 ] [   c_y    ] = [  0  ],     A_{bw} = a(b - w),
//
// and c_y = hm_B(y). The same matrix with right-hand side (0, 1) gives
// (hm_B, -cap(B)) because sum_y hm_B(y) a(x - y) = cap(B) for every x in B.

#include <Eigen/Dense>

#include <cmath>
#include <vector>

#include "condwalk/error.hpp"
#include "condwalk/kernel.hpp"
#include "condwalk/lattice.hpp"

namespace condwalk {

class SrwHitting {
 public:
  SrwHitting(const PotentialKernel& kernel, SiteSet set) : kernel_(&kernel), set_(std::move(set)) {
    const Eigen::Index n = static_cast<Eigen::Index>(set_.size());
    if (n == 0) throw DomainError("empty set");
    Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = 0; j < n; ++j) m(i, j) = kernel(set_[i] - set_[j]);
      m(i, n) = m(n, i) = 1.0;
    }
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(n + 1, n + 1);
    for (Eigen::Index i = 0; i <= n; ++i) rhs(i, i) = 1.0;
    const Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
    if (!lu.isInvertible()) throw Error("singular kernel system");
    coeffs_ = lu.solve(rhs);  // symmetric inverse; column y < n is (lambda_y, c_y)
    hm_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) hm_[i] = coeffs_(i, n);
    cap_ = -coeffs_(n, n);
    // Amplification of kernel errors through the coefficients.
    lambda_abs_.assign(n, 0.0);
    for (Eigen::Index y = 0; y < n; ++y)
      for (Eigen::Index w = 0; w < n; ++w) lambda_abs_[y] += std::abs(coeffs_(w, y));
  }

  const SiteSet& set() const { return set_; }
  std::size_t size() const { return set_.size(); }

  /// SRW harmonic measure from infinity.
  const std::vector<double>& harmonic_measure() const { return hm_; }

  /// cap(B) = sum_y hm_B(y) a(x - y) for any x in B.
  double capacity() const { return cap_; }

  /// H_B(z, set[i]).
  double hit(Site z, std::size_t i) const {
    const Eigen::Index n = static_cast<Eigen::Index>(set_.size());
    if (const auto k = set_.index_of(z); k >= 0) return static_cast<std::size_t>(k) == i ? 1.0 : 0.0;
    double s = coeffs_(n, static_cast<Eigen::Index>(i));
    for (Eigen::Index w = 0; w < n; ++w)
      s += coeffs_(w, static_cast<Eigen::Index>(i)) * (*kernel_)(z - set_[w]);
    return s;
  }

  /// Bound on the error of hit(z, i) caused by kernel evaluation errors.
  double hit_error(Site z, std::size_t i) const {
    double e = 0.0;
    for (std::size_t w = 0; w < set_.size(); ++w) e = std::max(e, kernel_->error_bound(z - set_[w]));
    return lambda_abs_[i] * e + 1e-14;
  }

 private:
  const PotentialKernel* kernel_;
  SiteSet set_;
  Eigen::MatrixXd coeffs_;
  std::vector<double> hm_;
  std::vector<double> lambda_abs_;
  double cap_ = 0.0;
};

}  // namespace condwalk
