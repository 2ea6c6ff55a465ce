#pragma once

// Unanchored Sobolev kernel of smoothness chi on [0,1]:
//   k_chi(x, y) = sum_{tau=1}^{chi} B_tau(x) B_tau(y) / (tau!)^2
//                 + (-1)^{chi+1} B_{2 chi}(|x - y|) / (2 chi)!

#include <Eigen/Core>

#include <array>
#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "cdqmc/coordset.hpp"

namespace cdqmc {

inline constexpr int kMaxChi = 6;
inline constexpr int kMaxBernoulliDegree = 2 * kMaxChi;

struct Rational {
  std::int64_t num = 0;
  std::int64_t den = 1;
  double value() const noexcept { return static_cast<double>(num) / static_cast<double>(den); }
  friend bool operator==(const Rational&, const Rational&) = default;
};

/// Exact coefficient of x^k in B_tau(x).
Rational bernoulli_coefficient(int tau, int k);

namespace detail {
/// Floating coefficients of B_tau, lowest degree first, from the exact table.
const std::array<double, kMaxBernoulliDegree + 1>& bernoulli_row(int tau);
double factorial(int n);
}  // namespace detail

template <typename Scalar>
Scalar bernoulli(int tau, Scalar x) {
  if (tau < 0 || tau > kMaxBernoulliDegree)
    throw std::out_of_range("Bernoulli degree outside precomputed range");
  const auto& c = detail::bernoulli_row(tau);
  Scalar r = Scalar(c[static_cast<std::size_t>(tau)]);
  for (int k = tau - 1; k >= 0; --k) r = r * x + Scalar(c[static_cast<std::size_t>(k)]);
  return r;
}

template <typename Scalar>
Scalar k_chi(int chi, Scalar x, Scalar y) {
  if (chi < 1 || chi > kMaxChi) throw std::out_of_range("smoothness chi outside [1, 6]");
  Scalar s(0);
  for (int tau = 1; tau <= chi; ++tau) {
    const Scalar f = Scalar(detail::factorial(tau));
    s += bernoulli(tau, x) * bernoulli(tau, y) / (f * f);
  }
  using std::abs;
  const Scalar tail = bernoulli(2 * chi, Scalar(abs(x - y))) / Scalar(detail::factorial(2 * chi));
  return chi % 2 == 1 ? s + tail : s - tail;
}

/// prod_{i} k_chi(x_i, y_i) over aligned coordinate values; 1 for empty input.
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar k_u(int chi, const Eigen::MatrixBase<DerivedX>& xu,
                              const Eigen::MatrixBase<DerivedY>& yu) {
  using Scalar = typename DerivedX::Scalar;
  if (xu.size() != yu.size()) throw std::invalid_argument("k_u: coordinate count mismatch");
  Scalar r(1);
  for (Eigen::Index i = 0; i < xu.size(); ++i) r *= k_chi(chi, xu(i), Scalar(yu(i)));
  return r;
}

/// prod_{j in u} k_chi(x_j, y_j) where x(j-1) holds coordinate j.
template <typename DerivedX, typename DerivedY>
typename DerivedX::Scalar k_u(int chi, const CoordSet& u, const Eigen::MatrixBase<DerivedX>& x,
                              const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  Scalar r(1);
  for (auto j : u) {
    if (static_cast<Eigen::Index>(j) > x.size() || static_cast<Eigen::Index>(j) > y.size())
      throw std::out_of_range("k_u: missing coordinate " + std::to_string(j));
    r *= k_chi(chi, x(j - 1), Scalar(y(j - 1)));
  }
  return r;
}

/// M = int_0^1 k_chi(x, x) dx, by exact integration of the polynomial integrand.
double kernel_mean_M(int chi);

struct KernelDiagnostics {
  double M = 0.0;
  double k_aa = 0.0;
};

KernelDiagnostics kernel_diagnostics(int chi, double anchor);

/// Default anchor coordinate: 1/2, where k_1(a,a) = 1/12 is minimal.
inline constexpr double kDefaultAnchor = 0.5;

}  // namespace cdqmc
