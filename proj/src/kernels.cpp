#include "cdqmc/kernels.hpp"

#include <numeric>
#include <vector>

namespace cdqmc {

namespace {

using i128 = __int128;

struct Frac {
  i128 num = 0;
  i128 den = 1;
};

i128 gcd128(i128 a, i128 b) {
  if (a < 0) a = -a;
  if (b < 0) b = -b;
  while (b != 0) {
    i128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

Frac reduce(Frac f) {
  if (f.den < 0) {
    f.num = -f.num;
    f.den = -f.den;
  }
  i128 g = gcd128(f.num, f.den);
  if (g > 1) {
    f.num /= g;
    f.den /= g;
  }
  return f;
}

Frac operator+(Frac a, Frac b) { return reduce({a.num * b.den + b.num * a.den, a.den * b.den}); }
Frac operator*(Frac a, Frac b) { return reduce({a.num * b.num, a.den * b.den}); }

i128 binomial(int n, int k) {
  i128 r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

struct BernoulliTable {
  // coeffs[tau][k]: coefficient of x^k in B_tau(x)
  std::vector<std::vector<Frac>> coeffs;
  std::array<std::array<double, kMaxBernoulliDegree + 1>, kMaxBernoulliDegree + 1> rows{};

  BernoulliTable() {
    const int n = kMaxBernoulliDegree;
    // Bernoulli numbers with B_1 = -1/2: sum_{k=0}^{m} C(m+1, k) B_k = 0
    std::vector<Frac> B(static_cast<std::size_t>(n) + 1);
    B[0] = {1, 1};
    for (int m = 1; m <= n; ++m) {
      Frac s{0, 1};
      for (int k = 0; k < m; ++k) s = s + Frac{binomial(m + 1, k), 1} * B[static_cast<std::size_t>(k)];
      B[static_cast<std::size_t>(m)] = reduce({-s.num, s.den * (m + 1)});
    }
    coeffs.resize(static_cast<std::size_t>(n) + 1);
    for (int tau = 0; tau <= n; ++tau) {
      auto& row = coeffs[static_cast<std::size_t>(tau)];
      row.assign(static_cast<std::size_t>(tau) + 1, Frac{0, 1});
      // B_tau(x) = sum_k C(tau, k) B_k x^{tau-k}
      for (int k = 0; k <= tau; ++k)
        row[static_cast<std::size_t>(tau - k)] = Frac{binomial(tau, k), 1} * B[static_cast<std::size_t>(k)];
      for (int k = 0; k <= tau; ++k)
        rows[static_cast<std::size_t>(tau)][static_cast<std::size_t>(k)] =
            static_cast<double>(row[static_cast<std::size_t>(k)].num) /
            static_cast<double>(row[static_cast<std::size_t>(k)].den);
    }
  }
};

const BernoulliTable& table() {
  static const BernoulliTable t;
  return t;
}

}  // namespace

Rational bernoulli_coefficient(int tau, int k) {
  if (tau < 0 || tau > kMaxBernoulliDegree)
    throw std::out_of_range("Bernoulli degree outside precomputed range");
  if (k < 0 || k > tau) return {0, 1};
  const Frac& f = table().coeffs[static_cast<std::size_t>(tau)][static_cast<std::size_t>(k)];
  return {static_cast<std::int64_t>(f.num), static_cast<std::int64_t>(f.den)};
}

namespace detail {

const std::array<double, kMaxBernoulliDegree + 1>& bernoulli_row(int tau) {
  return table().rows[static_cast<std::size_t>(tau)];
}

double factorial(int n) {
  double r = 1.0;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

}  // namespace detail

double kernel_mean_M(int chi) {
  if (chi < 1 || chi > kMaxChi) throw std::out_of_range("smoothness chi outside [1, 6]");
  const auto& c = table().coeffs;
  Frac total{0, 1};
  i128 fact = 1;
  for (int tau = 1; tau <= chi; ++tau) {
    fact *= tau;
    // int_0^1 B_tau(x)^2 dx
    Frac sq{0, 1};
    const auto& row = c[static_cast<std::size_t>(tau)];
    for (std::size_t i = 0; i < row.size(); ++i)
      for (std::size_t j = 0; j < row.size(); ++j)
        sq = sq + row[i] * row[j] * Frac{1, static_cast<i128>(i + j + 1)};
    total = total + sq * Frac{1, fact * fact};
  }
  i128 fact2 = 1;
  for (int i = 2; i <= 2 * chi; ++i) fact2 *= i;
  Frac diag = c[static_cast<std::size_t>(2 * chi)][0] * Frac{1, fact2};
  if (chi % 2 == 0) diag.num = -diag.num;
  total = total + diag;
  return static_cast<double>(total.num) / static_cast<double>(total.den);
}

KernelDiagnostics kernel_diagnostics(int chi, double anchor) {
  if (anchor < 0.0 || anchor > 1.0) throw std::out_of_range("anchor outside [0, 1]");
  return {kernel_mean_M(chi), k_chi(chi, anchor, anchor)};
}

}  // namespace cdqmc
