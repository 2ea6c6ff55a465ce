#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <random>

#include "cdqmc/kernels.hpp"
#include "cdqmc/weights.hpp"
#include "quad.hpp"

using namespace cdqmc;

namespace {

// B_n from the recurrence B_n(x) = sum_k C(n,k) B_k x^{n-k} with Bernoulli numbers by the standard recursion
double bernoulli_oracle(int n, double x) {
  std::vector<double> B(static_cast<std::size_t>(n + 1), 0.0);
  B[0] = 1.0;
  auto binom = [](int a, int k) {
    double r = 1.0;
    for (int i = 1; i <= k; ++i) r = r * (a - k + i) / i;
    return r;
  };
  for (int m = 1; m <= n; ++m) {
    double s = 0.0;
    for (int k = 0; k < m; ++k) s += binom(m + 1, k) * B[static_cast<std::size_t>(k)];
    B[static_cast<std::size_t>(m)] = -s / (m + 1);
  }
  double r = 0.0;
  for (int k = 0; k <= n; ++k) r += binom(n, k) * B[static_cast<std::size_t>(k)] * std::pow(x, n - k);
  return r;
}

}  // namespace

TEST_CASE("bernoulli examples") {
  CHECK(bernoulli(1, 0.5) == 0.0);
  CHECK(bernoulli(2, 0.0) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  CHECK(bernoulli_coefficient(2, 0) == Rational{1, 6});
  CHECK(bernoulli_coefficient(4, 0) == Rational{-1, 30});
  CHECK_THROWS(bernoulli(kMaxBernoulliDegree + 1, 0.3));
}

TEST_CASE("bernoulli matches the recurrence oracle") {
  for (int n = 0; n <= kMaxBernoulliDegree; ++n)
    for (double x : {0.0, 0.1, 0.37, 0.5, 0.93, 1.0})
      CHECK(bernoulli(n, x) == doctest::Approx(bernoulli_oracle(n, x)).epsilon(1e-11));
}

TEST_CASE("bernoulli polynomials integrate to zero") {
  for (int n = 1; n <= kMaxBernoulliDegree; ++n)
    CHECK(std::abs(testutil::integrate([n](double x) { return bernoulli(n, x); }, 0.0, 1.0)) < 1e-13);
}

TEST_CASE("k_chi examples") {
  CHECK(k_chi(1, 0.0, 0.0) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int chi = 1; chi <= kMaxChi; ++chi)
    for (int t = 0; t < 20; ++t) {
      const double x = U(rng), y = U(rng);
      CHECK(k_chi(chi, x, y) == doctest::Approx(k_chi(chi, y, x)).epsilon(1e-14));
    }
}

TEST_CASE("k_chi integrates to zero in each argument") {
  for (int chi = 1; chi <= kMaxChi; ++chi)
    for (double y : {0.0, 0.2, 0.5, 0.77, 1.0}) {
      auto f = [&](double x) { return k_chi(chi, x, y); };
      const double v = testutil::integrate(f, 0.0, y) + testutil::integrate(f, y, 1.0);
      CHECK(std::abs(v) < 1e-10);
    }
}

TEST_CASE("k_u") {
  Eigen::Vector2d x(0.0, 0.0);
  CHECK(k_u(1, CoordSet{}, x, x) == 1.0);
  CHECK(k_u(1, CoordSet{1, 2}, x, x) == doctest::Approx(1.0 / 9.0).epsilon(1e-15));
  Eigen::Vector2d y(0.3, 0.6);
  CHECK(k_u(2, CoordSet{1}, x, y) == k_chi(2, 0.0, 0.3));
  CHECK_THROWS(k_u(1, CoordSet{3}, x, y));
  CHECK_THROWS(k_u(1, x, Eigen::Vector3d(0, 0, 0)));
}

TEST_CASE("k_u factorizes over disjoint sets") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Eigen::VectorXd x(5), y(5);
  for (int t = 0; t < 20; ++t) {
    for (int i = 0; i < 5; ++i) {
      x(i) = U(rng);
      y(i) = U(rng);
    }
    const CoordSet u{1, 4}, v{2, 3, 5};
    CHECK(k_u(2, set_union(u, v), x, y) == doctest::Approx(k_u(2, u, x, y) * k_u(2, v, x, y)).epsilon(1e-14));
  }
}

TEST_CASE("kernel mean M") {
  CHECK(kernel_mean_M(1) == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  for (int chi = 1; chi <= kMaxChi; ++chi) {
    CHECK(kernel_mean_M(chi) > 0.0);
    const double q = testutil::integrate([chi](double x) { return k_chi(chi, x, x); }, 0.0, 1.0);
    CHECK(kernel_mean_M(chi) == doctest::Approx(q).epsilon(1e-12));
  }
}

TEST_CASE("kernel diagnostics at the default anchor") {
  const auto d = kernel_diagnostics(1, kDefaultAnchor);
  CHECK(d.k_aa == doctest::Approx(1.0 / 12.0).epsilon(1e-15));
  CHECK(d.M == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
  for (double a : {0.0, 0.1, 0.3, 0.9}) CHECK(kernel_diagnostics(1, a).k_aa > d.k_aa);
}

TEST_CASE("gram matrices are positive semidefinite") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int chi = 1; chi <= kMaxChi; ++chi)
    for (int n = 1; n <= 8; ++n) {
      std::vector<double> x(static_cast<std::size_t>(n));
      for (auto& v : x) v = U(rng);
      Eigen::MatrixXd G(n, n);
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) G(i, j) = k_chi(chi, x[static_cast<std::size_t>(i)], x[static_cast<std::size_t>(j)]);
      const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(G);
      CHECK(es.eigenvalues().minCoeff() >= -1e-9);
    }
}

TEST_CASE("weighted kernel has the constant representer") {
  // sum over nonempty u in [3] of gamma_u int k_u(x, y) dy vanishes
  const auto w = WeightModel::product(CoordinateSequence::power_law(1.0, 2.0));
  const double x[3] = {0.13, 0.58, 0.91};
  double total = 0.0;
  for (std::uint64_t mask = 1; mask < 8; ++mask) {
    const CoordSet u = CoordSet{1, 2, 3}.subset(mask);
    double prod = 1.0;
    for (auto j : u) {
      const double xj = x[j - 1];
      auto f = [&](double y) { return k_chi(2, xj, y); };
      prod *= testutil::integrate(f, 0.0, xj) + testutil::integrate(f, xj, 1.0);
    }
    total += w.gamma(u) * prod;
  }
  CHECK(std::abs(total) < 1e-12);
}
