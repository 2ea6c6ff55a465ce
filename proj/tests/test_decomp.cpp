#include <doctest.h>

#include <random>

#include "cdqmc/decomp.hpp"
#include "cdqmc/kernels.hpp"
#include "oracles.hpp"

using namespace cdqmc;

namespace {

double g2(double x) { return x * x - x + 1.0 / 6.0; }

// f(x) = B_2(x_1) B_2(x_2) + sin(x_1 + 2 x_3) + x_2 x_3 x_4 + exp(x_4)
BlackBoxIntegrand mixed() {
  return BlackBoxIntegrand(
      [](std::span<const std::uint32_t> c, std::span<const double> v, double a) {
        double x[5] = {a, a, a, a, a};
        for (std::size_t i = 0; i < c.size(); ++i)
          if (c[i] <= 4) x[c[i]] = v[i];
        return g2(x[1]) * g2(x[2]) + std::sin(x[1] + 2.0 * x[3]) + x[2] * x[3] * x[4] + std::exp(x[4]);
      },
      CoordSet{1, 2, 3, 4});
}

Assignment random_point(std::mt19937_64& rng, std::uint32_t d) {
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Assignment x;
  for (std::uint32_t j = 1; j <= d; ++j) {
    x.coords.push_back(j);
    x.values.push_back(U(rng));
  }
  return x;
}

WeightModel explicit5() {
  std::map<CoordSet, double> m;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> U(0.05, 0.9);
  for (const auto& u : testutil::subsets(CoordSet::range(5)))
    if (!u.empty() && u.size() <= 3) m[u] = U(rng) / static_cast<double>(u.size());
  return WeightModel::explicit_support(m);
}

}  // namespace

TEST_CASE("psi_project examples") {
  const BlackBoxIntegrand b1([](std::span<const std::uint32_t> c, std::span<const double> v, double a) {
    double x1 = a;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (c[i] == 1) x1 = v[i];
    return x1 - 0.5;
  });
  const Assignment x{{1, 2}, {0.9, 0.3}};
  CHECK(psi_project(b1, CoordSet{2}, Anchor{0.5}, x) == 0.0);
  CHECK(psi_project(b1, CoordSet{}, Anchor{0.25}, x) == -0.25);
  CHECK(psi_project(b1, CoordSet{1, 2}, Anchor{}, x) == doctest::Approx(0.4));
  CHECK_THROWS(psi_project(b1, CoordSet{3}, Anchor{}, x));
  // projecting onto a superset of the active coordinates changes nothing
  const auto f = mixed();
  std::mt19937_64 rng(1);
  const auto y = random_point(rng, 6);
  CHECK(psi_project(f, CoordSet{1, 2, 3, 4, 5}, Anchor{}, y) == psi_project(f, CoordSet{1, 2, 3, 4, 5, 6}, Anchor{}, y));
}

TEST_CASE("anchored component examples") {
  const BlackBoxIntegrand b1([](std::span<const std::uint32_t> c, std::span<const double> v, double a) {
    double x1 = a;
    for (std::size_t i = 0; i < c.size(); ++i)
      if (c[i] == 1) x1 = v[i];
    return x1 - 0.5;
  });
  const Assignment x{{1}, {0.8}};
  CHECK(anchored_component(b1, CoordSet{}, Anchor{}, x) == 0.0);
  CHECK(anchored_component(b1, CoordSet{1}, Anchor{}, x) == doctest::Approx(0.3).epsilon(1e-15));

  const BlackBoxIntegrand bb([](std::span<const std::uint32_t> c, std::span<const double> v, double a) {
    double x[3] = {0, a, a};
    for (std::size_t i = 0; i < c.size(); ++i) x[c[i]] = v[i];
    return g2(x[1]) * g2(x[2]);
  });
  const Assignment y{{1, 2}, {0.3, 0.7}};
  // (B_2(x1) - 1/6)(B_2(x2) - 1/6) at a = 0
  const double expected = (g2(0.3) - 1.0 / 6.0) * (g2(0.7) - 1.0 / 6.0);
  CHECK(std::abs(anchored_component(bb, CoordSet{1, 2}, Anchor{0.0}, y) - expected) < 1e-12);
  CHECK(std::abs(testutil::anchored_recursive(bb, CoordSet{1, 2}, Anchor{0.0}, y) - expected) < 1e-12);
}

TEST_CASE("order cap") {
  const BlackBoxIntegrand one([](std::span<const std::uint32_t>, std::span<const double>, double) { return 1.0; });
  Assignment x;
  for (std::uint32_t j = 1; j <= 22; ++j) {
    x.coords.push_back(j);
    x.values.push_back(0.1);
  }
  CHECK_THROWS(anchored_component(one, CoordSet::range(21), Anchor{}, x));
  CHECK_THROWS(anchored_component(one, CoordSet::range(5), Anchor{}, x, 4));
}

TEST_CASE("inclusion-exclusion agrees with the recursion") {
  const auto f = mixed();
  std::mt19937_64 rng(2);
  for (int t = 0; t < 20; ++t) {
    const auto x = random_point(rng, 4);
    for (const auto& u : testutil::subsets(CoordSet::range(4)))
      for (double a : {0.0, 0.5, 0.3})
        CHECK(std::abs(anchored_component(f, u, Anchor{a}, x) - testutil::anchored_recursive(f, u, Anchor{a}, x)) <
              1e-12);
  }
}

TEST_CASE("decomposition is complete") {
  const auto f = mixed();
  std::mt19937_64 rng(3);
  for (int t = 0; t < 50; ++t) {
    const auto x = random_point(rng, 4);
    double s = 0.0;
    for (const auto& u : testutil::subsets(CoordSet::range(4))) s += anchored_component(f, u, Anchor{}, x);
    CHECK(std::abs(s - f(x, Anchor{})) < 1e-12);
  }
}

TEST_CASE("projections annihilate components outside") {
  // Psi_w f_u = 0 when u is not inside w
  const auto f = mixed();
  std::mt19937_64 rng(4);
  for (int t = 0; t < 10; ++t) {
    const auto x = random_point(rng, 4);
    for (const auto& u : testutil::subsets(CoordSet::range(4)))
      for (const auto& w : testutil::subsets(CoordSet::range(4))) {
        if (u.is_subset_of(w)) continue;
        // f_u evaluated at (x_w; a)
        std::vector<double> vals;
        for (auto j : u) vals.push_back(w.contains(j) ? *x.get(j) : 0.5);
        CHECK(std::abs(anchored_component(f, u, Anchor{}, Assignment::from(u, vals))) < 1e-12);
      }
  }
}

TEST_CASE("alternating sums") {
  CHECK(alt_sum_S({CoordSet{}}, CoordSet{1, 2, 3}) == 1);
  CHECK(alt_sum_S({CoordSet{}, CoordSet{1}}, CoordSet{1, 2}) == 0);
  const auto fams = testutil::downward_closed_families(4);
  CHECK(fams.size() == 167);  // nonempty downsets of 2^[4]
  for (const auto& Q : fams)
    for (const auto& u : testutil::subsets(CoordSet::range(4))) {
      const long long s = alt_sum_S(Q, u);
      CHECK(s == testutil::S_brute(Q, u));
      if (!u.empty() && Q.count(u)) CHECK(s == 0);
    }
}

TEST_CASE("psi_Q projection sums the kept components") {
  const auto f = mixed();
  const std::set<CoordSet> Q{{}, {1}, {2}, {1, 2}, {4}};
  const auto g = psi_Q_projection(f, Q);
  std::mt19937_64 rng(5);
  for (int t = 0; t < 10; ++t) {
    const auto x = random_point(rng, 4);
    double s = 0.0;
    for (const auto& u : Q) s += anchored_component(f, u, Anchor{}, x);
    CHECK(std::abs(g(x, Anchor{}) - s) < 1e-12);
    // on a sampled subspace the projection agrees with f
    const Assignment x12{{1, 2}, {x.values[0], x.values[1]}};
    CHECK(g(x12, Anchor{}) == f(x12, Anchor{}));
  }
  REQUIRE(g.declared_active());
  CHECK(*g.declared_active() == CoordSet{1, 2, 4});
}

TEST_CASE("bias examples") {
  const auto w = WeightModel::explicit_support({{CoordSet{1}, 0.5}, {CoordSet{2}, 0.4}, {CoordSet{1, 2}, 0.2}});
  CHECK(bias_squared(support_closure(w), w, 1.0 / 12.0).value == 0.0);
  const auto w1 = WeightModel::explicit_support({{CoordSet{1}, 0.5}});
  CHECK(bias_squared({CoordSet{}}, w1, 1.0 / 12.0).value == doctest::Approx(1.0 / 24.0).epsilon(1e-15));
}

TEST_CASE("bias closed forms agree with brute force on [5]") {
  const double k = 1.0 / 12.0;
  const auto we = explicit5();
  const auto wp = WeightModel::product(CoordinateSequence::power_law(1.0, 2.0));
  const auto wf = WeightModel::finite_product(3, CoordinateSequence::power_law(0.8, 1.5));
  PODWeights pw;
  pw.factorial_power = 1.0;
  pw.gamma = CoordinateSequence::power_law(1.0, 2.0);
  const auto wpod = WeightModel::pod(pw).with_declared_decay(2.0);
  const Truncation T5{5, 5};
  const auto subs = testutil::subsets(CoordSet::range(5));
  std::mt19937_64 rng(6);
  for (int t = 0; t < 200; ++t) {
    // random downward-closed Q on [5]
    std::set<CoordSet> Q{CoordSet{}};
    for (int k2 = 0; k2 < 3; ++k2) {
      const auto& top = subs[rng() % subs.size()];
      for (const auto& v : testutil::subsets(top)) Q.insert(v);
    }
    CHECK(std::abs(bias_squared(Q, we, k).value - testutil::bias_brute(Q, we, k, 5)) < 1e-15);
    CHECK(std::abs(bias_squared(Q, wp, k, T5).value - testutil::bias_brute(Q, wp, k, 5)) < 1e-15);
    CHECK(std::abs(bias_squared(Q, wf, k, T5).value - testutil::bias_brute(Q, wf, k, 5)) < 1e-15);
    CHECK(std::abs(bias_squared(Q, wpod, k, T5).value - testutil::bias_brute(Q, wpod, k, 5)) < 1e-15);
  }
}

TEST_CASE("bias of product weights: truncation and bounds") {
  const double k = 1.0 / 12.0;
  const auto w = WeightModel::product(CoordinateSequence::power_law(1.0, 3.0));
  const std::set<CoordSet> Q{{}, {1}, {2}, {3}, {1, 2}};
  const auto b = bias_squared(Q, w, k);
  REQUIRE(b.untruncated);
  REQUIRE(b.upper_bound);
  CHECK(*b.untruncated >= b.value);
  CHECK(*b.upper_bound >= *b.untruncated);
  const auto big = bias_squared(Q, w, k, Truncation{100000, 6});
  CHECK(*b.untruncated == doctest::Approx(big.value).epsilon(1e-9));
}

TEST_CASE("r squared") {
  const double k = 1.0 / 12.0;
  // weights inside v: only u' = {} survives
  const auto wi = WeightModel::explicit_support({{CoordSet{1}, 0.5}, {CoordSet{2}, 0.4}, {CoordSet{1, 2}, 0.2}});
  CHECK(r_squared(CoordSet{1, 2}, CoordSet{1}, wi, k).value == 0.5);
  CHECK_THROWS(r_squared(CoordSet{1}, CoordSet{2}, wi, k));

  const auto w = WeightModel::product(CoordinateSequence::power_law(1.0, 2.0));
  double prod = 1.0;
  for (int j = 2; j <= 100; ++j) prod *= 1.0 + 1.0 / (12.0 * j * j);
  const auto r = r_squared(CoordSet{1}, CoordSet{1}, w, k, Truncation{100, 6});
  REQUIRE(r.closed_form);
  CHECK(std::abs(*r.closed_form - prod) < 1e-12);
  CHECK(std::abs(r.value - prod) < 1e-9);
  // |u'| <= 3 against direct enumeration
  double brute = 1.0;
  for (int a = 2; a <= 100; ++a) {
    const double xa = 1.0 / (12.0 * a * a);
    brute += xa;
    for (int b = a + 1; b <= 100; ++b) {
      const double xb = 1.0 / (12.0 * b * b);
      brute += xa * xb;
      for (int c = b + 1; c <= 100; ++c) brute += xa * xb / (12.0 * c * c);
    }
  }
  CHECK(std::abs(r_squared(CoordSet{1}, CoordSet{1}, w, k, Truncation{100, 3}).value - brute) < 1e-12);

  // finite support against enumeration over [5]
  const auto we = explicit5();
  const CoordSet v{1, 3};
  for (const auto& u : testutil::subsets(v)) {
    double s = 0.0;
    for (const auto& up : testutil::subsets(CoordSet{2, 4, 5}))
      s += we.gamma(set_union(u, up)) * std::pow(k, static_cast<double>(up.size()));
    CHECK(std::abs(r_squared(v, u, we, k).value - s) < 1e-15);
  }
}

TEST_CASE("operator norm") {
  const double k = 1.0 / 12.0;
  // cut-off weights of order one: (1 + sum_{j not in v} gamma_j k)^{1/2}
  const auto w = cutoff_order1(WeightModel::product(CoordinateSequence::power_law(1.0, 2.0)));
  const CoordSet v{1, 3};
  const Truncation T{200, 6};
  double s = 1.0;
  for (std::uint32_t j = 1; j <= 200; ++j)
    if (!v.contains(j)) s += k / (static_cast<double>(j) * j);
  CHECK(std::abs(psi_operator_norm(v, w, k, T).value - std::sqrt(s)) < 1e-12);

  const auto wi = WeightModel::explicit_support({{CoordSet{1}, 0.5}, {CoordSet{2}, 0.4}, {CoordSet{1, 2}, 0.2}});
  CHECK(psi_operator_norm(CoordSet{1, 2}, wi, k).value == doctest::Approx(1.0).epsilon(1e-15));

  // explicit weights on [4], v = {1, 2}
  std::map<CoordSet, double> m;
  for (const auto& u : testutil::subsets(CoordSet::range(4)))
    if (!u.empty()) m[u] = std::pow(0.5, static_cast<double>(u.size())) / u.max();
  const auto w4 = WeightModel::explicit_support(m);
  double best = 0.0;
  for (const auto& u : testutil::subsets(CoordSet{1, 2})) {
    double r2 = 0.0;
    for (const auto& up : testutil::subsets(CoordSet{3, 4}))
      r2 += w4.gamma(set_union(u, up)) * std::pow(k, static_cast<double>(up.size()));
    best = std::max(best, r2 / w4.gamma(u));
  }
  CHECK(psi_operator_norm(CoordSet{1, 2}, w4, k).value == doctest::Approx(std::sqrt(best)).epsilon(1e-14));
}

TEST_CASE("compensated sum") {
  CompensatedSum s;
  s.add(1.0);
  for (int i = 0; i < 1000; ++i) s.add(1e-17);
  s.add(-1.0);
  CHECK(s.value() == doctest::Approx(1e-14).epsilon(1e-6));
}
