#include <doctest.h>

#include <random>
#include <stdexcept>

#include "cdqmc/bank.hpp"
#include "cdqmc/cdalg.hpp"
#include "cdqmc/config.hpp"
#include "cdqmc/scramble.hpp"
#include "oracles.hpp"

using namespace cdqmc;

namespace {

WeightModel product_pow(double c, double a) { return WeightModel::product(CoordinateSequence::power_law(c, a)); }

PlannerInput input(double eps, double tau = 1.5) {
  PlannerInput in;
  in.eps = eps;
  in.tau = tau;
  return in;
}

RuleTemplate mc() {
  RuleTemplate r;
  r.kind = RuleKind::MonteCarlo;
  return r;
}

bool downward_closed(const Plan& p) {
  for (const auto& [u, n] : p.allocation) {
    if (n < 1) return false;
    for (const auto& v : testutil::subsets(u))
      if (!p.allocation.count(v)) return false;
  }
  return p.allocation.count(CoordSet{}) && p.allocation.at(CoordSet{}) == 1;
}

}  // namespace

TEST_CASE("cost models") {
  CHECK(CostModel::parse("linear")(3) == 4.0);
  CHECK(CostModel::parse("poly:s=2")(2) == 9.0);
  CHECK(CostModel::parse("exp:sigma=0.5")(2) == doctest::Approx(std::exp(1.0)));
  CHECK(CostModel::parse("poly:s=2").describe() == "poly:s=2");
  CHECK_THROWS(CostModel::parse("quadratic"));
}

TEST_CASE("raw allocation arithmetic") {
  PlannerConstants k;
  k.eps = 0.1;
  k.tau = 1.0;
  k.alpha0 = 1.0;
  k.c = 1.0;
  k.L = 2.0;
  k.C_hat = 2.0;
  CHECK(raw_allocation(k, 1, 0.5) == 200);
  k.tau = 2.0;
  CHECK(raw_allocation(k, 1, 0.5) == 14);  // floor(sqrt(200))
  k.eps = 3.0;
  CHECK(raw_allocation(k, 1, 0.5) == 0);
  CHECK(raw_allocation(k, 1, 0.0) == 0);
}

TEST_CASE("planner constants") {
  const auto w = product_pow(1.0, 3.0);
  const auto k = planner_constants(w, input(0.1, 2.5));
  CHECK(k.decay == 3.0);
  CHECK(k.tau == doctest::Approx(2.0 - 0.01));
  CHECK(k.tau_requested == 2.5);
  CHECK(k.alpha0 == doctest::Approx(0.5 * (k.tau / 3.0 + 2.0 / 3.0)));
  CHECK(k.C_hat == doctest::Approx(1.0 + 1.0 / 12.0));
  CHECK(k.L == doctest::Approx(*weighted_power_sum(w, 1.0 - k.alpha0).analytic));
  const auto k2 = planner_constants(w, input(0.1, 1.0));
  CHECK(k2.tau == 1.0);
  CHECK_THROWS(planner_constants(product_pow(1.0, 1.0), input(0.1)));
  auto bad = input(0.1, 1.0);
  bad.alpha0 = 0.9;
  CHECK_THROWS(planner_constants(w, bad));
}

TEST_CASE("degenerate plan") {
  const auto w = product_pow(1.0, 3.0);
  const Plan p = plan_build(w, input(100.0));
  CHECK(p.allocation.size() == 1);
  CHECK(p.allocation.at(CoordSet{}) == 1);
  CHECK(epsilon_dimension(p) == 0);
  CHECK(plan_cost(p, CostModel::linear()) == 1.0);
  CHECK(diagnostics_B(p) == 1.0);
  const auto f = BankFunction::product_form({0.5, 0.25}).integrand();
  CHECK(cd_estimate(f, p, 3).estimate == f(Assignment{}, Anchor{}));
}

TEST_CASE("plan cost arithmetic") {
  Plan p;
  p.allocation = {{CoordSet{}, 1}, {CoordSet{1}, 4}};
  CHECK(plan_cost(p, CostModel::linear()) == 17.0);
}

TEST_CASE("diagnostics B") {
  Plan p;
  p.rule.alpha1 = 1.0;
  p.rule.alpha2 = 1.0;
  p.allocation = {{CoordSet{}, 1}, {CoordSet{1}, 15}, {CoordSet{2}, 15}, {CoordSet{1, 2}, 15}};
  CHECK(diagnostics_B(p) == doctest::Approx(1.0 + std::log(16.0)).epsilon(1e-14));
  p.rule.alpha1 = 0.0;
  CHECK(diagnostics_B(p) == 1.0);
}

TEST_CASE("finite support plans match the formula") {
  const auto w = parse_weights("explicit:1=0.6,2=0.5,3=0.3,1+2=0.2,2+3=0.05");
  for (double eps : {0.5, 0.2, 0.1, 0.05, 0.01}) {
    PlannerInput in = input(eps, 1.5);
    const Plan p = plan_build(w, in, mc());
    const auto& k = p.constants;
    std::map<CoordSet, std::uint64_t> raw;
    for (const auto& u : w.support()) {
      const double score = k.c * k.L * std::pow(k.C_hat, static_cast<double>(u.size())) * std::pow(w.gamma(u), k.alpha0);
      if (score >= eps * eps) raw[u] = std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::floor(std::pow(score / (eps * eps), 1.0 / k.tau) * (1 + 1e-12))));
    }
    std::map<CoordSet, std::uint64_t> expected{{CoordSet{}, 1}};
    for (const auto& [u, n] : raw)
      for (const auto& v : testutil::subsets(u))
        if (!v.empty()) expected[v] = raw.count(v) ? raw[v] : 1;
    CHECK(p.allocation == expected);
    CHECK(downward_closed(p));
  }
}

TEST_CASE("product plans: enumeration is complete against brute force") {
  const auto w = product_pow(1.0, 4.0);
  for (double eps : {0.3, 0.1}) {
    const Plan p = plan_build(w, input(eps, 1.5), mc());
    const auto& k = p.constants;
    // a set containing j scores at most score({j}) times every factor above one
    double boost = 0.0;
    for (std::uint32_t j = 1; j < 1000; ++j)
      boost += std::max(0.0, std::log(k.C_hat) + k.alpha0 * std::log(w.singleton(j)));
    std::uint32_t J = 0;
    while (std::log(k.c * k.L * k.C_hat) + k.alpha0 * std::log(w.singleton(J + 1)) + boost >= 2.0 * std::log(eps)) ++J;
    std::map<CoordSet, std::uint64_t> raw;
    std::vector<std::uint32_t> cur;
    auto visit = [&](auto&& self, std::uint32_t from) -> void {
      if (!cur.empty()) {
        const CoordSet u(cur);
        double g = 1.0;
        for (auto j : u) g *= w.singleton(j);
        if (const auto n = raw_allocation(k, u.size(), g); n > 0) raw[u] = n;
      }
      if (cur.size() == 4) return;
      for (std::uint32_t j = from; j <= J; ++j) {
        cur.push_back(j);
        self(self, j + 1);
        cur.pop_back();
      }
    };
    visit(visit, 1);
    // subsets dropping a coordinate whose factor exceeds one enter with n = 1
    std::map<CoordSet, std::uint64_t> expected{{CoordSet{}, 1}};
    for (const auto& [u, n] : raw)
      for (const auto& v : testutil::subsets(u))
        if (!v.empty()) expected[v] = raw.count(v) ? raw[v] : 1;
    CHECK(epsilon_dimension(p) <= 4);
    CHECK(p.allocation == expected);
    CHECK(downward_closed(p));
  }
}

TEST_CASE("finite order plans stay within the order") {
  const auto w = parse_weights("finite-product:beta=2,c=1,a=3");
  for (double eps : {0.1, 0.01, 0.003}) {
    const Plan p = plan_build(w, input(eps));
    CHECK(epsilon_dimension(p) <= 2);
    CHECK(downward_closed(p));
  }
}

TEST_CASE("PLR plans use powers of the base") {
  const auto w = product_pow(1.0, 3.0);
  RuleTemplate r;
  r.base = FieldBase(3);
  const Plan p = plan_build(w, input(0.01), r);
  for (const auto& [u, n] : p.allocation) CHECK(round_up_to_power(n, 3) == n);
}

TEST_CASE("monotone refinement") {
  for (const char* preset : {"product:c=1,a=3", "pairs:a=3,J=50", "finite-product:beta=2,a=3"}) {
    const auto w = parse_weights(preset);
    Plan prev = plan_build(w, input(0.2));
    std::size_t dprev = epsilon_dimension(prev);
    for (double eps : {0.1, 0.05, 0.02, 0.01, 0.005}) {
      const Plan p = plan_build(w, input(eps));
      for (const auto& [u, n] : prev.allocation) {
        REQUIRE(p.allocation.count(u));
        CHECK(p.allocation.at(u) >= n);
      }
      CHECK(epsilon_dimension(p) >= dprev);
      dprev = epsilon_dimension(p);
      prev = p;
    }
  }
}

TEST_CASE("planner refusals") {
  CHECK_THROWS(plan_build(parse_weights("pod:c=1,a=3,p=1,decay=3"), input(0.1)));
  auto in = input(1e-3);
  in.max_active = 10;
  CHECK_THROWS_AS(plan_build(product_pow(1.0, 3.0), in), std::runtime_error);
  CHECK_THROWS(plan_build(WeightModel::explicit_support({{CoordSet{1, 2}, 0.5}}), input(0.1)));
}

TEST_CASE("constant integrands are integrated exactly") {
  const auto f = BankFunction::constant(2.5).integrand();
  for (auto r : {mc(), RuleTemplate{}}) {
    const Plan p = plan_build(product_pow(1.0, 3.0), input(0.02), r);
    for (std::uint64_t s : {1ull, 7ull}) CHECK(cd_estimate(f, p, s).estimate == 2.5);
  }
}

TEST_CASE("ledger equals plan cost and seeds are stable") {
  const auto w = product_pow(1.0, 3.0);
  const auto f = bank_function("product", w, 1000).integrand();
  for (const auto& cost : {CostModel::linear(), CostModel::polynomial(2.0), CostModel::exponential(0.5)}) {
    const Plan p = plan_build(w, input(0.02));
    const auto r = cd_estimate(f, p, 5, Anchor{}, cost);
    CHECK(r.ledger.total == plan_cost(p, cost));
    double s = 0.0;
    for (const auto& [u, c] : r.ledger.per_u) s += c;
    CHECK(s == doctest::Approx(r.ledger.total).epsilon(1e-14));
    CHECK(cd_estimate(f, p, 5, Anchor{}, cost).estimate == r.estimate);
  }
  CHECK(rule_seed(1, CoordSet{1, 2}) == prf::derive(1, std::vector<std::uint32_t>{1, 2}));
  CHECK(rule_seed(1, CoordSet{1, 2}) != rule_seed(1, CoordSet{2, 3}));
}

TEST_CASE("estimates of f and of its projection coincide bit for bit") {
  const auto w = product_pow(1.0, 4.0);
  const auto f = bank_function("product", w, 1000).integrand();
  for (auto r : {mc(), RuleTemplate{}}) {
    const Plan p = plan_build(w, input(0.05, 1.5), r);
    const auto g = psi_Q_projection(f, p.active_set());
    for (std::uint64_t s = 0; s < 5; ++s) CHECK(cd_estimate(f, p, s).estimate == cd_estimate(g, p, s).estimate);
  }
}

TEST_CASE("failures name the component") {
  const BlackBoxIntegrand bad([](std::span<const std::uint32_t> c, std::span<const double>, double) -> double {
    if (c.size() == 2) throw std::runtime_error("boom");
    return 0.0;
  });
  const Plan p = plan_build(product_pow(1.0, 4.0), input(0.02, 1.5));
  REQUIRE(epsilon_dimension(p) >= 2);
  try {
    cd_estimate(bad, p, 1);
    FAIL("expected an exception");
  } catch (const std::runtime_error& e) {
    CHECK(std::string(e.what()).find("component {") != std::string::npos);
  }
}

TEST_CASE("single component estimate is unbiased") {
  const auto w = product_pow(1.0, 3.0);
  const auto f = bank_function("single", w).integrand();
  const Plan p = plan_build(w, input(0.05));
  std::vector<double> est;
  for (std::uint64_t s = 0; s < 200; ++s) est.push_back(cd_estimate(f, p, s).estimate);
  const auto v = summarize_replicates(est);
  CHECK(std::abs(v.mean) <= 4.0 * v.mean_stderr + 1e-15);
}

TEST_CASE("mean tracks the projected integral and MSE splits into bias and variance") {
  const auto w = product_pow(1.0, 4.0);
  const BankFunction fb = bank_function("product", w, 1000);
  const auto f = fb.integrand();
  const Plan p = plan_build(w, input(0.08, 1.5), mc());
  const auto Q = p.active_set();
  const double Ipsi = fb.projected_integral(Q, 0.5);
  const int R = 400;
  std::vector<double> est, sq;
  for (int r = 0; r < R; ++r) {
    est.push_back(cd_estimate(f, p, static_cast<std::uint64_t>(r)).estimate);
    sq.push_back((est.back() - 1.0) * (est.back() - 1.0));
  }
  const auto v = summarize_replicates(est);
  const auto m = summarize_replicates(sq);
  CHECK(std::abs(v.mean - Ipsi) <= 4.0 * v.mean_stderr);
  const double bias2 = (1.0 - Ipsi) * (1.0 - Ipsi);
  CHECK(std::abs(m.mean - (bias2 + v.variance)) <= 4.0 * m.mean_stderr);
  // the function's bias is bounded by the worst case times its norm
  const double worst = bias_squared(Q, w, 1.0 / 12.0).untruncated.value();
  CHECK(bias2 <= worst * fb.norm_squared(w, 1).value());
}

TEST_CASE("plan json round trip") {
  const Plan p = plan_build(product_pow(1.0, 3.0), input(0.02));
  const std::string text = plan_to_json(p);
  const Plan q = plan_from_json(text);
  CHECK(q.allocation == p.allocation);
  CHECK(q.constants.alpha0 == p.constants.alpha0);
  CHECK(q.constants.L == p.constants.L);
  CHECK(q.rule.alpha == p.rule.alpha);
  CHECK(plan_to_json(q) == text);
}
