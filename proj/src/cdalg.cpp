#include "cdqmc/cdalg.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "cdqmc/scramble.hpp"

namespace cdqmc {

using nlohmann::json;

// ---------------------------------------------------------------------------
// cost model

CostModel CostModel::parse(const std::string& spec) {
  const auto colon = spec.find(':');
  const std::string name = spec.substr(0, colon);
  double param = 1.0;
  if (colon != std::string::npos) {
    std::string rest = spec.substr(colon + 1);
    if (auto eq = rest.find('='); eq != std::string::npos) rest = rest.substr(eq + 1);
    param = std::stod(rest);
  }
  if (name == "linear") return linear();
  if (name == "poly") return polynomial(param);
  if (name == "exp") return exponential(param);
  throw std::invalid_argument("unknown cost model '" + spec + "' (linear, poly:s=<x>, exp:sigma=<x>)");
}

double CostModel::operator()(std::size_t nu) const {
  const double v = static_cast<double>(nu);
  switch (kind) {
    case Kind::Linear: return 1.0 + v;
    case Kind::Polynomial: return std::pow(1.0 + v, param);
    case Kind::Exponential: return std::exp(param * v);
  }
  return 1.0 + v;
}

std::string CostModel::describe() const {
  std::ostringstream os;
  switch (kind) {
    case Kind::Linear: os << "linear"; break;
    case Kind::Polynomial: os << "poly:s=" << param; break;
    case Kind::Exponential: os << "exp:sigma=" << param; break;
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// planner

PlannerConstants planner_constants(const WeightModel& w, const PlannerInput& in) {
  if (!(in.eps > 0.0)) throw std::invalid_argument("epsilon must be positive");
  if (!(in.tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (in.k_aa < 0.0) throw std::invalid_argument("k(a,a) must be nonnegative");
  PlannerConstants k;
  k.eps = in.eps;
  k.c = in.c;
  k.C = in.C;
  k.k_aa = in.k_aa;
  k.delta = in.delta;
  k.tau_requested = in.tau;
  k.decay = decay(w);
  if (!(k.decay > 1.0)) throw std::invalid_argument("planner requires decay > 1, got " + std::to_string(k.decay));
  k.tau = in.tau;
  if (std::isfinite(k.decay) && k.tau >= k.decay - 1.0) k.tau = k.decay - 1.0 - in.delta;
  if (!(k.tau > 0.0)) throw std::invalid_argument("effective tau is not positive (decay too close to 1)");

  const double lo = std::isfinite(k.decay) ? k.tau / k.decay : 0.0;
  const double hi = std::isfinite(k.decay) ? 1.0 - 1.0 / k.decay : 1.0;
  k.alpha0 = in.alpha0.value_or(0.5 * (lo + hi));
  if (!(k.alpha0 > lo && k.alpha0 < hi))
    throw std::invalid_argument("alpha0 must lie in (" + std::to_string(lo) + ", " + std::to_string(hi) + ")");

  k.C_hat = std::max(k.C * (1.0 + k.k_aa), 4.0 * k.k_aa);
  const auto L = weighted_power_sum(w, 1.0 - k.alpha0, in.truncation);
  if (!L.convergent) throw std::invalid_argument("sum of gamma_u^(1-alpha0) diverges: " + L.warning);
  k.L = L.analytic.value_or(L.value);
  return k;
}

std::uint64_t raw_allocation(const PlannerConstants& k, std::size_t order, double gamma_u) {
  if (gamma_u <= 0.0) return 0;
  const double log_score = std::log(k.c * k.L) + static_cast<double>(order) * std::log(k.C_hat) +
                           k.alpha0 * std::log(gamma_u);
  const double log_eps2 = 2.0 * std::log(k.eps);
  if (log_score < log_eps2) return 0;
  // relative slack so that exact integers are not lost to rounding in exp/log
  const double n = std::floor(std::exp((log_score - log_eps2) / k.tau) * (1.0 + 1e-12));
  if (n >= 0x1.0p62) {
    std::ostringstream os;
    os << "sample allocation exceeds 2^62 (L = " << std::setprecision(3) << k.L
       << "); raise epsilon or lower tau so that alpha0 moves away from 1 - 1/decay";
    throw std::overflow_error(os.str());
  }
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(n));
}

std::set<CoordSet> Plan::active_set() const {
  std::set<CoordSet> q;
  for (const auto& [u, n] : allocation) q.insert(u);
  return q;
}

namespace {

const CoordinateSequence& product_sequence(const WeightModel& w, int& order) {
  if (auto* p = std::get_if<ProductWeights>(&w.variant())) {
    order = std::numeric_limits<int>::max();
    return p->gamma;
  }
  if (auto* p = std::get_if<FiniteProductWeights>(&w.variant())) {
    order = p->order;
    return p->gamma;
  }
  throw std::invalid_argument("no planner enumeration for " + w.kind() + " weights");
}

/// Sets with n_u' >= 1 for (finite-)product weights, by depth-first search
/// over increasing coordinates. A branch stops once neither the child nor
/// any extension by later coordinates can reach the threshold.
std::map<CoordSet, std::uint64_t> enumerate_product(const WeightModel& w, const PlannerConstants& k,
                                                    const PlannerInput& in) {
  int order = 0;
  const CoordinateSequence& seq = product_sequence(w, order);
  order = std::min<int>(order, static_cast<int>(in.max_order));
  const bool monotone = seq.is_nonincreasing();
  const auto table_end = seq.support_size();
  if (!monotone && !table_end)
    throw std::invalid_argument("planner needs nonincreasing coordinate weights");

  const double log_thr = 2.0 * std::log(k.eps);
  const double log_root = std::log(k.c * k.L);
  auto log_factor = [&](std::uint32_t j) {
    const double g = seq(j);
    return g > 0.0 ? std::log(k.C_hat) + k.alpha0 * std::log(g) : -std::numeric_limits<double>::infinity();
  };
  // gain[j] = sum_{i > j} max(0, log factor_i); factors exceed 1 only for a finite prefix
  std::vector<double> gain;
  {
    std::vector<double> pos;
    for (std::uint32_t j = 1;; ++j) {
      if (table_end && j > *table_end) break;
      const double f = log_factor(j);
      if (f <= 0.0 && monotone) break;
      if (j > 10'000'000) throw std::runtime_error("coordinate weights decay too slowly for the planner");
      pos.push_back(std::max(0.0, f));
    }
    gain.assign(pos.size() + 2, 0.0);
    for (std::size_t j = pos.size(); j >= 1; --j) gain[j - 1] = gain[j] + pos[j - 1];
  }
  auto gain_after = [&](std::uint32_t j) { return j < gain.size() ? gain[j] : 0.0; };

  std::map<CoordSet, std::uint64_t> found;
  std::vector<std::uint32_t> cur;
  std::size_t visited = 0;
  const std::size_t visit_cap = 50 * in.max_active;
  auto rec = [&](auto&& self, double log_score, std::uint32_t last) -> void {
    if (static_cast<int>(cur.size()) >= order) return;
    for (std::uint32_t j = last + 1;; ++j) {
      if (table_end && j > *table_end) break;
      const double child = log_score + log_factor(j);
      if (child + gain_after(j) < log_thr) {
        if (monotone) break;
        continue;
      }
      if (++visited > visit_cap) throw std::runtime_error("planner enumeration cap reached; epsilon too small");
      cur.push_back(j);
      if (child >= log_thr) {
        CoordSet u(cur);
        double g = 1.0;
        for (auto i : cur) g *= seq(i);
        if (auto n = raw_allocation(k, u.size(), g); n > 0) {
          found.emplace(std::move(u), n);
          if (found.size() > in.max_active)
            throw std::runtime_error("active set exceeds cap of " + std::to_string(in.max_active) +
                                     " sets; epsilon too small");
        }
      }
      self(self, child, j);
      cur.pop_back();
    }
  };
  rec(rec, log_root, 0);
  return found;
}

}  // namespace

Plan plan_build(const WeightModel& w, const PlannerInput& in, const RuleTemplate& rule) {
  Plan plan;
  plan.constants = planner_constants(w, in);
  plan.rule = rule;
  plan.weights = w.describe();
  const auto& k = plan.constants;
  if (k.tau != k.tau_requested)
    plan.notes.push_back("tau replaced by decay - 1 - delta = " + std::to_string(k.tau));
  for (auto& msg : weight_warnings(w, k.k_aa)) plan.notes.push_back(std::move(msg));
  if (std::holds_alternative<PODWeights>(w.variant()))
    throw std::invalid_argument("no planner specialization exists for POD weights");
  if (!is_downward_monotone(w)) throw std::invalid_argument("planner requires downward monotone weights");

  std::map<CoordSet, std::uint64_t> raw;
  if (w.has_finite_support()) {
    for (const auto& u : w.support()) {
      if (u.size() > in.max_order) continue;
      if (auto n = raw_allocation(k, u.size(), w.gamma(u)); n > 0) raw.emplace(u, n);
    }
  } else {
    raw = enumerate_product(w, k, in);
  }

  plan.allocation[CoordSet{}] = 1;
  for (const auto& [u, n] : raw) {
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << u.size()); ++mask) {
      const CoordSet v = u.subset(mask);
      if (v.empty() || plan.allocation.count(v)) continue;
      auto it = raw.find(v);
      plan.allocation[v] = it == raw.end() ? 1 : it->second;
    }
    if (plan.allocation.size() > in.max_active)
      throw std::runtime_error("active set exceeds cap of " + std::to_string(in.max_active) + " sets");
  }
  if (rule.kind == RuleKind::InterlacedScrambledPLR) {
    bool rounded = false;
    for (auto& [u, n] : plan.allocation) {
      const auto r = round_up_to_power(n, rule.base.value());
      rounded |= (r != n);
      n = r;
    }
    if (rounded) plan.notes.push_back("sample counts rounded up to powers of " + std::to_string(rule.base.value()));
  }
  return plan;
}

std::size_t epsilon_dimension(const Plan& plan) {
  std::size_t d = 0;
  for (const auto& [u, n] : plan.allocation) d = std::max(d, u.size());
  return d;
}

namespace {
double charge_of(const CostModel& cost, const CoordSet& u, std::uint64_t n) {
  return static_cast<double>(n) * std::ldexp(1.0, static_cast<int>(u.size())) * cost(u.size());
}
}  // namespace

double plan_cost(const Plan& plan, const CostModel& cost) {
  double total = 0.0;
  for (const auto& [u, n] : plan.allocation) total += charge_of(cost, u, n);
  return total;
}

double diagnostics_B(const Plan& plan) {
  const double a1 = plan.rule.alpha1, a2 = plan.rule.alpha2;
  double best = 1.0;
  if (a1 == 0.0) return best;
  for (const auto& [u, n] : plan.allocation) {
    for (std::size_t w = 2; w <= u.size(); ++w) {
      const double t = std::pow(static_cast<double>(w - 1), a2);
      const double F = std::pow(1.0 + std::log(static_cast<double>(n) + 1.0) / t, a1 * t);
      best = std::max(best, F);
    }
  }
  return best;
}

void CostLedger::charge(const CoordSet& u, std::uint64_t n) {
  const double c = charge_of(dollar, u, n);
  total += c;
  per_u[u] += c;
  evaluations += n << u.size();
}

std::uint64_t rule_seed(std::uint64_t master_seed, const CoordSet& u) {
  return prf::derive(master_seed, std::span<const std::uint32_t>(u.items()));
}

CdResult cd_estimate(const BlackBoxIntegrand& f, const Plan& plan, std::uint64_t master_seed, const Anchor& a,
                     const CostModel& cost) {
  CdResult out;
  out.ledger.dollar = cost;
  CompensatedSum total;
  std::vector<std::uint32_t> cb;
  std::vector<double> vb, xu;
  for (const auto& [u, n] : plan.allocation) {
    try {
      if (u.empty()) {
        total.add(f(std::span<const std::uint32_t>{}, std::span<const double>{}, a));
        out.ledger.charge(u, 1);
        continue;
      }
      RuleSpec spec{plan.rule, u, n, std::nullopt, rule_seed(master_seed, u)};
      const Eigen::MatrixXd y = rule_points(spec);
      CompensatedSum s;
      xu.resize(u.size());
      for (Eigen::Index i = 0; i < y.rows(); ++i) {
        for (Eigen::Index j = 0; j < y.cols(); ++j) xu[static_cast<std::size_t>(j)] = y(i, j);
        s.add(anchored_component(f, u, a, xu, cb, vb));
      }
      total.add(s.value() / static_cast<double>(y.rows()));
      out.ledger.charge(u, n);
    } catch (const std::exception& e) {
      throw std::runtime_error("component " + u.to_string() + ": " + e.what());
    }
  }
  out.estimate = total.value();
  return out;
}

// ---------------------------------------------------------------------------
// serialization

std::string plan_to_json(const Plan& plan, const CostModel& cost) {
  const auto& k = plan.constants;
  json j;
  j["weights"] = plan.weights;
  j["constants"] = {{"eps", k.eps},       {"tau", k.tau},     {"tau_requested", k.tau_requested},
                    {"decay", std::isfinite(k.decay) ? json(k.decay) : json("inf")},
                    {"alpha0", k.alpha0}, {"c", k.c},         {"C", k.C},
                    {"k_aa", k.k_aa},     {"C_hat", k.C_hat}, {"L", k.L},
                    {"delta", k.delta}};
  j["rule"] = {{"kind", to_string(plan.rule.kind)}, {"alpha", plan.rule.alpha},
               {"base", plan.rule.base.value()},    {"precision", plan.rule.precision},
               {"alpha1", plan.rule.alpha1},        {"alpha2", plan.rule.alpha2}};
  json alloc = json::array();
  for (const auto& [u, n] : plan.allocation) alloc.push_back({{"u", u.items()}, {"n", n}});
  j["allocation"] = alloc;
  j["active_sets"] = plan.allocation.size();
  j["epsilon_dimension"] = epsilon_dimension(plan);
  j["cost_model"] = cost.describe();
  j["plan_cost"] = plan_cost(plan, cost);
  j["notes"] = plan.notes;
  return j.dump(2);
}

Plan plan_from_json(const std::string& text) {
  const json j = json::parse(text);
  Plan p;
  p.weights = j.at("weights").get<std::string>();
  const auto& c = j.at("constants");
  auto& k = p.constants;
  k.eps = c.at("eps");
  k.tau = c.at("tau");
  k.tau_requested = c.at("tau_requested");
  k.decay = c.at("decay").is_string() ? std::numeric_limits<double>::infinity() : c.at("decay").get<double>();
  k.alpha0 = c.at("alpha0");
  k.c = c.at("c");
  k.C = c.at("C");
  k.k_aa = c.at("k_aa");
  k.C_hat = c.at("C_hat");
  k.L = c.at("L");
  k.delta = c.at("delta");
  const auto& r = j.at("rule");
  p.rule.kind = parse_rule_kind(r.at("kind"));
  p.rule.alpha = r.at("alpha");
  p.rule.base = FieldBase(r.at("base").get<std::uint32_t>());
  p.rule.precision = r.at("precision");
  p.rule.alpha1 = r.at("alpha1");
  p.rule.alpha2 = r.at("alpha2");
  for (const auto& e : j.at("allocation"))
    p.allocation[CoordSet(e.at("u").get<std::vector<std::uint32_t>>())] = e.at("n").get<std::uint64_t>();
  if (j.contains("notes")) p.notes = j.at("notes").get<std::vector<std::string>>();
  return p;
}

}  // namespace cdqmc
