#pragma once

// Changing dimension algorithm: plan construction from an accuracy target,
// the estimator sum_{u in Q} Q_{u,n_u}(f_{u,a}), cost accounting in the
// unrestricted subspace sampling model, and plan diagnostics.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cdqmc/coordset.hpp"
#include "cdqmc/decomp.hpp"
#include "cdqmc/quadrature.hpp"
#include "cdqmc/weights.hpp"

namespace cdqmc {

/// Cost $(nu) of one evaluation on a subspace of nu active variables.
struct CostModel {
  enum class Kind { Linear, Polynomial, Exponential };
  Kind kind = Kind::Linear;
  double param = 1.0;  ///< exponent s for (1+nu)^s, rate sigma for e^{sigma nu}

  static CostModel linear() { return {}; }
  static CostModel polynomial(double s) { return {Kind::Polynomial, s}; }
  static CostModel exponential(double sigma) { return {Kind::Exponential, sigma}; }
  /// "linear", "poly:s=2", "exp:sigma=0.5"
  static CostModel parse(const std::string& spec);

  double operator()(std::size_t nu) const;
  std::string describe() const;
};

struct PlannerInput {
  double eps = 0.1;
  double tau = 2.0;  ///< variance decay rate of the building blocks
  double c = 1.0;
  double C = 1.0;
  double k_aa = 1.0 / 12.0;
  std::optional<double> alpha0;  ///< default: midpoint of its admissible interval
  double delta = 0.01;
  Truncation truncation{};
  std::size_t max_active = 100000;
  std::size_t max_order = kMaxComponentOrder;
};

struct PlannerConstants {
  double eps = 0.0;
  double tau = 0.0;            ///< effective value used in the allocation
  double tau_requested = 0.0;
  double decay = 0.0;
  double alpha0 = 0.0;
  double c = 1.0;
  double C = 1.0;
  double k_aa = 0.0;
  double C_hat = 0.0;          ///< max{C (1 + k_aa), 4 k_aa}
  double L = 0.0;              ///< sum_{u != {}} gamma_u^{1 - alpha0}
  double delta = 0.0;
};

/// Resolves alpha0, tau, C_hat and L for weights w.
PlannerConstants planner_constants(const WeightModel& w, const PlannerInput& in);

struct Plan {
  PlannerConstants constants;
  RuleTemplate rule;
  std::string weights;  ///< descriptor of the weight model
  /// n_u for u in Q; Q is downward closed and contains {} with n = 1.
  std::map<CoordSet, std::uint64_t> allocation;
  std::vector<std::string> notes;

  std::set<CoordSet> active_set() const;
};

/// n_u' for a set of weight gamma_u (0 when the threshold is not met).
std::uint64_t raw_allocation(const PlannerConstants& k, std::size_t order, double gamma_u);

Plan plan_build(const WeightModel& w, const PlannerInput& in, const RuleTemplate& rule = {});

/// max |u| over Q.
std::size_t epsilon_dimension(const Plan& plan);

/// sum_{u in Q} 2^{|u|} $(|u|) n_u.
double plan_cost(const Plan& plan, const CostModel& cost);

/// max over u in Q and w subset u of F_w(n_u),
/// F_w(n) = (1 + ln(n + 1) / (|w| - 1)^{alpha2})^{alpha1 (|w| - 1)^{alpha2}}, F_w = 1 for |w| <= 1.
double diagnostics_B(const Plan& plan);

struct CostLedger {
  CostModel dollar;
  double total = 0.0;
  std::map<CoordSet, double> per_u;
  std::uint64_t evaluations = 0;

  void charge(const CoordSet& u, std::uint64_t n);
};

struct CdResult {
  double estimate = 0.0;
  CostLedger ledger;
};

/// Rule seed for the set u under master_seed.
std::uint64_t rule_seed(std::uint64_t master_seed, const CoordSet& u);

CdResult cd_estimate(const BlackBoxIntegrand& f, const Plan& plan, std::uint64_t master_seed,
                     const Anchor& a = {}, const CostModel& cost = {});

/// JSON document describing the plan.
std::string plan_to_json(const Plan& plan, const CostModel& cost = {});
Plan plan_from_json(const std::string& text);

}  // namespace cdqmc
