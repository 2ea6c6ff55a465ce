#pragma once

// Weight families gamma_u over finite coordinate sets, their derived
// scalars, and structural predicates.

#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "cdqmc/coordset.hpp"

namespace cdqmc {

/// Coordinate sequence gamma_j, j >= 1: either c j^{-a} or an explicit
/// finite table (zero beyond its end).
class CoordinateSequence {
 public:
  static CoordinateSequence power_law(double c, double a);
  static CoordinateSequence table(std::vector<double> values);

  double operator()(std::uint32_t j) const;
  bool is_power_law() const noexcept { return table_.empty() && !is_table_; }
  double scale() const noexcept { return c_; }
  double exponent() const noexcept { return a_; }
  /// Number of nonzero entries, or nullopt when infinite.
  std::optional<std::uint32_t> support_size() const;
  bool is_nonincreasing() const;
  std::string describe() const;

  friend bool operator==(const CoordinateSequence&, const CoordinateSequence&) = default;

 private:
  double c_ = 1.0;
  double a_ = 0.0;
  bool is_table_ = false;
  std::vector<double> table_;
};

struct ProductWeights {
  CoordinateSequence gamma;
  friend bool operator==(const ProductWeights&, const ProductWeights&) = default;
};

/// prod_{j in u} gamma_j for |u| <= order, zero otherwise.
struct FiniteProductWeights {
  int order = 1;
  CoordinateSequence gamma;
  friend bool operator==(const FiniteProductWeights&, const FiniteProductWeights&) = default;
};

/// Gamma_{|u|} prod_{j in u} gamma_j. Gamma_l comes from `order_table` when it
/// is nonempty (zero past its end), else (l!)^{factorial_power}.
struct PODWeights {
  std::vector<double> order_table;
  double factorial_power = 0.0;
  CoordinateSequence gamma;
  double order_weight(std::size_t l) const;
  friend bool operator==(const PODWeights&, const PODWeights&) = default;
};

/// Finite support given explicitly; gamma_emptyset = 1 is implied.
struct ExplicitWeights {
  std::map<CoordSet, double> values;
  friend bool operator==(const ExplicitWeights&, const ExplicitWeights&) = default;
};

/// Explicit finite support with intersection degree at most rho, checked on
/// construction.
struct FiniteIntersectionWeights {
  std::map<CoordSet, double> values;
  int rho = 0;
  friend bool operator==(const FiniteIntersectionWeights&, const FiniteIntersectionWeights&) = default;
};

class WeightModel {
 public:
  using Variant = std::variant<ProductWeights, FiniteProductWeights, PODWeights, ExplicitWeights,
                               FiniteIntersectionWeights>;

  static WeightModel product(CoordinateSequence gamma);
  static WeightModel finite_product(int order, CoordinateSequence gamma);
  static WeightModel pod(PODWeights w);
  static WeightModel explicit_support(std::map<CoordSet, double> values);
  static WeightModel finite_intersection(std::map<CoordSet, double> values, int rho);

  WeightModel with_declared_decay(double decay) const;

  double gamma(const CoordSet& u) const;
  /// gamma_{{j}}
  double singleton(std::uint32_t j) const { return gamma(CoordSet{j}); }

  const Variant& variant() const noexcept { return v_; }
  std::optional<double> declared_decay() const noexcept { return declared_decay_; }
  bool has_finite_support() const;
  /// Nonempty sets with gamma_u > 0 (finite-support variants only).
  std::vector<CoordSet> support() const;
  /// Largest |u| with gamma_u > 0, or nullopt for unbounded order.
  std::optional<std::size_t> order() const;
  std::string kind() const;
  std::string describe() const;

  friend bool operator==(const WeightModel&, const WeightModel&) = default;

 private:
  explicit WeightModel(Variant v) : v_(std::move(v)) {}

  Variant v_;
  std::optional<double> declared_decay_;
};

/// gamma_u k_aa^{|u|}
double hat_gamma(const WeightModel& w, const CoordSet& u, double k_aa);

/// Human-readable problems with using w at anchor diagonal k_aa
/// (k_aa = 0 makes integration trivial, violated monotonicity, ...).
std::vector<std::string> weight_warnings(const WeightModel& w, double k_aa);

/// gamma^{(1)}: singletons kept, every other nonempty set zero.
WeightModel cutoff_order1(const WeightModel& w);

/// Analytic or declared decay exponent; +infinity for finite support.
/// Throws when neither a formula nor a declaration is available.
double decay(const WeightModel& w);

struct Truncation {
  std::uint32_t max_index = 1000;
  std::size_t max_order = 6;
};

struct PowerSumResult {
  double value = 0.0;                 ///< truncated enumeration
  std::optional<double> analytic;     ///< untruncated closed form (product weights)
  std::optional<double> tail_bound;   ///< upper bound on analytic - truncated product
  bool convergent = true;
  std::string warning;
};

/// sum over nonempty u within the truncation of gamma_u^e.
PowerSumResult weighted_power_sum(const WeightModel& w, double e, const Truncation& t = {});

/// Subset closure of the support, including the empty set.
std::set<CoordSet> support_closure(const WeightModel& w);

/// gamma_v > 0 implies gamma_u > 0 for every u subset of v.
bool is_downward_monotone(const WeightModel& w);
/// gamma_u >= gamma_v whenever u is a subset of v.
bool is_strongly_monotone(const WeightModel& w);
/// max over u with gamma_u > 0 of |{v : gamma_v > 0, u meets v}| - 1 (finite support).
int intersection_degree(const WeightModel& w);
/// max over coordinates k of |{u : gamma_u > 0, k in u}| (finite support).
int intersection_eta(const WeightModel& w);

}  // namespace cdqmc
