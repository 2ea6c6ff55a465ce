#pragma once

// Test integrands with analytic integrals built from the mean-zero
// component g(x) = B_2(x) / 2.

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cdqmc/coordset.hpp"
#include "cdqmc/decomp.hpp"
#include "cdqmc/weights.hpp"

namespace cdqmc {

/// B_2(x) / 2 = (x^2 - x + 1/6) / 2.
inline double bank_component(double x) noexcept { return 0.5 * (x * x - x + 1.0 / 6.0); }

/// Squared norm of g in H(k_chi): int (g')^2 = 1/12 for chi = 1, 1 for chi >= 2.
double bank_component_norm2(int chi);

class BankFunction {
 public:
  enum class Kind { Constant, SupportSum, ProductForm };

  /// f = c
  static BankFunction constant(double c);
  /// f = c0 + sum_s c_s prod_{j in s} g(x_j)
  static BankFunction support_sum(double c0, std::map<CoordSet, double> coeffs, std::string name = "support-sum");
  /// f = prod_{j <= beta.size()} (1 + beta_j g(x_j))
  static BankFunction product_form(std::vector<double> beta, std::string name = "product");

  Kind kind() const noexcept { return kind_; }
  const std::string& name() const noexcept { return name_; }
  double integral() const;
  /// I(Psi_{Q,a} f) = sum_{u in Q} I(f_{u,a}).
  double projected_integral(const std::set<CoordSet>& Q, double anchor) const;
  /// Coordinates the function depends on.
  CoordSet active() const;
  double evaluate(std::span<const std::uint32_t> coords, std::span<const double> values, double anchor) const;
  /// f on the cube [0,1]^d over coordinates 1..d.
  double evaluate_dense(std::span<const double> x) const;
  BlackBoxIntegrand integrand() const;
  /// ||f||^2 in the weighted space with kernel sum_u gamma_u k_{chi,u};
  /// infinite when f has a component where gamma_u = 0, nullopt when unknown.
  std::optional<double> norm_squared(const WeightModel& w, int chi) const;
  const std::map<CoordSet, double>& coefficients() const noexcept { return coeffs_; }
  double constant_term() const noexcept { return c0_; }

 private:
  struct ProductCache;

  Kind kind_ = Kind::Constant;
  std::string name_;
  double c0_ = 0.0;
  std::map<CoordSet, double> coeffs_;
  std::shared_ptr<const std::vector<double>> beta_;
  std::shared_ptr<const ProductCache> cache_;

  double log_anchor_product(double anchor) const;
};

/// Named bank entries: "constant", "single" (g(x_1)), "two-component"
/// (g(x_1) + g(x_1) g(x_2)), "support" (c_u = gamma_u over a finite support),
/// "product" (beta_j = gamma_j), "auto" (support or product by weight kind).
BankFunction bank_function(const std::string& name, const WeightModel& w, std::uint32_t product_dimension = 1'000'000);

}  // namespace cdqmc
