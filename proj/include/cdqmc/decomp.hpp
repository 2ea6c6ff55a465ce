#pragma once

// Anchored decomposition f = sum_u f_{u,a}, projections Psi_{v,a}, the
// alternating sums S_{Q,u}, worst-case bias, r^2_{v,u,a} and the operator
// norm of Psi_{v,a}.

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "cdqmc/coordset.hpp"
#include "cdqmc/weights.hpp"

namespace cdqmc {

/// Constant anchor (a, a, ...).
struct Anchor {
  double a = 0.5;
};

/// Finite assignment of coordinate values; every other coordinate sits at
/// the anchor. `coords` is sorted and 1-based, `values` is aligned with it.
struct Assignment {
  std::vector<std::uint32_t> coords;
  std::vector<double> values;

  static Assignment from(const CoordSet& u, std::span<const double> values);
  /// Value of coordinate j, or nullopt when unassigned.
  std::optional<double> get(std::uint32_t j) const;
};

class BlackBoxIntegrand {
 public:
  /// f at the point with `coords` set to `values` and all others at `anchor`.
  using Evaluator = std::function<double(std::span<const std::uint32_t> coords,
                                         std::span<const double> values, double anchor)>;

  explicit BlackBoxIntegrand(Evaluator f, std::optional<CoordSet> declared_active = std::nullopt,
                             std::optional<double> known_integral = std::nullopt, std::string name = "f")
      : f_(std::move(f)), active_(std::move(declared_active)), integral_(known_integral), name_(std::move(name)) {}

  double operator()(std::span<const std::uint32_t> coords, std::span<const double> values,
                    const Anchor& a) const {
    return f_(coords, values, a.a);
  }
  double operator()(const Assignment& x, const Anchor& a) const { return f_(x.coords, x.values, a.a); }

  const std::optional<CoordSet>& declared_active() const noexcept { return active_; }
  const std::optional<double>& known_integral() const noexcept { return integral_; }
  const std::string& name() const noexcept { return name_; }

 private:
  Evaluator f_;
  std::optional<CoordSet> active_;
  std::optional<double> integral_;
  std::string name_;
};

/// f(x_v; a). Throws if x misses a coordinate of v.
double psi_project(const BlackBoxIntegrand& f, const CoordSet& v, const Anchor& a, const Assignment& x);

inline constexpr std::size_t kMaxComponentOrder = 20;

/// f_{u,a}(x) = sum_{v subset u} (-1)^{|u \ v|} f(x_v; a), one evaluation per v.
double anchored_component(const BlackBoxIntegrand& f, const CoordSet& u, const Anchor& a, const Assignment& x,
                          std::size_t max_order = kMaxComponentOrder);

/// Same as above with x given as values aligned with the elements of u.
/// Uses caller-provided scratch buffers, no allocation in steady state.
double anchored_component(const BlackBoxIntegrand& f, const CoordSet& u, const Anchor& a,
                          std::span<const double> xu, std::vector<std::uint32_t>& coord_buf,
                          std::vector<double>& value_buf);

/// sum_{v in Q, v subset u} (-1)^{|v|}
long long alt_sum_S(const std::set<CoordSet>& Q, const CoordSet& u);

/// Psi_{Q,a} f for downward-closed Q: sum over v in Q of f_{v,a}.
BlackBoxIntegrand psi_Q_projection(const BlackBoxIntegrand& f, std::set<CoordSet> Q);

struct SeriesValue {
  double value = 0.0;                 ///< enumeration within the truncation
  std::optional<double> closed_form;  ///< closed form over the same coordinate range, all orders
  std::optional<double> untruncated;  ///< closed form including the infinite coordinate tail
  std::optional<double> upper_bound;
  std::string note;
};

/// Worst-case squared bias sum_{u != {}} S_{Q,u}^2 gamma_u k_aa^{|u|}.
/// Finite support: exact. Product weights: pair formula over coordinates
/// <= T.max_index and all orders (value = closed_form), untruncated adds the
/// infinite tail, upper_bound is sum_{u not in Q} 4^{|u|} gamma_u k_aa^{|u|}.
/// Finite-product and POD weights: enumeration over subsets of the
/// coordinates used by Q with |u| <= T.max_order.
SeriesValue bias_squared(const std::set<CoordSet>& Q, const WeightModel& w, double k_aa,
                         const Truncation& T = {});

/// r^2_{v,u,a} = sum_{u' subset N \ v} gamma_{u cup u'} k_aa^{|u'|}. `value`
/// enumerates u' within [T.max_index] and |u'| <= T.max_order. Product
/// weights: closed_form is gamma_u prod_{j <= T, j not in v} (1 + gamma_j k_aa)
/// and untruncated extends the product over all j.
SeriesValue r_squared(const CoordSet& v, const CoordSet& u, const WeightModel& w, double k_aa,
                      const Truncation& T = {});

/// max_{u subset v, gamma_u > 0} gamma_u^{-1/2} r_{v,u,a}.
SeriesValue psi_operator_norm(const CoordSet& v, const WeightModel& w, double k_aa, const Truncation& T = {},
                              std::size_t max_order = kMaxComponentOrder);

/// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) comp_ += (sum_ - t) + x;
    else comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

}  // namespace cdqmc
