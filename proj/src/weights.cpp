#include "cdqmc/weights.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace cdqmc {

namespace {
template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

double product_over(const CoordinateSequence& g, const CoordSet& u) {
  double r = 1.0;
  for (auto j : u) r *= g(j);
  return r;
}

std::map<CoordSet, double> positive_entries(std::map<CoordSet, double> values) {
  for (const auto& [u, g] : values) {
    if (g < 0.0) throw std::invalid_argument("negative weight for " + u.to_string());
    if (u.empty() && g != 1.0) throw std::invalid_argument("gamma of the empty set must be 1");
  }
  values.erase(CoordSet{});
  return values;
}

double lgamma_factorial(std::size_t l) { return std::lgamma(static_cast<double>(l) + 1.0); }

/// e_k(x_1..x_T) for k = 0..K.
std::vector<double> elementary_symmetric(const std::vector<double>& x, std::size_t K) {
  std::vector<double> e(K + 1, 0.0);
  e[0] = 1.0;
  for (double xi : x)
    for (std::size_t k = K; k >= 1; --k) e[k] += e[k - 1] * xi;
  return e;
}

}  // namespace

// ---------------------------------------------------------------------------

CoordinateSequence CoordinateSequence::power_law(double c, double a) {
  if (c < 0.0) throw std::invalid_argument("power-law scale must be nonnegative");
  CoordinateSequence s;
  s.c_ = c;
  s.a_ = a;
  return s;
}

CoordinateSequence CoordinateSequence::table(std::vector<double> values) {
  for (double v : values)
    if (v < 0.0) throw std::invalid_argument("negative coordinate weight");
  CoordinateSequence s;
  s.is_table_ = true;
  s.table_ = std::move(values);
  return s;
}

double CoordinateSequence::operator()(std::uint32_t j) const {
  if (j == 0) throw std::invalid_argument("coordinate indices are 1-based");
  if (is_table_) return j <= table_.size() ? table_[j - 1] : 0.0;
  return c_ * std::pow(static_cast<double>(j), -a_);
}

std::optional<std::uint32_t> CoordinateSequence::support_size() const {
  if (!is_table_) return c_ == 0.0 ? std::optional<std::uint32_t>(0) : std::nullopt;
  std::uint32_t n = 0;
  for (std::size_t j = 0; j < table_.size(); ++j)
    if (table_[j] > 0.0) n = static_cast<std::uint32_t>(j + 1);
  return n;
}

bool CoordinateSequence::is_nonincreasing() const {
  if (!is_table_) return a_ >= 0.0;
  return std::is_sorted(table_.rbegin(), table_.rend());
}

std::string CoordinateSequence::describe() const {
  std::ostringstream os;
  if (is_table_) {
    os << "table[";
    for (std::size_t i = 0; i < table_.size(); ++i) os << (i ? "," : "") << table_[i];
    os << "]";
  } else {
    os << c_ << "*j^-" << a_;
  }
  return os.str();
}

double PODWeights::order_weight(std::size_t l) const {
  if (!order_table.empty()) return l < order_table.size() ? order_table[l] : 0.0;
  return std::exp(factorial_power * lgamma_factorial(l));
}

// ---------------------------------------------------------------------------

WeightModel WeightModel::product(CoordinateSequence gamma) { return WeightModel(ProductWeights{std::move(gamma)}); }

WeightModel WeightModel::finite_product(int order, CoordinateSequence gamma) {
  if (order < 0) throw std::invalid_argument("finite-product order must be >= 0");
  return WeightModel(FiniteProductWeights{order, std::move(gamma)});
}

WeightModel WeightModel::pod(PODWeights w) {
  if (w.order_weight(0) != 1.0 || w.order_weight(1) != 1.0)
    throw std::invalid_argument("POD weights require Gamma_0 = Gamma_1 = 1");
  for (double g : w.order_table)
    if (g < 0.0) throw std::invalid_argument("negative POD order weight");
  return WeightModel(std::move(w));
}

WeightModel WeightModel::explicit_support(std::map<CoordSet, double> values) {
  return WeightModel(ExplicitWeights{positive_entries(std::move(values))});
}

WeightModel WeightModel::finite_intersection(std::map<CoordSet, double> values, int rho) {
  WeightModel w(FiniteIntersectionWeights{positive_entries(std::move(values)), rho});
  const int degree = intersection_degree(w);
  if (degree > rho)
    throw std::invalid_argument("intersection degree " + std::to_string(degree) + " exceeds rho = " +
                                std::to_string(rho));
  return w;
}

WeightModel WeightModel::with_declared_decay(double d) const {
  WeightModel w(*this);
  w.declared_decay_ = d;
  return w;
}

double WeightModel::gamma(const CoordSet& u) const {
  if (u.empty()) return 1.0;
  return std::visit(overloaded{
                        [&](const ProductWeights& p) { return product_over(p.gamma, u); },
                        [&](const FiniteProductWeights& p) {
                          return u.size() > static_cast<std::size_t>(p.order) ? 0.0 : product_over(p.gamma, u);
                        },
                        [&](const PODWeights& p) { return p.order_weight(u.size()) * product_over(p.gamma, u); },
                        [&](const ExplicitWeights& e) {
                          auto it = e.values.find(u);
                          return it == e.values.end() ? 0.0 : it->second;
                        },
                        [&](const FiniteIntersectionWeights& e) {
                          auto it = e.values.find(u);
                          return it == e.values.end() ? 0.0 : it->second;
                        }},
                    v_);
}

bool WeightModel::has_finite_support() const {
  return std::holds_alternative<ExplicitWeights>(v_) || std::holds_alternative<FiniteIntersectionWeights>(v_);
}

std::vector<CoordSet> WeightModel::support() const {
  const std::map<CoordSet, double>* values = nullptr;
  if (auto* e = std::get_if<ExplicitWeights>(&v_)) values = &e->values;
  if (auto* f = std::get_if<FiniteIntersectionWeights>(&v_)) values = &f->values;
  if (!values) throw std::logic_error(kind() + " weights do not have an explicit finite support");
  std::vector<CoordSet> out;
  for (const auto& [u, g] : *values)
    if (g > 0.0) out.push_back(u);
  return out;
}

std::optional<std::size_t> WeightModel::order() const {
  if (auto* p = std::get_if<FiniteProductWeights>(&v_)) return static_cast<std::size_t>(p->order);
  if (auto* p = std::get_if<PODWeights>(&v_)) {
    if (p->order_table.empty()) return std::nullopt;
    std::size_t l = 0;
    for (std::size_t i = 0; i < p->order_table.size(); ++i)
      if (p->order_table[i] > 0.0) l = i;
    return l;
  }
  if (has_finite_support()) {
    std::size_t l = 0;
    for (const auto& u : support()) l = std::max(l, u.size());
    return l;
  }
  return std::nullopt;
}

std::string WeightModel::kind() const {
  return std::visit(overloaded{[](const ProductWeights&) { return std::string("product"); },
                               [](const FiniteProductWeights&) { return std::string("finite-product"); },
                               [](const PODWeights&) { return std::string("pod"); },
                               [](const ExplicitWeights&) { return std::string("explicit"); },
                               [](const FiniteIntersectionWeights&) { return std::string("finite-intersection"); }},
                    v_);
}

std::string WeightModel::describe() const {
  std::ostringstream os;
  os << kind();
  std::visit(overloaded{[&](const ProductWeights& p) { os << "(" << p.gamma.describe() << ")"; },
                        [&](const FiniteProductWeights& p) {
                          os << "(order=" << p.order << ", " << p.gamma.describe() << ")";
                        },
                        [&](const PODWeights& p) { os << "(" << p.gamma.describe() << ")"; },
                        [&](const ExplicitWeights& e) { os << "(" << e.values.size() << " sets)"; },
                        [&](const FiniteIntersectionWeights& e) {
                          os << "(" << e.values.size() << " sets, rho=" << e.rho << ")";
                        }},
             v_);
  if (declared_decay_) os << " decay=" << *declared_decay_;
  return os.str();
}

// ---------------------------------------------------------------------------

double hat_gamma(const WeightModel& w, const CoordSet& u, double k_aa) {
  if (k_aa < 0.0) throw std::invalid_argument("k(a,a) must be nonnegative");
  return w.gamma(u) * std::pow(k_aa, static_cast<double>(u.size()));
}

std::vector<std::string> weight_warnings(const WeightModel& w, double k_aa) {
  std::vector<std::string> out;
  if (k_aa == 0.0) out.emplace_back("k(a,a) = 0: every anchored component vanishes at the anchor and integration is trivial");
  if (!is_downward_monotone(w)) out.emplace_back("weights violate downward monotonicity (gamma_v > 0 must imply gamma_u > 0 for u in v)");
  auto seq_check = [&](const CoordinateSequence& s) {
    if (!s.is_nonincreasing()) out.emplace_back("coordinate weights are not given in nonincreasing order");
  };
  std::visit(overloaded{[&](const ProductWeights& p) { seq_check(p.gamma); },
                        [&](const FiniteProductWeights& p) { seq_check(p.gamma); },
                        [&](const PODWeights& p) { seq_check(p.gamma); }, [](const auto&) {}},
             w.variant());
  return out;
}

WeightModel cutoff_order1(const WeightModel& w) {
  return std::visit(overloaded{[](const ProductWeights& p) { return WeightModel::finite_product(1, p.gamma); },
                               [](const FiniteProductWeights& p) {
                                 return WeightModel::finite_product(std::min(1, p.order), p.gamma);
                               },
                               [](const PODWeights& p) { return WeightModel::finite_product(1, p.gamma); },
                               [&](const auto&) {
                                 std::map<CoordSet, double> singles;
                                 for (const auto& u : w.support())
                                   if (u.size() == 1) singles[u] = w.gamma(u);
                                 return WeightModel::explicit_support(std::move(singles));
                               }},
                    w.variant());
}

double decay(const WeightModel& w) {
  if (w.declared_decay()) return *w.declared_decay();
  constexpr double inf = std::numeric_limits<double>::infinity();
  auto from_sequence = [](const CoordinateSequence& s) {
    if (!s.is_power_law() || s.scale() == 0.0) return inf;
    return s.exponent();
  };
  return std::visit(overloaded{[&](const ProductWeights& p) { return from_sequence(p.gamma); },
                               [&](const FiniteProductWeights& p) { return from_sequence(p.gamma); },
                               [&](const PODWeights&) -> double {
                                 throw std::invalid_argument("POD weights need a declared decay");
                               },
                               [&](const ExplicitWeights&) { return inf; },
                               [&](const FiniteIntersectionWeights&) { return inf; }},
                    w.variant());
}

PowerSumResult weighted_power_sum(const WeightModel& w, double e, const Truncation& t) {
  if (!(e > 0.0 && e <= 1.0)) throw std::invalid_argument("power-sum exponent must lie in (0, 1]");
  PowerSumResult r;
  if (w.has_finite_support()) {
    for (const auto& u : w.support()) r.value += std::pow(w.gamma(u), e);
    r.analytic = r.value;
    r.tail_bound = 0.0;
    return r;
  }

  const CoordinateSequence* seq = nullptr;
  std::visit(overloaded{[&](const ProductWeights& p) { seq = &p.gamma; },
                        [&](const FiniteProductWeights& p) { seq = &p.gamma; },
                        [&](const PODWeights& p) { seq = &p.gamma; }, [](const auto&) {}},
             w.variant());

  std::uint32_t T = t.max_index;
  if (auto n = seq->support_size()) T = std::min(T, *n);
  std::vector<double> x(T);
  for (std::uint32_t j = 1; j <= T; ++j) x[j - 1] = std::pow((*seq)(j), e);

  std::size_t K = t.max_order;
  if (auto o = w.order()) K = std::min(K, *o);
  const auto es = elementary_symmetric(x, K);
  for (std::size_t k = 1; k <= K; ++k) {
    double Gamma = 1.0;
    if (auto* p = std::get_if<PODWeights>(&w.variant())) Gamma = std::pow(p->order_weight(k), e);
    r.value += Gamma * es[k];
  }

  const bool infinite_seq = !seq->support_size().has_value();
  if (infinite_seq) {
    const double s = seq->exponent() * e;
    if (s <= 1.0) {
      r.convergent = false;
      r.warning = "sum of gamma_j^e diverges (exponent " + std::to_string(s) + " <= 1); value is truncated";
      return r;
    }
  }
  // power sums p_i = sum_j x_j^i over all j, the tail by Euler-Maclaurin
  auto zeta_tail = [&](double s) {
    const double Td = T;
    return std::pow(Td, 1.0 - s) / (s - 1.0) - 0.5 * std::pow(Td, -s) + s * std::pow(Td, -s - 1.0) / 12.0;
  };
  const std::size_t P = std::max<std::size_t>(K, 2);
  std::vector<double> p(P + 1, 0.0);
  for (std::size_t i = 1; i <= P; ++i) {
    for (double xi : x) p[i] += std::pow(xi, static_cast<double>(i));
    if (infinite_seq)
      p[i] += std::pow(seq->scale(), e * i) * zeta_tail(seq->exponent() * e * static_cast<double>(i));
  }
  if (std::holds_alternative<ProductWeights>(w.variant())) {
    double log_prefix = 0.0;
    for (double xi : x) log_prefix += std::log1p(xi);
    double tail_est = 0.0, tail_max = 0.0;
    if (infinite_seq) {
      const double s = seq->exponent() * e, Td = T, ce = std::pow(seq->scale(), e);
      // log(1 + y) = y - y^2/2 + ..., integral bound for sum_{j > T} j^{-s}
      tail_est = ce * zeta_tail(s) - 0.5 * ce * ce * zeta_tail(2.0 * s);
      tail_max = ce * std::pow(Td, 1.0 - s) / (s - 1.0);
    }
    r.analytic = std::expm1(log_prefix + tail_est);
    r.tail_bound = std::exp(log_prefix) * std::expm1(tail_max);
  } else {
    // Newton identities: k e_k = sum_{i=1}^k (-1)^{i-1} e_{k-i} p_i
    std::vector<double> ek(K + 1, 0.0);
    ek[0] = 1.0;
    for (std::size_t k = 1; k <= K; ++k) {
      double acc = 0.0;
      for (std::size_t i = 1; i <= k; ++i) acc += ((i % 2 == 1) ? 1.0 : -1.0) * ek[k - i] * p[i];
      ek[k] = acc / static_cast<double>(k);
    }
    double total = 0.0;
    for (std::size_t k = 1; k <= K; ++k) {
      double Gamma = 1.0;
      if (auto* pw = std::get_if<PODWeights>(&w.variant())) Gamma = std::pow(pw->order_weight(k), e);
      total += Gamma * ek[k];
    }
    r.analytic = total;
    if (!w.order() || K < *w.order()) r.warning = "order truncated at " + std::to_string(K);
  }
  return r;
}

std::set<CoordSet> support_closure(const WeightModel& w) {
  if (!w.has_finite_support())
    throw std::invalid_argument("support closure requires finite-support weights, got " + w.kind());
  std::set<CoordSet> out{CoordSet{}};
  for (const auto& v : w.support()) {
    if (v.size() > 30) throw std::invalid_argument("support set too large to close");
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << v.size()); ++mask) out.insert(v.subset(mask));
  }
  return out;
}

bool is_downward_monotone(const WeightModel& w) {
  return std::visit(
      overloaded{[](const ProductWeights&) { return true; },
                 [](const FiniteProductWeights&) { return true; },
                 [](const PODWeights& p) {
                   bool seen_zero = false;
                   for (std::size_t l = 0; l < p.order_table.size(); ++l) {
                     if (p.order_table[l] == 0.0) seen_zero = true;
                     else if (seen_zero) return false;
                   }
                   return true;
                 },
                 [&](const auto&) {
                   for (const auto& v : w.support())
                     for (std::uint64_t mask = 1; mask + 1 < (std::uint64_t{1} << v.size()); ++mask)
                       if (w.gamma(v.subset(mask)) <= 0.0) return false;
                   return true;
                 }},
      w.variant());
}

bool is_strongly_monotone(const WeightModel& w) {
  auto seq_ok = [](const CoordinateSequence& s) {
    if (s.is_power_law()) return s.scale() <= 1.0 && s.exponent() >= 0.0;
    for (std::uint32_t j = 1; j <= *s.support_size(); ++j)
      if (s(j) > 1.0) return false;
    return true;
  };
  return std::visit(
      overloaded{[&](const ProductWeights& p) { return seq_ok(p.gamma); },
                 [&](const FiniteProductWeights& p) { return seq_ok(p.gamma); },
                 [&](const PODWeights& p) {
                   for (std::size_t l = 1; l < 64; ++l)
                     if (p.order_weight(l + 1) > p.order_weight(l)) return false;
                   return seq_ok(p.gamma);
                 },
                 [&](const auto&) {
                   for (const auto& v : w.support()) {
                     const double gv = w.gamma(v);
                     for (std::uint64_t mask = 0; mask + 1 < (std::uint64_t{1} << v.size()); ++mask)
                       if (w.gamma(v.subset(mask)) < gv) return false;
                   }
                   return true;
                 }},
      w.variant());
}

int intersection_degree(const WeightModel& w) {
  const auto supp = w.support();
  int worst = 0;
  for (const auto& u : supp) {
    int meets = 0;
    for (const auto& v : supp)
      if (u.intersects(v)) ++meets;
    worst = std::max(worst, meets - 1);
  }
  return worst;
}

int intersection_eta(const WeightModel& w) {
  std::map<std::uint32_t, int> count;
  int worst = 0;
  for (const auto& u : w.support())
    for (auto k : u) worst = std::max(worst, ++count[k]);
  return worst;
}

}  // namespace cdqmc
