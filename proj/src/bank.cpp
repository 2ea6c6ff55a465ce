#include "cdqmc/bank.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <unordered_map>

#include "cdqmc/kernels.hpp"

namespace cdqmc {

double bank_component_norm2(int chi) {
  if (chi < 1) throw std::invalid_argument("smoothness chi must be >= 1");
  return chi == 1 ? 1.0 / 12.0 : 1.0;
}

struct BankFunction::ProductCache {
  double anchor = kDefaultAnchor;
  double log_product = 0.0;  ///< product form: log prod_j (1 + beta_j g(a))
  double anchored_sum = 0.0; ///< support sum: sum_s c_s g(a)^{|s|}
  std::vector<std::pair<CoordSet, double>> sets;
  std::unordered_map<std::uint32_t, std::vector<std::uint32_t>> by_coordinate;
};

BankFunction BankFunction::constant(double c) {
  BankFunction f;
  f.kind_ = Kind::Constant;
  f.name_ = "constant";
  f.c0_ = c;
  return f;
}

BankFunction BankFunction::support_sum(double c0, std::map<CoordSet, double> coeffs, std::string name) {
  BankFunction f;
  f.kind_ = Kind::SupportSum;
  f.name_ = std::move(name);
  f.c0_ = c0;
  coeffs.erase(CoordSet{});
  f.coeffs_ = std::move(coeffs);
  auto cache = std::make_shared<ProductCache>();
  const double ga = bank_component(cache->anchor);
  for (const auto& [s, c] : f.coeffs_) {
    const auto id = static_cast<std::uint32_t>(cache->sets.size());
    cache->sets.emplace_back(s, c);
    cache->anchored_sum += c * std::pow(ga, static_cast<double>(s.size()));
    for (auto j : s) cache->by_coordinate[j].push_back(id);
  }
  f.cache_ = std::move(cache);
  return f;
}

BankFunction BankFunction::product_form(std::vector<double> beta, std::string name) {
  BankFunction f;
  f.kind_ = Kind::ProductForm;
  f.name_ = std::move(name);
  f.beta_ = std::make_shared<const std::vector<double>>(std::move(beta));
  auto cache = std::make_shared<ProductCache>();
  cache->log_product = f.log_anchor_product(cache->anchor);
  f.cache_ = std::move(cache);
  return f;
}

double BankFunction::log_anchor_product(double anchor) const {
  if (cache_ && cache_->anchor == anchor) return cache_->log_product;
  const double ga = bank_component(anchor);
  double s = 0.0;
  for (double b : *beta_) {
    const double t = 1.0 + b * ga;
    if (t <= 0.0) throw std::domain_error("product bank function vanishes at the anchor");
    s += std::log(t);
  }
  return s;
}

double BankFunction::integral() const {
  switch (kind_) {
    case Kind::Constant:
    case Kind::SupportSum: return c0_;
    case Kind::ProductForm: return 1.0;
  }
  return 0.0;
}

double BankFunction::projected_integral(const std::set<CoordSet>& Q, double anchor) const {
  const double ga = bank_component(anchor);
  switch (kind_) {
    case Kind::Constant: return c0_;
    case Kind::SupportSum: {
      // I(Psi_Q prod_{j in s} g) = g(a)^{|s|} S_{Q,s}
      CompensatedSum sum;
      sum.add(c0_);
      for (const auto& [s, c] : coeffs_)
        sum.add(c * std::pow(ga, static_cast<double>(s.size())) * static_cast<double>(alt_sum_S(Q, s)));
      return sum.value();
    }
    case Kind::ProductForm: {
      // I(f_{u,a}) = P_a prod_{j in u} (-beta_j g(a)) / (1 + beta_j g(a))
      const double P = std::exp(log_anchor_product(anchor));
      CompensatedSum sum;
      for (const auto& u : Q) {
        double t = P;
        for (auto j : u) {
          const double b = j <= beta_->size() ? (*beta_)[j - 1] : 0.0;
          t *= -b * ga / (1.0 + b * ga);
        }
        sum.add(t);
      }
      return sum.value();
    }
  }
  return 0.0;
}

CoordSet BankFunction::active() const {
  switch (kind_) {
    case Kind::Constant: return {};
    case Kind::SupportSum: {
      std::vector<std::uint32_t> all;
      for (const auto& [s, c] : coeffs_) all.insert(all.end(), s.begin(), s.end());
      return CoordSet(std::move(all));
    }
    case Kind::ProductForm: {
      std::vector<std::uint32_t> all;
      for (std::size_t j = 0; j < beta_->size(); ++j)
        if ((*beta_)[j] != 0.0) all.push_back(static_cast<std::uint32_t>(j + 1));
      return CoordSet(std::move(all));
    }
  }
  return {};
}

double BankFunction::evaluate(std::span<const std::uint32_t> coords, std::span<const double> values,
                              double anchor) const {
  if (coords.size() != values.size()) throw std::invalid_argument("coordinate/value size mismatch");
  const double ga = bank_component(anchor);
  switch (kind_) {
    case Kind::Constant: return c0_;
    case Kind::SupportSum: {
      auto value_of = [&](std::uint32_t j) {
        auto it = std::lower_bound(coords.begin(), coords.end(), j);
        return (it != coords.end() && *it == j) ? bank_component(values[static_cast<std::size_t>(it - coords.begin())])
                                                : ga;
      };
      double base = 0.0;
      if (cache_->anchor == anchor) {
        base = cache_->anchored_sum;
      } else {
        for (const auto& [s, c] : cache_->sets) base += c * std::pow(ga, static_cast<double>(s.size()));
      }
      // correct the sets touched by an assigned coordinate
      std::vector<std::uint32_t> touched;
      for (auto j : coords) {
        auto it = cache_->by_coordinate.find(j);
        if (it != cache_->by_coordinate.end()) touched.insert(touched.end(), it->second.begin(), it->second.end());
      }
      std::sort(touched.begin(), touched.end());
      touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
      CompensatedSum sum;
      sum.add(c0_);
      sum.add(base);
      for (auto id : touched) {
        const auto& [s, c] = cache_->sets[id];
        double p = 1.0;
        for (auto j : s) p *= value_of(j);
        sum.add(c * (p - std::pow(ga, static_cast<double>(s.size()))));
      }
      return sum.value();
    }
    case Kind::ProductForm: {
      double log_rest = log_anchor_product(anchor);
      double assigned = 1.0;
      for (std::size_t i = 0; i < coords.size(); ++i) {
        const auto j = coords[i];
        if (j > beta_->size()) continue;
        const double b = (*beta_)[j - 1];
        log_rest -= std::log(1.0 + b * ga);
        assigned *= 1.0 + b * bank_component(values[i]);
      }
      return assigned * std::exp(log_rest);
    }
  }
  return 0.0;
}

double BankFunction::evaluate_dense(std::span<const double> x) const {
  std::vector<std::uint32_t> coords(x.size());
  for (std::size_t j = 0; j < x.size(); ++j) coords[j] = static_cast<std::uint32_t>(j + 1);
  const CoordSet act = active();
  if (!act.empty() && act.max() > x.size())
    throw std::invalid_argument("dense evaluation needs all " + std::to_string(act.max()) + " active coordinates");
  return evaluate(coords, x, kDefaultAnchor);
}

BlackBoxIntegrand BankFunction::integrand() const {
  BankFunction self = *this;
  return BlackBoxIntegrand(
      [self](std::span<const std::uint32_t> c, std::span<const double> v, double a) { return self.evaluate(c, v, a); },
      active(), integral(), name_);
}

std::optional<double> BankFunction::norm_squared(const WeightModel& w, int chi) const {
  const double kappa = bank_component_norm2(chi);
  switch (kind_) {
    case Kind::Constant: return c0_ * c0_;
    case Kind::SupportSum: {
      double s = c0_ * c0_;
      for (const auto& [u, c] : coeffs_) {
        if (c == 0.0) continue;
        const double g = w.gamma(u);
        if (g <= 0.0) return std::numeric_limits<double>::infinity();
        s += c * c * std::pow(kappa, static_cast<double>(u.size())) / g;
      }
      return s;
    }
    case Kind::ProductForm: {
      if (!std::holds_alternative<ProductWeights>(w.variant())) return std::nullopt;
      double logn = 0.0;
      for (std::size_t j = 0; j < beta_->size(); ++j) {
        if ((*beta_)[j] == 0.0) continue;
        const double g = w.singleton(static_cast<std::uint32_t>(j + 1));
        if (g <= 0.0) return std::numeric_limits<double>::infinity();
        logn += std::log1p((*beta_)[j] * (*beta_)[j] * kappa / g);
      }
      return std::exp(logn);
    }
  }
  return std::nullopt;
}

BankFunction bank_function(const std::string& name, const WeightModel& w, std::uint32_t product_dimension) {
  if (name == "constant") return BankFunction::constant(1.0);
  if (name == "single") return BankFunction::support_sum(0.0, {{CoordSet{1}, 1.0}}, "single");
  if (name == "two-component")
    return BankFunction::support_sum(0.0, {{CoordSet{1}, 1.0}, {CoordSet{1, 2}, 1.0}}, "two-component");
  std::string kind = name;
  if (kind == "auto") kind = w.has_finite_support() ? "support" : "product";
  if (kind == "support") {
    if (!w.has_finite_support()) throw std::invalid_argument("support bank function needs finite-support weights");
    std::map<CoordSet, double> c;
    for (const auto& u : w.support()) c[u] = w.gamma(u);
    return BankFunction::support_sum(1.0, std::move(c), "support");
  }
  if (kind == "product") {
    if (w.has_finite_support()) throw std::invalid_argument("product bank function needs coordinate weights");
    std::vector<double> beta(product_dimension);
    for (std::uint32_t j = 1; j <= product_dimension; ++j) beta[j - 1] = w.singleton(j);
    while (!beta.empty() && beta.back() == 0.0) beta.pop_back();
    return BankFunction::product_form(std::move(beta), "product");
  }
  throw std::invalid_argument("unknown bank function '" + name +
                              "' (constant, single, two-component, support, product, auto)");
}

}  // namespace cdqmc
