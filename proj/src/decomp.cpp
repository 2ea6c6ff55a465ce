#include "cdqmc/decomp.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

namespace cdqmc {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

const CoordinateSequence* sequence_of(const WeightModel& w) {
  const CoordinateSequence* seq = nullptr;
  std::visit(overloaded{[&](const ProductWeights& p) { seq = &p.gamma; },
                        [&](const FiniteProductWeights& p) { seq = &p.gamma; },
                        [&](const PODWeights& p) { seq = &p.gamma; }, [](const auto&) {}},
             w.variant());
  return seq;
}

/// Last coordinate index to enumerate for an infinite-support model.
std::uint32_t index_limit(const CoordinateSequence& seq, const Truncation& T) {
  std::uint32_t n = T.max_index;
  if (auto s = seq.support_size()) n = std::min(n, *s);
  return n;
}

/// log prod_{j > T} (1 + scale gamma_j), Euler-Maclaurin for power laws.
double log_tail_product(const CoordinateSequence& seq, double scale, std::uint32_t T) {
  if (!seq.is_power_law()) {
    double s = 0.0;
    if (auto n = seq.support_size())
      for (std::uint32_t j = T + 1; j <= *n; ++j) s += std::log1p(scale * seq(j));
    return s;
  }
  const double a = seq.exponent(), c = scale * seq.scale(), Td = T;
  if (a <= 1.0) return std::numeric_limits<double>::infinity();
  // sum_{j>T} log1p(c j^-a) ~ c sum j^-a - c^2/2 sum j^-2a
  auto zeta_tail = [&](double s) {
    return std::pow(Td, 1.0 - s) / (s - 1.0) - 0.5 * std::pow(Td, -s) + s * std::pow(Td, -s - 1.0) / 12.0;
  };
  return c * zeta_tail(a) - 0.5 * c * c * zeta_tail(2.0 * a);
}

std::vector<double> elementary_symmetric(const std::vector<double>& x, std::size_t K) {
  std::vector<double> e(K + 1, 0.0);
  e[0] = 1.0;
  for (double xi : x)
    for (std::size_t k = K; k >= 1; --k) e[k] += e[k - 1] * xi;
  return e;
}

/// Gamma_l for POD, indicator of l <= beta for finite-product, 1 for product.
double order_factor(const WeightModel& w, std::size_t l) {
  if (auto* p = std::get_if<PODWeights>(&w.variant())) return p->order_weight(l);
  if (auto* p = std::get_if<FiniteProductWeights>(&w.variant()))
    return l <= static_cast<std::size_t>(p->order) ? 1.0 : 0.0;
  return 1.0;
}

CoordSet union_of(const std::set<CoordSet>& Q) {
  std::vector<std::uint32_t> all;
  for (const auto& v : Q) all.insert(all.end(), v.begin(), v.end());
  return CoordSet(std::move(all));
}

/// Visit every subset of `pool` with at most k elements.
template <class F>
void for_each_small_subset(const std::vector<std::uint32_t>& pool, std::size_t k, F&& fn) {
  std::vector<std::uint32_t> cur;
  auto rec = [&](auto&& self, std::size_t start) -> void {
    fn(CoordSet(cur));
    if (cur.size() == k) return;
    for (std::size_t i = start; i < pool.size(); ++i) {
      cur.push_back(pool[i]);
      self(self, i + 1);
      cur.pop_back();
    }
  };
  rec(rec, 0);
}

}  // namespace

Assignment Assignment::from(const CoordSet& u, std::span<const double> values) {
  if (values.size() != u.size()) throw std::invalid_argument("assignment size mismatch");
  return {u.items(), std::vector<double>(values.begin(), values.end())};
}

std::optional<double> Assignment::get(std::uint32_t j) const {
  auto it = std::lower_bound(coords.begin(), coords.end(), j);
  if (it == coords.end() || *it != j) return std::nullopt;
  return values[static_cast<std::size_t>(it - coords.begin())];
}

double psi_project(const BlackBoxIntegrand& f, const CoordSet& v, const Anchor& a, const Assignment& x) {
  std::vector<double> vals;
  vals.reserve(v.size());
  for (auto j : v) {
    auto xj = x.get(j);
    if (!xj) throw std::invalid_argument("assignment misses coordinate " + std::to_string(j));
    vals.push_back(*xj);
  }
  return f(v.items(), vals, a);
}

double anchored_component(const BlackBoxIntegrand& f, const CoordSet& u, const Anchor& a,
                          std::span<const double> xu, std::vector<std::uint32_t>& coord_buf,
                          std::vector<double>& value_buf) {
  const std::size_t k = u.size();
  if (k > kMaxComponentOrder) throw std::invalid_argument("anchored component order exceeds cap");
  CompensatedSum sum;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << k); ++mask) {
    coord_buf.clear();
    value_buf.clear();
    for (std::size_t i = 0; i < k; ++i)
      if (mask >> i & 1u) {
        coord_buf.push_back(u[i]);
        value_buf.push_back(xu[i]);
      }
    const double fv = f(coord_buf, value_buf, a);
    sum.add(((k - static_cast<std::size_t>(std::popcount(mask))) % 2 == 0) ? fv : -fv);
  }
  return sum.value();
}

double anchored_component(const BlackBoxIntegrand& f, const CoordSet& u, const Anchor& a, const Assignment& x,
                          std::size_t max_order) {
  if (u.size() > max_order)
    throw std::invalid_argument("refusing anchored component of order " + std::to_string(u.size()));
  std::vector<double> xu;
  xu.reserve(u.size());
  for (auto j : u) {
    auto xj = x.get(j);
    if (!xj) throw std::invalid_argument("assignment misses coordinate " + std::to_string(j));
    xu.push_back(*xj);
  }
  std::vector<std::uint32_t> cb;
  std::vector<double> vb;
  return anchored_component(f, u, a, xu, cb, vb);
}

long long alt_sum_S(const std::set<CoordSet>& Q, const CoordSet& u) {
  long long s = 0;
  if (u.size() < 30 && (std::uint64_t{1} << u.size()) <= Q.size()) {
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << u.size()); ++mask)
      if (Q.count(u.subset(mask))) s += (std::popcount(mask) % 2 == 0) ? 1 : -1;
    return s;
  }
  for (const auto& v : Q)
    if (v.size() <= u.size() && v.is_subset_of(u)) s += (v.size() % 2 == 0) ? 1 : -1;
  return s;
}

BlackBoxIntegrand psi_Q_projection(const BlackBoxIntegrand& f, std::set<CoordSet> Q) {
  std::optional<CoordSet> active = union_of(Q);
  if (f.declared_active()) {
    std::vector<std::uint32_t> keep;
    for (auto j : *active)
      if (f.declared_active()->contains(j)) keep.push_back(j);
    active = CoordSet(std::move(keep));
  }
  auto eval = [f, Q = std::move(Q)](std::span<const std::uint32_t> coords, std::span<const double> values,
                                    double anchor) {
    const CoordSet w(std::vector<std::uint32_t>(coords.begin(), coords.end()));
    const Anchor a{anchor};
    if (Q.count(w)) return f(coords, values, a);
    if (w.size() > kMaxComponentOrder) throw std::invalid_argument("projection input has too many coordinates");
    CompensatedSum sum;
    std::vector<std::uint32_t> cb;
    std::vector<double> vb, xv;
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << w.size()); ++mask) {
      const CoordSet v = w.subset(mask);
      if (!Q.count(v)) continue;
      xv.clear();
      for (std::size_t i = 0; i < w.size(); ++i)
        if (mask >> i & 1u) xv.push_back(values[i]);
      sum.add(anchored_component(f, v, a, xv, cb, vb));
    }
    return sum.value();
  };
  return BlackBoxIntegrand(std::move(eval), std::move(active), std::nullopt, "Psi_Q " + f.name());
}

// ---------------------------------------------------------------------------

SeriesValue bias_squared(const std::set<CoordSet>& Q, const WeightModel& w, double k_aa, const Truncation& T) {
  SeriesValue out;
  if (w.has_finite_support()) {
    CompensatedSum s, bound;
    for (const auto& u : w.support()) {
      const double g = hat_gamma(w, u, k_aa);
      const double S = static_cast<double>(alt_sum_S(Q, u));
      s.add(S * S * g);
      if (!Q.count(u)) bound.add(std::pow(4.0, static_cast<double>(u.size())) * g);
    }
    out.value = s.value();
    out.closed_form = out.untruncated = out.value;
    out.upper_bound = bound.value();
    return out;
  }

  const CoordinateSequence& seq = *sequence_of(w);
  const CoordSet C = union_of(Q);
  const std::uint32_t J = std::max(index_limit(seq, T), C.max());

  if (std::holds_alternative<ProductWeights>(w.variant())) {
    // sum_u gamma^_u S_u^2 = P sum_{v,v' in Q} (-1)^{|v|+|v'|} prod_{j in v cup v'} rho_j
    auto rho = [&](std::uint32_t j) {
      const double g = seq(j) * k_aa;
      return g / (1.0 + g);
    };
    long double logP = 0.0L, logP4 = 0.0L;
    for (std::uint32_t j = 1; j <= J; ++j) {
      logP += std::log1p(static_cast<long double>(seq(j) * k_aa));
      logP4 += std::log1p(static_cast<long double>(4.0 * seq(j) * k_aa));
    }
    const std::vector<CoordSet> q(Q.begin(), Q.end());
    std::vector<long double> R(q.size());
    for (std::size_t i = 0; i < q.size(); ++i) {
      R[i] = 1.0L;
      for (auto j : q[i]) R[i] *= rho(j);
    }
    long double X = 0.0L, comp = 0.0L;
    auto add = [&](long double x) {
      const long double y = x - comp, t = X + y;
      comp = (t - X) - y;
      X = t;
    };
    for (std::size_t i = 0; i < q.size(); ++i) {
      add(R[i]);
      for (std::size_t k = i + 1; k < q.size(); ++k) {
        long double inter = 1.0L;
        auto a = q[i].begin(), b = q[k].begin();
        while (a != q[i].end() && b != q[k].end()) {
          if (*a == *b) {
            inter *= rho(*a);
            ++a, ++b;
          } else if (*a < *b) {
            ++a;
          } else {
            ++b;
          }
        }
        const long double term = 2.0L * R[i] * R[k] / inter;
        add(((q[i].size() + q[k].size()) % 2 == 0) ? term : -term);
      }
    }
    // drop the u = {} term
    const long double empty = Q.count(CoordSet{}) ? 1.0L : 0.0L;
    out.value = static_cast<double>(std::exp(logP) * X - empty);
    out.closed_form = out.value;
    const long double tail = log_tail_product(seq, k_aa, J);
    out.untruncated = static_cast<double>(std::exp(logP + tail) * X - empty);
    long double inQ = 0.0L;
    for (const auto& v : q) {
      long double g = 1.0L;
      for (auto j : v) g *= 4.0L * seq(j) * k_aa;
      inQ += g;
    }
    out.upper_bound = static_cast<double>(std::exp(logP4 + log_tail_product(seq, 4.0 * k_aa, J)) - inQ);
    return out;
  }

  // finite-product and POD: u = u1 cup u2 with u1 subset C and u2 outside C
  std::size_t K = T.max_order;
  if (auto o = w.order()) K = std::min(K, *o);
  std::vector<double> outside;
  for (std::uint32_t j = 1; j <= J; ++j)
    if (!C.contains(j)) outside.push_back(seq(j) * k_aa);
  const auto e = elementary_symmetric(outside, K);
  CompensatedSum s;
  std::size_t visited = 0;
  for_each_small_subset(C.items(), K, [&](const CoordSet& u1) {
    if (++visited > 5'000'000) throw std::runtime_error("bias enumeration too large");
    const double S = static_cast<double>(alt_sum_S(Q, u1));
    if (S == 0.0) return;
    double g = 1.0;
    for (auto j : u1) g *= seq(j) * k_aa;
    double inner = 0.0;
    for (std::size_t k = 0; k + u1.size() <= K; ++k) inner += order_factor(w, u1.size() + k) * e[k];
    s.add(S * S * g * inner);
  });
  out.value = s.value() - (Q.count(CoordSet{}) ? 1.0 : 0.0);
  out.note = "order truncated at " + std::to_string(K);
  return out;
}

SeriesValue r_squared(const CoordSet& v, const CoordSet& u, const WeightModel& w, double k_aa,
                      const Truncation& T) {
  if (!u.is_subset_of(v)) throw std::invalid_argument("r_squared requires u subset of v");
  SeriesValue out;
  if (w.has_finite_support()) {
    CompensatedSum s;
    if (u.empty()) s.add(1.0);
    for (const auto& t : w.support()) {
      if (!u.is_subset_of(t)) continue;
      const CoordSet extra = set_difference(t, u);
      if (extra.intersects(v)) continue;
      s.add(w.gamma(t) * std::pow(k_aa, static_cast<double>(extra.size())));
    }
    out.value = s.value();
    out.closed_form = out.untruncated = out.value;
    return out;
  }

  const CoordinateSequence& seq = *sequence_of(w);
  const std::uint32_t J = index_limit(seq, T);
  std::vector<double> x;
  long double logP = 0.0L;
  for (std::uint32_t j = 1; j <= J; ++j) {
    if (v.contains(j)) continue;
    x.push_back(seq(j) * k_aa);
    logP += std::log1p(static_cast<long double>(x.back()));
  }
  const std::size_t K = T.max_order;
  const auto e = elementary_symmetric(x, K);
  double gu = 1.0;
  for (auto j : u) gu *= seq(j);
  CompensatedSum s;
  for (std::size_t k = 0; k <= K; ++k) s.add(order_factor(w, u.size() + k) * e[k]);
  out.value = gu * s.value();
  if (std::holds_alternative<ProductWeights>(w.variant())) {
    // coordinates of v beyond J are absent from the tail
    double tail = log_tail_product(seq, k_aa, J);
    for (auto j : v)
      if (j > J) tail -= std::log1p(seq(j) * k_aa);
    out.closed_form = gu * static_cast<double>(std::exp(logP));
    out.untruncated = gu * static_cast<double>(std::exp(logP + tail));
  }
  return out;
}

SeriesValue psi_operator_norm(const CoordSet& v, const WeightModel& w, double k_aa, const Truncation& T,
                              std::size_t max_order) {
  if (v.size() > max_order) throw std::invalid_argument("operator norm: |v| exceeds cap");
  SeriesValue out;
  double best = 0.0, best_closed = 0.0, best_full = 0.0;
  bool closed = true;
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << v.size()); ++mask) {
    const CoordSet u = v.subset(mask);
    const double g = w.gamma(u);
    if (g <= 0.0) continue;
    const auto r2 = r_squared(v, u, w, k_aa, T);
    best = std::max(best, r2.value / g);
    if (r2.closed_form && r2.untruncated) {
      best_closed = std::max(best_closed, *r2.closed_form / g);
      best_full = std::max(best_full, *r2.untruncated / g);
    } else {
      closed = false;
    }
  }
  out.value = std::sqrt(best);
  if (closed) {
    out.closed_form = std::sqrt(best_closed);
    out.untruncated = std::sqrt(best_full);
  }
  return out;
}

}  // namespace cdqmc
