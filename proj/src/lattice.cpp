#include "cdqmc/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <mutex>
#include <random>
#include <set>
#include <sstream>

#include "cdqmc/kernels.hpp"
#include "cdqmc/scramble.hpp"
#include "cdqmc/weights.hpp"

namespace cdqmc {

GeneratingVector::GeneratingVector(FieldBase base, int m, PolyGF modulus, std::vector<PolyGF> q)
    : base_(base), m_(m), modulus_(std::move(modulus)), q_(std::move(q)) {
  if (m_ < 1) throw std::invalid_argument("generating vector needs m >= 1");
  if (!(modulus_.base() == base_)) throw std::invalid_argument("modulus base mismatch");
  if (modulus_.degree() != m_)
    throw std::invalid_argument("modulus degree " + std::to_string(modulus_.degree()) +
                                " does not match m = " + std::to_string(m_));
  if (!(modulus_ == default_modulus(base_, m_)) && !is_irreducible(modulus_)) throw std::invalid_argument("modulus is not irreducible");
  for (auto& qj : q_) {
    if (!(qj.base() == base_)) throw std::invalid_argument("generating vector base mismatch");
    qj = poly_mod(qj, modulus_);
    if (qj.is_zero()) throw std::invalid_argument("q_j is divisible by the modulus");
  }
}

GeneratingVector GeneratingVector::prefix(int s) const {
  if (s < 0 || s > dimension()) throw std::out_of_range("prefix longer than generating vector");
  return GeneratingVector(base_, m_, modulus_, std::vector<PolyGF>(q_.begin(), q_.begin() + s));
}

Eigen::MatrixXd PointSet::real() const {
  const double inv = 1.0 / static_cast<double>(denominator());
  return numerators.cast<double>() * inv;
}

std::vector<Digit> PointSet::digits(Eigen::Index row, Eigen::Index col) const {
  std::vector<Digit> d(static_cast<std::size_t>(m));
  std::uint64_t v = numerators(row, col);
  for (int l = m - 1; l >= 0; --l) {
    d[static_cast<std::size_t>(l)] = static_cast<Digit>(v % base.value());
    v /= base.value();
  }
  return d;
}

std::uint64_t digitwise_add(std::uint64_t x, std::uint64_t y, std::uint32_t b, int m) {
  if (b == 2) return x ^ y;
  std::uint64_t r = 0, scale = 1;
  for (int l = 0; l < m; ++l) {
    r += ((x % b + y % b) % b) * scale;
    x /= b;
    y /= b;
    scale *= b;
  }
  return r;
}

std::vector<std::uint64_t> generating_columns(const PolyGF& q, const PolyGF& p, int m) {
  std::vector<std::uint64_t> c(static_cast<std::size_t>(m));
  PolyGF xi = q;
  for (int i = 0; i < m; ++i) {
    c[static_cast<std::size_t>(i)] = v_m(laurent_digits(xi, p, m)).numerator;
    xi = poly_mod(xi.shifted(1), p);
  }
  return c;
}

std::vector<std::uint64_t> lattice_column(const PolyGF& q, const PolyGF& p, int m) {
  const std::uint32_t b = q.base().value();
  const auto c = generating_columns(q, p, m);
  const std::uint64_t n = ipow(b, m);
  std::vector<std::uint64_t> col(n, 0);
  for (std::uint64_t h = 1; h < n; ++h) {
    // lowest nonzero base-b digit of h
    int i = 0;
    std::uint64_t step = 1;
    for (std::uint64_t t = h; t % b == 0; t /= b) {
      ++i;
      step *= b;
    }
    col[h] = digitwise_add(col[h - step], c[static_cast<std::size_t>(i)], b, m);
  }
  return col;
}

PointSet plr_points(const GeneratingVector& gv) {
  PointSet ps{gv.base(), gv.m(), NumeratorMatrix(gv.size(), gv.dimension())};
  for (int j = 0; j < gv.dimension(); ++j) {
    auto col = lattice_column(gv.q()[static_cast<std::size_t>(j)], gv.modulus(), gv.m());
    for (std::size_t h = 0; h < col.size(); ++h)
      ps.numerators(static_cast<Eigen::Index>(h), j) = col[h];
  }
  return ps;
}

// ---------------------------------------------------------------------------
// Walsh figure of merit

namespace {

/// omega(z) for z = number of leading zero digits, z = 0..m.
std::vector<double> walsh_shell_table(std::uint32_t b, int m) {
  std::vector<double> table(static_cast<std::size_t>(m) + 1, 0.0);
  const double bd = b;
  for (int z = 0; z <= m; ++z) {
    double w = 0.0;
    for (int a = 1; a <= m; ++a) {
      const double r = std::pow(bd, -2.0 * a);
      if (z >= a) w += r * std::pow(bd, a);
      if (z >= a - 1) w -= r * std::pow(bd, a - 1);
    }
    table[static_cast<std::size_t>(z)] = w;
  }
  return table;
}

int leading_zero_digits(std::uint64_t numerator, std::uint32_t b, int m) {
  int len = 0;
  for (std::uint64_t v = numerator; v > 0; v /= b) ++len;
  return m - len;
}

class WalshAccumulator final : public FigureOfMerit::Accumulator {
 public:
  WalshAccumulator(const WalshFigureOfMerit& fom, FieldBase base, int m)
      : fom_(fom), b_(base.value()), m_(m), table_(walsh_shell_table(b_, m)),
        prod_(ipow(b_, m), 1.0) {}

  double score(std::span<const std::uint64_t> column, int coordinate) override {
    const double w = fom_.weight(coordinate);
    double acc = 0.0;
    for (std::size_t h = 0; h < prod_.size(); ++h)
      acc += prod_[h] * (1.0 + w * omega(column[h]));
    return acc / static_cast<double>(prod_.size()) - 1.0;
  }

  void commit(std::span<const std::uint64_t> column, int coordinate) override {
    const double w = fom_.weight(coordinate);
    for (std::size_t h = 0; h < prod_.size(); ++h) prod_[h] *= 1.0 + w * omega(column[h]);
  }

 private:
  double omega(std::uint64_t x) const {
    return table_[static_cast<std::size_t>(leading_zero_digits(x, b_, m_))];
  }

  const WalshFigureOfMerit& fom_;
  std::uint32_t b_;
  int m_;
  std::vector<double> table_;
  std::vector<double> prod_;
};

class EmpiricalAccumulator final : public FigureOfMerit::Accumulator {
 public:
  EmpiricalAccumulator(const EmpiricalFigureOfMerit& fom, FieldBase base, int m)
      : fom_(fom), base_(base), m_(m) {}

  double score(std::span<const std::uint64_t> column, int) override {
    PointSet ps{base_, m_, NumeratorMatrix(static_cast<Eigen::Index>(column.size()),
                                           static_cast<Eigen::Index>(columns_.size()) + 1)};
    for (std::size_t j = 0; j < columns_.size(); ++j)
      for (std::size_t h = 0; h < column.size(); ++h)
        ps.numerators(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(j)) = columns_[j][h];
    for (std::size_t h = 0; h < column.size(); ++h)
      ps.numerators(static_cast<Eigen::Index>(h), static_cast<Eigen::Index>(columns_.size())) = column[h];

    const int reps = std::max(2, fom_.replications());
    std::vector<double> prod_est(static_cast<std::size_t>(reps)), sum_est(static_cast<std::size_t>(reps));
    ScrambleConfig cfg;
    cfg.precision = std::max(m_, std::min(32, max_precision(base_)));
    for (int r = 0; r < reps; ++r) {
      cfg.seed = prf::derive(fom_.seed(), static_cast<std::uint64_t>(r));
      Eigen::MatrixXd y = interlaced_scrambled_real(ps, cfg);
      auto g = y.unaryExpr([](double v) { return bernoulli(2, v) / 2.0; }).eval();
      prod_est[static_cast<std::size_t>(r)] = (1.0 + g.array()).rowwise().prod().mean();
      sum_est[static_cast<std::size_t>(r)] = g.rowwise().sum().mean();
    }
    return 0.5 * (sample_variance(prod_est) + sample_variance(sum_est));
  }

  void commit(std::span<const std::uint64_t> column, int) override {
    columns_.emplace_back(column.begin(), column.end());
  }

 private:
  static double sample_variance(const std::vector<double>& v) {
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return ss / static_cast<double>(v.size() - 1);
  }

  const EmpiricalFigureOfMerit& fom_;
  FieldBase base_;
  int m_;
  std::vector<std::vector<std::uint64_t>> columns_;
};

std::vector<std::uint64_t> candidate_encodings(std::uint64_t n, std::uint64_t budget,
                                               std::uint64_t seed, int component) {
  const std::uint64_t total = n - 1;  // encodings 1..n-1
  std::vector<std::uint64_t> out;
  if (budget == 0) return {1};
  if (budget >= total) {
    out.resize(total);
    for (std::uint64_t e = 0; e < total; ++e) out[e] = e + 1;
    return out;
  }
  std::mt19937_64 rng(prf::derive(seed, static_cast<std::uint64_t>(component)));
  std::uniform_int_distribution<std::uint64_t> dist(1, total);
  std::set<std::uint64_t> chosen;
  while (chosen.size() < budget) chosen.insert(dist(rng));
  return {chosen.begin(), chosen.end()};
}

std::vector<PolyGF> extend_cbc(std::vector<PolyGF> q, int s, int m, FieldBase base,
                               const FigureOfMerit& fom, const SearchOptions& opts) {
  const PolyGF& p = default_modulus(base, m);
  const std::uint64_t n = ipow(base.value(), m);
  auto acc = fom.start(base, m);
  for (std::size_t j = 0; j < q.size(); ++j) acc->commit(lattice_column(q[j], p, m), static_cast<int>(j));
  for (int j = static_cast<int>(q.size()); j < s; ++j) {
    auto candidates = candidate_encodings(n, opts.budget, opts.seed, j);
    std::uint64_t best = candidates.front();
    std::vector<std::uint64_t> best_col;
    double best_score = 0.0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      auto col = lattice_column(poly_from_int(candidates[c], base), p, m);
      const double sc = candidates.size() == 1 ? 0.0 : acc->score(col, j);
      // candidates ascend, so strict improvement keeps the smallest encoding on ties
      if (c == 0 || sc < best_score) {
        best_score = sc;
        best = candidates[c];
        best_col = std::move(col);
      }
    }
    acc->commit(best_col, j);
    q.push_back(poly_from_int(best, base));
  }
  return q;
}

}  // namespace

double WalshFigureOfMerit::kernel(std::uint64_t numerator, std::uint32_t b, int m) {
  return walsh_shell_table(b, m)[static_cast<std::size_t>(leading_zero_digits(numerator, b, m))];
}

std::unique_ptr<FigureOfMerit::Accumulator> WalshFigureOfMerit::start(FieldBase base, int m) const {
  return std::make_unique<WalshAccumulator>(*this, base, m);
}

std::unique_ptr<FigureOfMerit::Accumulator> EmpiricalFigureOfMerit::start(FieldBase base, int m) const {
  return std::make_unique<EmpiricalAccumulator>(*this, base, m);
}

GeneratingVector search_generating_vector(int s, int m, FieldBase base, const FigureOfMerit& fom,
                                          const SearchOptions& opts) {
  if (s < 0) throw std::invalid_argument("negative dimension");
  if (m < 1) throw std::invalid_argument("generating vector needs m >= 1");
  auto q = extend_cbc({}, s, m, base, fom, opts);
  return GeneratingVector(base, m, default_modulus(base, m), std::move(q));
}

GeneratingVector search_generating_vector(int s, int m, FieldBase base, const WeightModel& weights,
                                          int alpha, const SearchOptions& opts) {
  if (alpha < 1) throw std::invalid_argument("interlacing factor must be >= 1");
  std::vector<double> w(static_cast<std::size_t>(s));
  for (int t = 0; t < s; ++t) {
    const auto j = static_cast<std::uint32_t>(t / alpha + 1);
    w[static_cast<std::size_t>(t)] = weights.gamma(CoordSet{j});
  }
  return search_generating_vector(s, m, base, WalshFigureOfMerit(std::move(w)), opts);
}

GeneratingVector cached_generating_vector(FieldBase base, int m, int s) {
  static std::mutex mu;
  static std::map<std::pair<std::uint32_t, int>, std::vector<PolyGF>> cache;
  std::lock_guard lock(mu);
  auto& q = cache.try_emplace({base.value(), m}).first->second;
  if (static_cast<int>(q.size()) < s)
    q = extend_cbc(std::move(q), s, m, base, WalshFigureOfMerit({}), SearchOptions{});
  return GeneratingVector(base, m, default_modulus(base, m),
                          std::vector<PolyGF>(q.begin(), q.begin() + s));
}

std::string format_digits(std::span<const Digit> digits) {
  const bool wide = std::any_of(digits.begin(), digits.end(), [](Digit d) { return d >= 10; });
  std::ostringstream os;
  for (std::size_t i = 0; i < digits.size(); ++i) {
    if (wide && i > 0) os << '.';
    os << digits[i];
  }
  return os.str();
}

}  // namespace cdqmc
