#include "cdqmc/quadrature.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

#include "cdqmc/decomp.hpp"
#include "cdqmc/scramble.hpp"

namespace cdqmc {

std::string to_string(RuleKind k) { return k == RuleKind::MonteCarlo ? "mc" : "plr"; }

RuleKind parse_rule_kind(const std::string& s) {
  if (s == "mc" || s == "monte-carlo" || s == "MonteCarlo") return RuleKind::MonteCarlo;
  if (s == "plr" || s == "interlaced-plr" || s == "InterlacedScrambledPLR") return RuleKind::InterlacedScrambledPLR;
  throw std::invalid_argument("unknown rule kind '" + s + "' (expected mc or plr)");
}

int RuleSpec::m() const {
  const std::uint32_t b = rule.base.value();
  int m = 0;
  std::uint64_t v = 1;
  while (v < n) {
    v *= b;
    ++m;
  }
  if (v != n) throw std::invalid_argument("PLR sample count " + std::to_string(n) + " is not a power of the base");
  return m;
}

std::uint64_t round_up_to_power(std::uint64_t n, std::uint32_t b) {
  std::uint64_t v = 1;
  while (v < n) {
    if (v > std::numeric_limits<std::uint64_t>::max() / b) throw std::overflow_error("sample count overflow");
    v *= b;
  }
  return v;
}

namespace {

std::shared_ptr<const PointSet> default_point_set(FieldBase base, int m, int s) {
  static std::mutex mu;
  static std::map<std::tuple<std::uint32_t, int, int>, std::shared_ptr<const PointSet>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[{base.value(), m, s}];
  if (!slot) {
    if (m == 0) {
      slot = std::make_shared<const PointSet>(PointSet{base, 0, NumeratorMatrix::Zero(1, s)});
    } else {
      slot = std::make_shared<const PointSet>(plr_points(cached_generating_vector(base, m, s)));
    }
  }
  return slot;
}

}  // namespace

Eigen::MatrixXd rule_points(const RuleSpec& spec) {
  const auto d = static_cast<Eigen::Index>(spec.u.size());
  if (spec.n == 0) throw std::invalid_argument("rule needs at least one point");
  if (spec.rule.kind == RuleKind::MonteCarlo) {
    Eigen::MatrixXd y(static_cast<Eigen::Index>(spec.n), d);
    std::uint64_t counter = prf::mix(spec.seed ^ 0x5851f42d4c957f2dULL);
    for (Eigen::Index i = 0; i < y.rows(); ++i)
      for (Eigen::Index j = 0; j < d; ++j) y(i, j) = prf::to_unit(prf::mix(counter += prf::kGolden));
    return y;
  }
  if (d == 0) return Eigen::MatrixXd(static_cast<Eigen::Index>(spec.n), 0);
  const int m = spec.m();
  const int s = spec.rule.alpha * static_cast<int>(d);
  std::shared_ptr<const PointSet> ps;
  if (spec.gv) {
    if (spec.gv->dimension() != s || spec.gv->m() != m)
      throw std::invalid_argument("generating vector does not match the rule (need dimension alpha*|u|, b^m = n)");
    ps = std::make_shared<const PointSet>(plr_points(*spec.gv));
  } else {
    ps = default_point_set(spec.rule.base, m, s);
  }
  ScrambleConfig cfg;
  cfg.alpha = spec.rule.alpha;
  cfg.precision = std::min(std::max(m, spec.rule.precision), max_precision(spec.rule.base));
  cfg.seed = spec.seed;
  return interlaced_scrambled_real(*ps, cfg);
}

double run_rule(const RuleSpec& spec, const CubeFunction& g) {
  const Eigen::MatrixXd y = rule_points(spec);
  CompensatedSum sum;
  Eigen::VectorXd row(y.cols());
  for (Eigen::Index i = 0; i < y.rows(); ++i) {
    row = y.row(i).transpose();
    sum.add(g(row));
  }
  return sum.value() / static_cast<double>(y.rows());
}

VarianceEstimate summarize_replicates(const std::vector<double>& x) {
  const auto R = static_cast<int>(x.size());
  if (R < 2) throw std::invalid_argument("variance estimation needs at least 2 replications");
  VarianceEstimate e;
  e.replications = R;
  CompensatedSum s;
  for (double v : x) s.add(v);
  e.mean = s.value() / R;
  long double S2 = 0.0L, S1 = 0.0L;
  for (double v : x) {
    const long double c = v - e.mean;
    S1 += c;
    S2 += c * c;
  }
  e.variance = static_cast<double>((S2 - S1 * S1 / R) / (R - 1));
  e.mean_stderr = std::sqrt(std::max(0.0, e.variance) / R);
  if (R < 3) {
    e.variance_stderr = std::numeric_limits<double>::infinity();
    return e;
  }
  // leave-one-out variances
  long double jm = 0.0L, jss = 0.0L;
  std::vector<long double> loo(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const long double c = x[i] - e.mean;
    const long double s1 = S1 - c, s2 = S2 - c * c;
    loo[i] = (s2 - s1 * s1 / (R - 1)) / (R - 2);
    jm += loo[i];
  }
  jm /= R;
  for (auto v : loo) jss += (v - jm) * (v - jm);
  e.variance_stderr = static_cast<double>(std::sqrt(jss * (R - 1) / R));
  return e;
}

VarianceEstimate empirical_variance(const RuleSpec& spec, const CubeFunction& g, int replications,
                                    std::uint64_t master_seed) {
  if (replications < 2) throw std::invalid_argument("variance estimation needs at least 2 replications");
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(replications));
  RuleSpec r = spec;
  for (int i = 0; i < replications; ++i) {
    r.seed = prf::derive(master_seed, static_cast<std::uint64_t>(i));
    values.push_back(run_rule(r, g));
  }
  return summarize_replicates(values);
}

}  // namespace cdqmc
