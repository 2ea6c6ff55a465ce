#include "cdqmc/study.hpp"

#include <Eigen/Dense>

#include <atomic>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <limits>
#include <mutex>
#include <thread>
#include <stdexcept>

#include <json.hpp>

#include "cdqmc/kernels.hpp"
#include "cdqmc/lattice.hpp"
#include "cdqmc/scramble.hpp"

namespace cdqmc {

using nlohmann::json;

namespace {

/// Runs body(i) for i in [0, n) on up to `threads` workers. Each index writes
/// its own slot, so results do not depend on scheduling.
template <class Body>
void parallel_for(std::size_t n, unsigned threads, Body body) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  auto work = [&] {
    for (std::size_t i; (i = next++) < n;) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < threads; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw std::invalid_argument("fit: size mismatch");
  std::vector<std::pair<double, double>> pts;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (x[i] > 0.0 && y[i] > 0.0) pts.emplace_back(std::log(x[i]), std::log(y[i]));
  SlopeFit fit;
  fit.points = static_cast<int>(pts.size());
  if (pts.size() < 2) {
    fit.slope = fit.intercept = std::numeric_limits<double>::quiet_NaN();
    return fit;
  }
  Eigen::MatrixXd X(static_cast<Eigen::Index>(pts.size()), 2);
  Eigen::VectorXd Y(static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) {
    X(static_cast<Eigen::Index>(i), 0) = 1.0;
    X(static_cast<Eigen::Index>(i), 1) = pts[i].first;
    Y(static_cast<Eigen::Index>(i)) = pts[i].second;
  }
  const Eigen::Matrix2d XtX = X.transpose() * X;
  const Eigen::Vector2d beta = XtX.ldlt().solve(X.transpose() * Y);
  fit.intercept = beta(0);
  fit.slope = beta(1);
  if (pts.size() > 2) {
    const double rss = (Y - X * beta).squaredNorm();
    const double sigma2 = rss / static_cast<double>(pts.size() - 2);
    fit.slope_stderr = std::sqrt(sigma2 * XtX.inverse()(1, 1));
  }
  return fit;
}

std::vector<double> eps_for_costs(const WeightModel& w, const ExperimentConfig& cfg,
                                  const std::vector<double>& target_costs) {
  const CostModel cost = CostModel::parse(cfg.cost);
  const RuleTemplate rule = cfg.rule_template();
  auto cost_at = [&](double eps) {
    try {
      return plan_cost(plan_build(w, cfg.planner_input(eps), rule), cost);
    } catch (const std::runtime_error&) {
      return std::numeric_limits<double>::infinity();  // cap reached
    }
  };
  // L can be astronomically large when alpha0 sits close to 1 - 1/decay
  const PlannerConstants k = planner_constants(w, cfg.planner_input(1.0));
  const double start = std::max(1.0, std::sqrt(k.c * k.L));
  std::vector<double> out;
  for (double target : target_costs) {
    double hi = start;
    while (cost_at(hi) > target && hi < 1e150) hi *= 4.0;
    double lo = hi;
    while (cost_at(lo) <= target && lo > 1e-150) lo /= 4.0;
    // cost(hi) <= target < cost(lo)
    for (int it = 0; it < 60; ++it) {
      const double mid = std::sqrt(lo * hi);
      (cost_at(mid) <= target ? hi : lo) = mid;
    }
    out.push_back(hi);
  }
  return out;
}

StudyResult run_convergence_study(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.eps_grid.empty()) throw std::invalid_argument("convergence study needs an eps grid");
  const WeightModel w = parse_weights(cfg.weights);
  const BankFunction f = bank_function(cfg.function, w, cfg.product_dimension);
  const BlackBoxIntegrand F = f.integrand();
  const CostModel cost = CostModel::parse(cfg.cost);
  const RuleTemplate rule = cfg.rule_template();
  const Anchor anchor{cfg.anchor};
  const double I = f.integral();

  StudyResult res;
  std::vector<double> xs, ys;
  for (std::size_t row = 0; row < cfg.eps_grid.size(); ++row) {
    const double eps = cfg.eps_grid[row];
    const PlannerInput in = cfg.planner_input(eps);
    const Plan plan = plan_build(w, in, rule);
    const auto Q = plan.active_set();
    StudyRow r;
    r.eps = eps;
    r.active_sets = Q.size();
    r.dimension = epsilon_dimension(plan);
    r.cost = plan_cost(plan, cost);
    r.diagnostics_B = diagnostics_B(plan);
    const double Ipsi = f.projected_integral(Q, cfg.anchor);
    r.bias2_function = (I - Ipsi) * (I - Ipsi);
    r.bias2_worst = Q.size() <= 4000 || w.has_finite_support() ? bias_squared(Q, w, in.k_aa).value
                                                               : std::numeric_limits<double>::quiet_NaN();
    std::vector<double> est(static_cast<std::size_t>(cfg.reps)), sq(est.size());
    parallel_for(est.size(), cfg.threads, [&](std::size_t k) {
      const auto seed = prf::derive(prf::derive(cfg.seed, row), static_cast<std::uint64_t>(k));
      est[k] = cd_estimate(F, plan, seed, anchor, cost).estimate;
      sq[k] = (est[k] - I) * (est[k] - I);
    });
    const auto se = summarize_replicates(sq);
    const auto ve = summarize_replicates(est);
    r.mse = se.mean;
    r.mse_stderr = se.mean_stderr;
    r.mean = ve.mean;
    r.variance = ve.variance;
    res.rows.push_back(r);
    xs.push_back(r.cost);
    ys.push_back(r.mse);
  }
  res.fit = fit_loglog(xs, ys);
  const WeightModel wm = w;
  json meta = {{"version", kVersion},
               {"study", "changing-dimension"},
               {"config", json::parse(config_to_json(cfg))},
               {"weights", wm.describe()},
               {"function", f.name()},
               {"integral", I},
               {"replication_seeds", "derive(derive(seed, row), r)"},
               {"fit", {{"slope", res.fit.slope}, {"slope_stderr", res.fit.slope_stderr}, {"points", res.fit.points}}}};
  if (std::isfinite(decay(w))) meta["target_slope"] = -std::min(cfg.effective_tau(), decay(w) - 1.0);
  res.metadata_json = meta.dump(2);
  return res;
}

RuleStudyResult run_rule_study(const ExperimentConfig& cfg) {
  cfg.validate();
  std::vector<int> grid = cfg.m_grid;
  if (grid.empty()) grid = {6, 7, 8, 9, 10, 11, 12, 13};
  const RuleTemplate rule = cfg.rule_template();
  const CubeFunction g = [](const Eigen::Ref<const Eigen::VectorXd>& y) { return bank_component(y(0)); };
  RuleStudyResult res;
  res.rows.resize(grid.size());
  // the generating vectors are searched once up front; workers only read the cache
  if (rule.kind == RuleKind::InterlacedScrambledPLR)
    for (int m : grid) (void)cached_generating_vector(rule.base, m, rule.alpha);
  parallel_for(grid.size(), cfg.threads, [&](std::size_t i) {
    const int m = grid[i];
    RuleSpec spec{rule, CoordSet{1}, ipow(cfg.base, m), std::nullopt, 0};
    const auto v = empirical_variance(spec, g, cfg.reps, prf::derive(cfg.seed, static_cast<std::uint64_t>(m)));
    res.rows[i] = {spec.n, v.mean, v.variance, v.variance_stderr};
  });
  std::vector<double> xs, ys;
  for (const auto& r : res.rows) {
    xs.push_back(static_cast<double>(r.n));
    ys.push_back(r.variance);
  }
  res.fit = fit_loglog(xs, ys);
  json meta = {{"version", kVersion},
               {"study", "rule"},
               {"config", json::parse(config_to_json(cfg))},
               {"function", "B_2(x_1)/2"},
               {"replication_seeds", "derive(derive(seed, m), r)"},
               {"fit", {{"slope", res.fit.slope}, {"slope_stderr", res.fit.slope_stderr}, {"points", res.fit.points}}}};
  res.metadata_json = meta.dump(2);
  return res;
}

void write_csv(std::ostream& os, const StudyResult& r) {
  os << "eps,active_sets,d_eps,cost,mean,mse,mse_stderr,variance,bias2_function,bias2_worst,B_eps\n";
  os << std::setprecision(17);
  for (const auto& x : r.rows)
    os << x.eps << ',' << x.active_sets << ',' << x.dimension << ',' << x.cost << ',' << x.mean << ',' << x.mse << ','
       << x.mse_stderr << ',' << x.variance << ',' << x.bias2_function << ',' << x.bias2_worst << ','
       << x.diagnostics_B << '\n';
}

void write_csv(std::ostream& os, const RuleStudyResult& r) {
  os << "n,mean,variance,variance_stderr\n";
  os << std::setprecision(17);
  for (const auto& x : r.rows) os << x.n << ',' << x.mean << ',' << x.variance << ',' << x.variance_stderr << '\n';
}

namespace {
template <class R>
void write_pair(const std::string& path, const R& r) {
  std::ofstream csv(path);
  if (!csv) throw std::runtime_error("cannot write " + path);
  write_csv(csv, r);
  std::ofstream meta(path + ".json");
  if (!meta) throw std::runtime_error("cannot write " + path + ".json");
  meta << r.metadata_json << '\n';
}
}  // namespace

void write_outputs(const std::string& path, const StudyResult& r) { write_pair(path, r); }
void write_outputs(const std::string& path, const RuleStudyResult& r) { write_pair(path, r); }

void dump_points(std::ostream& os, const PointDumpConfig& cfg) {
  const FieldBase b(cfg.base);
  if (cfg.m < 1 || cfg.s < 1 || cfg.alpha < 1) throw std::invalid_argument("points: need m, s, alpha >= 1");
  const PointSet ps = plr_points(cached_generating_vector(b, cfg.m, cfg.s * cfg.alpha));
  ScrambleConfig sc;
  sc.alpha = cfg.alpha;
  sc.seed = cfg.seed;
  sc.scramble = cfg.scramble;
  sc.precision = cfg.precision > 0 ? cfg.precision : (cfg.scramble ? std::max(cfg.m, 32) : cfg.m);
  sc.precision = std::min(sc.precision, max_precision(b));
  const ScrambledPointSet pts = interlaced_scrambled_points(ps, sc);
  os << "# b=" << cfg.base << " m=" << cfg.m << " s=" << cfg.s << " alpha=" << cfg.alpha << " seed=" << cfg.seed
     << " scramble=" << (cfg.scramble ? 1 : 0) << '\n';
  for (Eigen::Index i = 0; i < pts.rows; ++i) {
    for (Eigen::Index j = 0; j < pts.cols; ++j) {
      if (j) os << ' ';
      os << format_digits(pts.coordinate(i, j).digits);
    }
    os << '\n';
  }
}

}  // namespace cdqmc
