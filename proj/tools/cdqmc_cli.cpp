// Command-line front end: plan, estimate, study, points, selftest.

#include <CLI11.hpp>

#include <cmath>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <random>

#include "cdqmc/bank.hpp"
#include "cdqmc/cdalg.hpp"
#include "cdqmc/config.hpp"
#include "cdqmc/decomp.hpp"
#include "cdqmc/kernels.hpp"
#include "cdqmc/lattice.hpp"
#include "cdqmc/scramble.hpp"
#include "cdqmc/study.hpp"

using namespace cdqmc;

namespace {

struct Flags {
  std::string config;
  std::string weights, function, rule, cost, eps_grid, m_grid, out;
  int chi = 0, alpha = -1, reps = 0, threads = -1;
  std::uint32_t base = 0;
  std::uint64_t seed = 0;
  double tau = 0.0, eps = 0.0;
  bool seed_set = false;
};

void add_common(CLI::App* app, Flags& f) {
  app->add_option("--config", f.config, "JSON config file; flags override its values");
  app->add_option("--weights", f.weights, "weight preset, e.g. product:c=1,a=3 or pairs:a=3,J=1000");
  app->add_option("--function", f.function, "bank function: auto, constant, single, two-component, support, product");
  app->add_option("--chi", f.chi, "smoothness chi (1..6)");
  app->add_option("--alpha", f.alpha, "interlacing factor (default chi)");
  app->add_option("--base", f.base, "prime base b");
  app->add_option("--rule", f.rule, "mc or plr");
  app->add_option("--cost", f.cost, "cost model: linear, poly:s=<x>, exp:sigma=<x>");
  app->add_option("--tau", f.tau, "variance decay rate of the building blocks");
  app->add_option("--eps-grid", f.eps_grid, "comma-separated accuracy targets");
  app->add_option("--reps", f.reps, "replications");
  app->add_option("--seed", f.seed, "master seed");
  app->add_option("--out", f.out, "output path (CSV; metadata goes to <out>.json)");
  app->add_option("--threads", f.threads, "worker threads for replications (0: all cores)");
}

ExperimentConfig resolve(const Flags& f) {
  ExperimentConfig c = f.config.empty() ? ExperimentConfig{} : load_config(f.config);
  if (!f.weights.empty()) c.weights = f.weights;
  if (!f.function.empty()) c.function = f.function;
  if (!f.rule.empty()) c.rule = parse_rule_kind(f.rule);
  if (!f.cost.empty()) c.cost = f.cost;
  if (!f.eps_grid.empty()) c.eps_grid = parse_double_list(f.eps_grid);
  if (!f.m_grid.empty()) c.m_grid = parse_int_list(f.m_grid);
  if (!f.out.empty()) c.out = f.out;
  if (f.chi > 0) c.chi = f.chi;
  if (f.alpha >= 0) c.alpha = f.alpha;
  if (f.reps > 0) c.reps = f.reps;
  if (f.base > 0) c.base = f.base;
  if (f.seed_set) c.seed = f.seed;
  if (f.tau > 0.0) c.tau = f.tau;
  if (f.threads >= 0) c.threads = static_cast<unsigned>(f.threads);
  c.validate();
  return c;
}

double first_eps(const ExperimentConfig& c, double flag) {
  if (flag > 0.0) return flag;
  if (!c.eps_grid.empty()) return c.eps_grid.front();
  throw std::invalid_argument("need --eps or --eps-grid");
}

int selftest() {
  int failures = 0;
  auto check = [&](const std::string& name, bool ok) {
    std::cout << (ok ? "PASS " : "FAIL ") << name << '\n';
    failures += ok ? 0 : 1;
  };

  {
    bool ok = true;
    for (std::uint32_t b : {2u, 3u})
      for (int m = 1; m <= 5; ++m) {
        const auto ps = plr_points(cached_generating_vector(FieldBase(b), m, 2));
        for (Eigen::Index j = 0; j < ps.numerators.cols(); ++j) {
          std::vector<std::uint64_t> col;
          for (Eigen::Index i = 0; i < ps.numerators.rows(); ++i) col.push_back(ps.numerators(i, j));
          std::sort(col.begin(), col.end());
          for (std::size_t i = 0; i < col.size(); ++i) ok &= col[i] == i;
        }
      }
    check("one-dimensional projections are {i / b^m}", ok);
  }
  {
    bool ok = true;
    std::set<CoordSet> Q{{}, {1}, {2}, {1, 2}, {3}};
    for (const auto& u : Q)
      if (!u.empty()) ok &= alt_sum_S(Q, u) == 0;
    check("S_{Q,u} = 0 on a downward-closed Q", ok);
  }
  {
    const auto w = parse_weights("explicit:1=0.5,2=0.4,3=0.3,1+2=0.2,2+3=0.1");
    const auto f = BankFunction::support_sum(1.0, {{CoordSet{1}, 0.5}, {CoordSet{2, 3}, 0.3}, {CoordSet{1, 2}, 0.2}});
    const auto F = f.integrand();
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    bool ok = true;
    for (int t = 0; t < 20; ++t) {
      Assignment x{{1, 2, 3}, {U(rng), U(rng), U(rng)}};
      double s = 0.0;
      for (std::uint64_t mask = 0; mask < 8; ++mask) s += anchored_component(F, CoordSet{1, 2, 3}.subset(mask), {}, x);
      ok &= std::abs(s - F(x, {})) < 1e-12;
    }
    check("anchored decomposition is complete", ok);

    PlannerInput in;
    in.eps = 0.05;
    const Plan plan = plan_build(w, in);
    const auto r = cd_estimate(F, plan, 11);
    check("cost ledger equals plan_cost", r.ledger.total == plan_cost(plan, {}));
    const auto G = psi_Q_projection(F, plan.active_set());
    check("estimate of f equals estimate of Psi_Q f", cd_estimate(G, plan, 11).estimate == r.estimate);
  }
  std::cout << (failures == 0 ? "selftest passed" : "selftest FAILED") << '\n';
  return failures == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Changing dimension quadrature with interlaced scrambled polynomial lattice rules"};
  app.require_subcommand(1);
  Flags f;
  double eps = 0.0;
  std::string kind = "cd";
  PointDumpConfig pc;
  bool pc_scramble = false;

  auto* plan_cmd = app.add_subcommand("plan", "print the plan for the weights and accuracy");
  add_common(plan_cmd, f);
  plan_cmd->add_option("--eps", eps, "accuracy target");

  auto* est_cmd = app.add_subcommand("estimate", "run the changing dimension estimator on a bank function");
  add_common(est_cmd, f);
  est_cmd->add_option("--eps", eps, "accuracy target");

  auto* study_cmd = app.add_subcommand("study", "convergence study (cd: RMSE vs cost, rule: variance vs n)");
  add_common(study_cmd, f);
  study_cmd->add_option("--kind", kind, "cd or rule")->check(CLI::IsMember({"cd", "rule"}));
  study_cmd->add_option("--m-grid", f.m_grid, "rule study exponents, e.g. 6-13");

  auto* pts_cmd = app.add_subcommand("points", "dump an interlaced scrambled point set as digit strings");
  pts_cmd->add_option("--base", pc.base, "prime base b");
  pts_cmd->add_option("--m", pc.m, "n = b^m points")->required();
  pts_cmd->add_option("--dim", pc.s, "output dimension s");
  pts_cmd->add_option("--alpha", pc.alpha, "interlacing factor");
  pts_cmd->add_option("--seed", pc.seed, "scrambling seed");
  pts_cmd->add_flag("--scramble", pc_scramble, "apply Owen scrambling");
  pts_cmd->add_option("--precision", pc.precision, "digits per underlying coordinate");
  pts_cmd->add_option("--out", f.out, "output file (default stdout)");

  auto* self_cmd = app.add_subcommand("selftest", "run the built-in invariant checks");

  CLI11_PARSE(app, argc, argv);
  for (auto* sub : {plan_cmd, est_cmd, study_cmd})
    if (sub->parsed() && sub->get_option("--seed")->count() > 0) f.seed_set = true;

  try {
    if (self_cmd->parsed()) return selftest();

    if (pts_cmd->parsed()) {
      pc.scramble = pc_scramble;
      if (f.out.empty()) {
        dump_points(std::cout, pc);
      } else {
        std::ofstream os(f.out);
        dump_points(os, pc);
      }
      return 0;
    }

    const ExperimentConfig cfg = resolve(f);
    if (plan_cmd->parsed()) {
      const auto w = parse_weights(cfg.weights);
      const Plan plan = plan_build(w, cfg.planner_input(first_eps(cfg, eps)), cfg.rule_template());
      const std::string text = plan_to_json(plan, CostModel::parse(cfg.cost));
      if (cfg.out.empty()) {
        std::cout << text << '\n';
      } else {
        std::ofstream(cfg.out) << text << '\n';
      }
      return 0;
    }
    if (est_cmd->parsed()) {
      const auto w = parse_weights(cfg.weights);
      const BankFunction fn = bank_function(cfg.function, w, cfg.product_dimension);
      const Plan plan = plan_build(w, cfg.planner_input(first_eps(cfg, eps)), cfg.rule_template());
      const CostModel cost = CostModel::parse(cfg.cost);
      const auto r = cd_estimate(fn.integrand(), plan, cfg.seed, Anchor{cfg.anchor}, cost);
      std::cout << std::setprecision(17) << "function " << fn.name() << "\nestimate " << r.estimate << "\nintegral "
                << fn.integral() << "\nprojected_integral " << fn.projected_integral(plan.active_set(), cfg.anchor)
                << "\ncost " << r.ledger.total << "\nevaluations " << r.ledger.evaluations << "\nactive_sets "
                << plan.allocation.size() << "\nd_eps " << epsilon_dimension(plan) << '\n';
      return 0;
    }
    if (study_cmd->parsed()) {
      if (kind == "rule") {
        const auto r = run_rule_study(cfg);
        if (cfg.out.empty()) write_csv(std::cout, r);
        else write_outputs(cfg.out, r);
        std::cerr << "slope " << r.fit.slope << " +- " << r.fit.slope_stderr << '\n';
      } else {
        const auto r = run_convergence_study(cfg);
        if (cfg.out.empty()) write_csv(std::cout, r);
        else write_outputs(cfg.out, r);
        std::cerr << "slope " << r.fit.slope << " +- " << r.fit.slope_stderr << '\n';
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
