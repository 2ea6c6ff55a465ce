#include "cdqmc/config.hpp"

#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "cdqmc/kernels.hpp"

namespace cdqmc {

using nlohmann::json;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

double to_number(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos != v.size()) throw std::invalid_argument("bad number for '" + key + "': " + v);
  return x;
}

CoordSet parse_set_key(const std::string& key) {
  std::vector<std::uint32_t> items;
  for (const auto& part : split(key, '+')) items.push_back(static_cast<std::uint32_t>(to_number(key, part)));
  if (items.empty()) throw std::invalid_argument("empty coordinate set in weight preset");
  return CoordSet(std::move(items));
}

}  // namespace

WeightModel parse_weights(const std::string& preset) {
  const auto colon = preset.find(':');
  const std::string name = preset.substr(0, colon);
  std::map<std::string, std::string> kv;
  std::vector<std::pair<std::string, std::string>> ordered;
  if (colon != std::string::npos) {
    for (const auto& item : split(preset.substr(colon + 1), ',')) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) throw std::invalid_argument("expected key=value in weight preset: " + item);
      kv[item.substr(0, eq)] = item.substr(eq + 1);
      ordered.emplace_back(item.substr(0, eq), item.substr(eq + 1));
    }
  }
  auto num = [&](const std::string& key, double def) { return kv.count(key) ? to_number(key, kv[key]) : def; };
  auto check_keys = [&](std::initializer_list<const char*> allowed) {
    for (const auto& [k, v] : kv) {
      bool ok = false;
      for (const char* a : allowed) ok |= (k == a);
      if (!ok) throw std::invalid_argument("unknown key '" + k + "' for weight preset " + name);
    }
  };

  std::optional<WeightModel> w;
  if (name == "product") {
    check_keys({"c", "a", "decay"});
    w = WeightModel::product(CoordinateSequence::power_law(num("c", 1.0), num("a", 3.0)));
  } else if (name == "finite-product") {
    check_keys({"beta", "c", "a", "decay"});
    w = WeightModel::finite_product(static_cast<int>(num("beta", 2.0)),
                                    CoordinateSequence::power_law(num("c", 1.0), num("a", 3.0)));
  } else if (name == "pod") {
    check_keys({"c", "a", "p", "decay"});
    PODWeights p;
    p.factorial_power = num("p", 1.0);
    p.gamma = CoordinateSequence::power_law(num("c", 1.0), num("a", 3.0));
    w = WeightModel::pod(p);
  } else if (name == "pairs") {
    check_keys({"c", "a", "J", "decay"});
    const double c = num("c", 1.0), a = num("a", 3.0);
    const auto J = static_cast<std::uint32_t>(num("J", 1000.0));
    std::map<CoordSet, double> values;
    for (std::uint32_t j = 1; j <= J; ++j) {
      const double g = c * std::pow(static_cast<double>(j), -a);
      values[CoordSet{2 * j - 1}] = g;
      values[CoordSet{2 * j}] = g;
      values[CoordSet{2 * j - 1, 2 * j}] = g;
    }
    w = WeightModel::finite_intersection(std::move(values), 2).with_declared_decay(num("decay", a));
  } else if (name == "explicit" || name == "finite-intersection") {
    std::map<CoordSet, double> values;
    int rho = -1;
    for (const auto& [k, v] : ordered) {
      if (k == "decay") continue;
      if (k == "rho") {
        rho = static_cast<int>(to_number(k, v));
        continue;
      }
      values[parse_set_key(k)] = to_number(k, v);
    }
    if (name == "explicit") {
      w = WeightModel::explicit_support(std::move(values));
    } else {
      if (rho < 0) throw std::invalid_argument("finite-intersection preset needs rho=<int>");
      w = WeightModel::finite_intersection(std::move(values), rho);
    }
  } else {
    throw std::invalid_argument("unknown weight preset '" + name +
                                "' (product, finite-product, pod, pairs, explicit, finite-intersection)");
  }
  if (kv.count("decay") && name != "pairs") w = w->with_declared_decay(to_number("decay", kv["decay"]));
  return *w;
}

double ExperimentConfig::effective_tau() const {
  if (tau) return *tau;
  return rule == RuleKind::MonteCarlo ? 1.0 : 2.0 * chi + 0.5;
}

RuleTemplate ExperimentConfig::rule_template() const {
  RuleTemplate r;
  r.kind = rule;
  r.alpha = effective_alpha();
  r.base = FieldBase(base);
  return r;
}

PlannerInput ExperimentConfig::planner_input(double eps) const {
  PlannerInput in;
  in.eps = eps;
  in.tau = effective_tau();
  in.c = c;
  in.C = C;
  in.k_aa = kernel_diagnostics(chi, anchor).k_aa;
  in.alpha0 = alpha0;
  in.delta = delta;
  in.max_active = max_active;
  return in;
}

void ExperimentConfig::validate() const {
  if (chi < 1 || chi > kMaxChi) throw std::invalid_argument("chi must lie in [1, 6]");
  if (alpha < 0) throw std::invalid_argument("alpha must be >= 1 (0 selects alpha = chi)");
  if (reps < 2) throw std::invalid_argument("reps must be >= 2");
  if (!(anchor >= 0.0 && anchor <= 1.0)) throw std::invalid_argument("anchor must lie in [0, 1]");
  FieldBase check(base);
  (void)check;
  (void)parse_weights(weights);
  (void)CostModel::parse(cost);
  for (double e : eps_grid)
    if (!(e > 0.0)) throw std::invalid_argument("eps grid values must be positive");
}

ExperimentConfig config_from_json(const std::string& text) {
  const json j = json::parse(text);
  ExperimentConfig c;
  for (const auto& [key, v] : j.items()) {
    if (key == "weights") c.weights = v.get<std::string>();
    else if (key == "function") c.function = v.get<std::string>();
    else if (key == "chi") c.chi = v.get<int>();
    else if (key == "alpha") c.alpha = v.get<int>();
    else if (key == "base") c.base = v.get<std::uint32_t>();
    else if (key == "rule") c.rule = parse_rule_kind(v.get<std::string>());
    else if (key == "cost") c.cost = v.get<std::string>();
    else if (key == "tau") c.tau = v.get<double>();
    else if (key == "c") c.c = v.get<double>();
    else if (key == "C") c.C = v.get<double>();
    else if (key == "alpha0") c.alpha0 = v.get<double>();
    else if (key == "delta") c.delta = v.get<double>();
    else if (key == "anchor") c.anchor = v.get<double>();
    else if (key == "eps_grid") c.eps_grid = v.get<std::vector<double>>();
    else if (key == "m_grid") c.m_grid = v.get<std::vector<int>>();
    else if (key == "reps") c.reps = v.get<int>();
    else if (key == "seed") c.seed = v.get<std::uint64_t>();
    else if (key == "out") c.out = v.get<std::string>();
    else if (key == "max_active") c.max_active = v.get<std::size_t>();
    else if (key == "product_dimension") c.product_dimension = v.get<std::uint32_t>();
    else if (key == "threads") c.threads = v.get<unsigned>();
    else throw std::invalid_argument("unknown config key '" + key + "'");
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return config_from_json(ss.str());
}

std::string config_to_json(const ExperimentConfig& c) {
  json j = {{"weights", c.weights},       {"function", c.function},
            {"chi", c.chi},               {"alpha", c.effective_alpha()},
            {"base", c.base},             {"rule", to_string(c.rule)},
            {"cost", c.cost},             {"tau", c.effective_tau()},
            {"c", c.c},                   {"C", c.C},
            {"delta", c.delta},           {"anchor", c.anchor},
            {"eps_grid", c.eps_grid},     {"m_grid", c.m_grid},
            {"reps", c.reps},             {"seed", c.seed},
            {"out", c.out},               {"max_active", c.max_active},
            {"product_dimension", c.product_dimension}, {"threads", c.threads}};
  if (c.alpha0) j["alpha0"] = *c.alpha0;
  return j.dump(2);
}

std::vector<double> parse_double_list(const std::string& s) {
  std::vector<double> out;
  for (const auto& p : split(s, ',')) out.push_back(to_number("list", p));
  return out;
}

std::vector<int> parse_int_list(const std::string& s) {
  std::vector<int> out;
  for (const auto& p : split(s, ',')) {
    if (auto dash = p.find('-'); dash != std::string::npos && dash > 0) {
      const int lo = static_cast<int>(to_number("list", p.substr(0, dash)));
      const int hi = static_cast<int>(to_number("list", p.substr(dash + 1)));
      for (int i = lo; i <= hi; ++i) out.push_back(i);
    } else {
      out.push_back(static_cast<int>(to_number("list", p)));
    }
  }
  return out;
}

}  // namespace cdqmc
