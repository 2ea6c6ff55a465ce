#pragma once

// Experiment configuration: weight presets, rule and cost selection, grids.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cdqmc/cdalg.hpp"
#include "cdqmc/quadrature.hpp"
#include "cdqmc/weights.hpp"

namespace cdqmc {

inline constexpr const char* kVersion = "0.1.0";

/// Weight presets:
///   product:c=1,a=3
///   finite-product:beta=2,c=1,a=3
///   pod:c=1,a=3,p=1,decay=3          (Gamma_l = (l!)^p)
///   pairs:c=1,a=3,J=1000             (disjoint pairs {2j-1,2j}, all three sets weighted c j^-a)
///   explicit:1=0.5,2=0.5,1+2=0.25
///   finite-intersection:rho=2,1=0.5,2=0.5,1+2=0.25
/// Any preset accepts decay=<x> to declare the decay exponent.
WeightModel parse_weights(const std::string& preset);

struct ExperimentConfig {
  std::string weights = "product:c=1,a=3";
  std::string function = "auto";
  int chi = 1;
  int alpha = 0;  ///< 0 means alpha = chi
  std::uint32_t base = 2;
  RuleKind rule = RuleKind::InterlacedScrambledPLR;
  std::string cost = "linear";
  std::optional<double> tau;  ///< default 2 chi + 1/2 for PLR, 1 for MC
  double c = 1.0;
  double C = 1.0;
  std::optional<double> alpha0;
  double delta = 0.01;
  double anchor = 0.5;
  std::vector<double> eps_grid;
  std::vector<int> m_grid;  ///< rule study: n = b^m
  int reps = 50;
  std::uint64_t seed = 0x2024;
  std::string out;
  std::size_t max_active = 100000;
  std::uint32_t product_dimension = 1'000'000;
  unsigned threads = 0;  ///< worker threads for replications; 0 means hardware concurrency

  int effective_alpha() const { return alpha > 0 ? alpha : chi; }
  double effective_tau() const;
  RuleTemplate rule_template() const;
  PlannerInput planner_input(double eps) const;
  void validate() const;
};

/// Reads a JSON object whose keys mirror ExperimentConfig fields.
ExperimentConfig load_config(const std::string& path);
ExperimentConfig config_from_json(const std::string& text);
std::string config_to_json(const ExperimentConfig& cfg);

/// "0.1,0.05,0.02" -> values
std::vector<double> parse_double_list(const std::string& s);
std::vector<int> parse_int_list(const std::string& s);

}  // namespace cdqmc
