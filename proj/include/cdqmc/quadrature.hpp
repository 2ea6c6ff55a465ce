#pragma once

// Randomized equal-weight rules Q_{u,n}: plain Monte Carlo and interlaced
// scrambled polynomial lattice rules.

#include <Eigen/Core>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>

#include "cdqmc/coordset.hpp"
#include "cdqmc/gfpoly.hpp"
#include "cdqmc/lattice.hpp"

namespace cdqmc {

enum class RuleKind { MonteCarlo, InterlacedScrambledPLR };

std::string to_string(RuleKind k);
RuleKind parse_rule_kind(const std::string& s);

/// Rule family shared by all u of a plan.
struct RuleTemplate {
  RuleKind kind = RuleKind::InterlacedScrambledPLR;
  int alpha = 1;
  FieldBase base{2};
  int precision = 32;  ///< scrambling digits per underlying coordinate
  /// Constants of the variance assumption; alpha1 = 0 (F = 1) for PLR.
  double alpha1 = 0.0;
  double alpha2 = 0.0;
};

struct RuleSpec {
  RuleTemplate rule;
  CoordSet u;
  std::uint64_t n = 1;  ///< PLR: a power of the base
  std::optional<GeneratingVector> gv;  ///< PLR; searched and cached when absent
  std::uint64_t seed = 0;

  /// m with b^m = n; throws for PLR when n is not a power of b.
  int m() const;
};

/// Smallest power of b that is >= n.
std::uint64_t round_up_to_power(std::uint64_t n, std::uint32_t b);

/// Randomized points of the rule, n rows by |u| columns.
Eigen::MatrixXd rule_points(const RuleSpec& spec);

using CubeFunction = std::function<double(const Eigen::Ref<const Eigen::VectorXd>& y)>;

/// (1/n) sum_i g(y_i), compensated.
double run_rule(const RuleSpec& spec, const CubeFunction& g);

struct VarianceEstimate {
  double mean = 0.0;
  double mean_stderr = 0.0;
  double variance = 0.0;
  double variance_stderr = 0.0;  ///< jackknife
  int replications = 0;
};

/// Summary of R replicate values: sample mean and variance, jackknife error
/// of the variance.
VarianceEstimate summarize_replicates(const std::vector<double>& values);

/// Replicate r uses seed derive(master_seed, r).
VarianceEstimate empirical_variance(const RuleSpec& spec, const CubeFunction& g, int replications,
                                    std::uint64_t master_seed);

}  // namespace cdqmc
