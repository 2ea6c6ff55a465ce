#pragma once

// Convergence studies: RMSE against cost for the changing dimension
// algorithm, variance against n for single rules, log-log rate fits, CSV
// output with a JSON metadata sidecar, and point-set dumps.

#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "cdqmc/bank.hpp"
#include "cdqmc/cdalg.hpp"
#include "cdqmc/config.hpp"

namespace cdqmc {

struct SlopeFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  int points = 0;
};

/// Ordinary least squares of log y on log x.
SlopeFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

struct StudyRow {
  double eps = 0.0;
  std::size_t active_sets = 0;
  std::size_t dimension = 0;  ///< epsilon-dimension d(eps)
  double cost = 0.0;
  double mean = 0.0;
  double mse = 0.0;
  double mse_stderr = 0.0;
  double variance = 0.0;
  double bias2_function = 0.0;  ///< (I(f) - I(Psi_Q f))^2
  double bias2_worst = 0.0;     ///< worst-case squared bias (NaN when not computed)
  double diagnostics_B = 1.0;
};

struct StudyResult {
  std::vector<StudyRow> rows;
  SlopeFit fit;  ///< log mse against log cost
  std::string metadata_json;
};

/// Inverse of the plan cost: for each target, the epsilon whose plan cost is
/// the largest not exceeding the target (bisection in log epsilon).
std::vector<double> eps_for_costs(const WeightModel& w, const ExperimentConfig& cfg,
                                  const std::vector<double>& target_costs);

StudyResult run_convergence_study(const ExperimentConfig& cfg);

struct RuleStudyRow {
  std::uint64_t n = 0;
  double mean = 0.0;
  double variance = 0.0;
  double variance_stderr = 0.0;
};

struct RuleStudyResult {
  std::vector<RuleStudyRow> rows;
  SlopeFit fit;  ///< log variance against log n
  std::string metadata_json;
};

/// Variance of Q_{{1},n}(g) for the single component g(x_1) over n = b^m.
RuleStudyResult run_rule_study(const ExperimentConfig& cfg);

void write_csv(std::ostream& os, const StudyResult& r);
void write_csv(std::ostream& os, const RuleStudyResult& r);
/// Writes <path> and <path>.json.
void write_outputs(const std::string& path, const StudyResult& r);
void write_outputs(const std::string& path, const RuleStudyResult& r);

struct PointDumpConfig {
  std::uint32_t base = 2;
  int m = 2;
  int s = 1;  ///< output dimension
  int alpha = 1;
  std::uint64_t seed = 0;
  bool scramble = false;
  int precision = 0;  ///< 0: m without scrambling, max(m, 32) with
};

/// Header line "# b=.. m=.. s=.. alpha=.. seed=.. scramble=.." then one
/// point per line, coordinates as space-separated digit strings.
void dump_points(std::ostream& os, const PointDumpConfig& cfg);

}  // namespace cdqmc
