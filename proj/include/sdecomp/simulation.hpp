#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sdecomp/pipeline.hpp"

namespace sdecomp {

/// Which baseline covariates the intervention distributions condition on.
enum class Convention { none, baseline_C };
const char* to_string(Convention c);
Convention parse_convention(const std::string& s);

enum class SimMethod { glm, gbt, gbt_crossfit };
const char* to_string(SimMethod m);
SimMethod parse_method(const std::string& s);

/// Roles of the generated columns R, C, X1..X3, A, Z, M, Y.
RoleMap dgp_roles(Convention convention = Convention::baseline_C);

/// n draws from the structural equations. R is categorical with levels "0" (reference), "1".
Dataset generate_dgp(Index n, std::uint64_t seed);

/// (exp(X1)/2, X2/(1+exp(X1)) + 10, (X1 X3/25 + 0.6)^3), elementwise.
std::array<Eigen::VectorXd, 3> misspecify_features(const Eigen::VectorXd& x1, const Eigen::VectorXd& x2,
                                                   const Eigen::VectorXd& x3);

struct ScenarioOptions {
  /// Misspecified pi_M and mu keep Z as a regressor. When false the outcome model is
  /// Y ~ R + M + A + C + Xm1 + Xm2 + Xm3 with no Z.
  bool misspecified_keep_z = true;
  GbtParams gbt;
};

/// Model specs for scenario 1..4. Correct models repeat the structural equations;
/// misspecified ones drop interactions and use the transformed confounders.
NuisanceSpecs scenario_specs(int scenario, SimMethod method = SimMethod::glm, const ScenarioOptions& opts = {});

struct OracleResult {
  Index N = 0;
  Index n_comparison = 0;
  double mean_y = 0;      // E[Y | R = 1]
  double psi = 0;         // counterfactual mean under the intervention, R = 1
  double delta = 0;
  double tau = 0;         // covariate-adjusted contrast, limit of the regression coefficient
  double se_psi = 0;
  double se_delta = 0;
  double se_tau = 0;
  double mean_y_all = 0;  // population mean of Y
  double se_mean_y_all = 0;
};

/// Monte Carlo truth from the structural equations. With `null_intervention`, the
/// intervened factors are redrawn from the comparison group's own laws.
OracleResult true_value_oracle(Index N, std::uint64_t seed, Convention convention, bool null_intervention = false);

struct SimulationConfig {
  std::vector<int> scenarios{1};
  std::vector<SimMethod> methods{SimMethod::glm};
  std::vector<EstimatorKind> estimators{EstimatorKind::imputation, EstimatorKind::weighting,
                                        EstimatorKind::imp_then_weight, EstimatorKind::triply_robust};
  std::vector<Index> n{2000};
  int replicates = 200;
  int K = 5;
  std::uint64_t seed = 1;
  Convention convention = Convention::baseline_C;
  std::optional<double> truth;  // oracle is run when absent
  Index oracle_N = 1000000;
  std::uint64_t oracle_seed = 1;
  ScenarioOptions scenario;
  InterventionSpec intervention;

  void validate() const;
};

struct Metrics {
  double median_bias = 0;
  double median_rmse = 0;
  Index count = 0;
};

/// median(estimates) - truth and sqrt(median((estimates - truth)^2)) over finite estimates.
Metrics compute_metrics(const std::vector<double>& estimates, double truth);

struct CellResult {
  int scenario = 1;
  SimMethod method = SimMethod::glm;
  Index n = 0;
  std::vector<std::vector<double>> delta;  // [replicate][estimator], NaN for failed replicates
  std::vector<Metrics> metrics;            // per estimator
  int failed = 0;
  std::vector<std::string> failures;
};

struct SimulationResult {
  SimulationConfig config;
  double truth = 0;
  std::optional<OracleResult> oracle;
  std::vector<CellResult> cells;
};

/// Delta-hat for every replicate of one grid cell.
CellResult run_replicates(const SimulationConfig& cfg, int scenario, SimMethod method, Index n, int jobs = 1);

/// Full grid plus metrics against the oracle (or configured) truth.
SimulationResult run_simulation(const SimulationConfig& cfg, int jobs = 1);

}  // namespace sdecomp
