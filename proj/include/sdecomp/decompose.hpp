#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sdecomp/dataset.hpp"
#include "sdecomp/estimators.hpp"

namespace sdecomp {

/// Covariate-adjusted gap of each comparison group against the reference.
struct InitialDisparity {
  std::vector<std::string> groups;
  std::vector<double> tau;
  std::vector<double> mean_y;  // raw outcome mean of each comparison group
  bool jittered = false;
};

/// Regresses Y on group indicators plus mean-centered baseline covariates; tau is the
/// indicator coefficient. Without baseline covariates this is the raw mean difference.
InitialDisparity estimate_initial_disparity(const Dataset& ds, const RoleMap& roles);

struct Decomposition {
  double delta = 0;
  double zeta = 0;
  std::optional<double> pct;  // absent when tau == 0
};

/// delta = mean_y - psi and zeta = tau - delta, so tau = delta + zeta.
Decomposition decompose(double tau, double psi, double mean_y);

/// Percent reduction delta / tau * 100; absent when tau == 0.
std::optional<double> pct_reduction(double delta, double tau);

/// Rounds to two decimals, then prints with `decimals` places ("NA" when absent).
std::string format_pct(std::optional<double> pct, int decimals = 2);

struct EstimateRecord {
  std::string group;
  EstimatorKind estimator = EstimatorKind::triply_robust;
  Index n = 0;
  double tau = 0;
  double mean_y = 0;
  double psi = 0;
  double delta = 0;
  double zeta = 0;
  std::optional<double> pct;
  std::optional<std::pair<double, double>> trim;
  bool normalize = false;
  Index n_trimmed = 0;
  Positivity positivity;
  double correction_A = 0;
  double correction_AM = 0;
};

/// Combines the disparity and per-group counterfactual means of one estimator.
std::vector<EstimateRecord> make_records(EstimatorKind kind, const InitialDisparity& tau,
                                         const std::vector<GroupPsi>& psi, const WeightOptions& opts);

}  // namespace sdecomp
