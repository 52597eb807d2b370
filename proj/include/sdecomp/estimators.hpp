#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sdecomp/dataset.hpp"
#include "sdecomp/nuisance.hpp"

namespace sdecomp {

enum class EstimatorKind { imputation, weighting, imp_then_weight, triply_robust, single_A, single_M };

const char* to_string(EstimatorKind k);
EstimatorKind parse_estimator(const std::string& s);
/// Whether the estimator needs the A-only nested regression.
bool needs_single(EstimatorKind k);

struct WeightOptions {
  std::optional<std::pair<double, double>> trim;  // percentile caps in [0, 100]
  bool normalize = false;                         // Hajek ratio instead of plain mean

  void validate() const;
};

/// Propensity range among the rows an estimate averages over.
struct Positivity {
  double min_pi_A = 1, max_pi_A = 0;
  double min_pi_M = 1, max_pi_M = 0;
  bool warning = false;  // some fitted propensity below 0.01
};

/// Counterfactual mean for one comparison group.
struct GroupPsi {
  std::string group;
  Index n = 0;
  double psi = 0;
  Positivity positivity;
  Index n_trimmed = 0;
  /// Triply robust only: means of the A-weighted and fully weighted correction terms.
  double correction_A = 0;
  double correction_AM = 0;
};

inline constexpr double kPositivityWarning = 0.01;

std::vector<GroupPsi> estimate_imputation(const Dataset& ds, const RoleMap& roles, const NuisanceSet& nuis);
std::vector<GroupPsi> estimate_weighting(const Dataset& ds, const RoleMap& roles, const NuisanceSet& nuis,
                                         const WeightOptions& opts = {});
std::vector<GroupPsi> estimate_imp_then_weight(const Dataset& ds, const RoleMap& roles, const NuisanceSet& nuis);
std::vector<GroupPsi> estimate_triply_robust(const Dataset& ds, const RoleMap& roles, const NuisanceSet& nuis);
/// Intervention on one factor only; the other follows its natural law.
std::vector<GroupPsi> estimate_single_factor(const Dataset& ds, const RoleMap& roles, char factor,
                                             const NuisanceSet& nuis);

std::vector<GroupPsi> estimate(EstimatorKind kind, const Dataset& ds, const RoleMap& roles, const NuisanceSet& nuis,
                               const WeightOptions& opts = {});

/// Inverse-ECDF quantile: the ceil(q * n)-th order statistic, q in [0, 1].
double order_quantile(std::vector<double> v, double q);

}  // namespace sdecomp
