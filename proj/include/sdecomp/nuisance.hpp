#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "sdecomp/dataset.hpp"
#include "sdecomp/intervention.hpp"
#include "sdecomp/model.hpp"

namespace sdecomp {

/// Model specs for each nuisance function.
struct NuisanceSpecs {
  ModelSpec pi_A;  // A ~ R, X, C
  ModelSpec pi_M;  // M ~ R, X, A, Z, C
  ModelSpec mu;    // Y ~ R, X, A, Z, M, C
  ModelSpec nu;    // integrated mu ~ R, X, A, C
  ModelFamily intervention = ModelFamily::logistic_glm;

  void validate() const;
};

enum class Provenance { in_sample, out_of_fold };
const char* to_string(Provenance p);

/// Where each row's predictions came from. For in-sample fits there is a single
/// "fold" 0 trained on every row.
struct FoldRecord {
  std::vector<int> fold_of_row;
  std::vector<std::vector<Index>> training_rows;  // per fold
};

/// Per-unit nuisance predictions. All vectors have one entry per row of the data they were fit on.
struct NuisanceSet {
  Eigen::VectorXd pstar_A;  // P*(A = 1)
  Eigen::VectorXd pstar_M;  // P*(M = 1)
  Eigen::VectorXd pA1;      // fitted P(A = 1 | R, X, C)
  Eigen::VectorXd pM1;      // fitted P(M = 1 | R, X, A, Z, C)
  Eigen::VectorXd pi_A;     // fitted P(A = A_i | ...)
  Eigen::VectorXd pi_M;     // fitted P(M = M_i | ...)
  Eigen::VectorXd mu_obs;                 // mu at observed values
  std::array<Eigen::VectorXd, 2> mu_m;    // mu at observed A, Z and M = m
  Eigen::VectorXd mu_bar;                 // mu integrated over P*_M at observed A, Z
  Eigen::VectorXd mu_tilde;               // mu integrated over P*_A x P*_M at observed Z (literal variant)
  std::array<Eigen::VectorXd, 2> nu_a;    // nu at A = a
  Eigen::VectorXd nu_obs;                 // nu at observed A
  Eigen::VectorXd nu_bar;                 // nu integrated over P*_A
  std::array<Eigen::VectorXd, 2> nu_single_a;  // E[mu_obs | R, X, A = a, C], for the A-only estimand
  bool has_single = false;
  bool literal_tilde_a = false;

  std::map<std::string, Provenance> provenance;
  FoldRecord folds;
  std::vector<std::string> warnings;
  bool degenerate = false;

  [[nodiscard]] Index rows() const { return mu_obs.size(); }
};

struct NuisanceOptions {
  bool single_factor = false;  // also fit the A-only nested regression
  int jobs = 1;                // concurrent fold fits
};

/// Fits every nuisance on all rows and predicts on the same rows.
NuisanceSet fit_nuisances(const Dataset& ds, const RoleMap& roles, const NuisanceSpecs& specs,
                          const InterventionSpec& spec, std::uint64_t seed, const NuisanceOptions& options = {});

/// Fits nuisances on each fold's complement and predicts on the fold.
/// `fold_of_row` holds 0-based fold indices; `n_folds` folds must each be non-empty.
NuisanceSet fit_nuisances_by_fold(const Dataset& ds, const RoleMap& roles, const NuisanceSpecs& specs,
                                  const InterventionSpec& spec, const std::vector<int>& fold_of_row, int n_folds,
                                  std::uint64_t seed, const NuisanceOptions& options = {});

}  // namespace sdecomp
