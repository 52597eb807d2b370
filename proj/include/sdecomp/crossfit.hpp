#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "sdecomp/nuisance.hpp"

namespace sdecomp {

/// A partition of rows into K folds. `assignment` is 0-based.
struct CrossFitPlan {
  int K = 5;
  std::vector<int> assignment;
  bool cluster_respecting = false;
  std::uint64_t seed = 0;

  [[nodiscard]] std::vector<Index> fold_sizes() const;
};

/// Random partition with fold sizes differing by at most one row. With `clusters`,
/// whole clusters are dealt out (largest first, each to the currently smallest fold).
CrossFitPlan make_folds(Index n, int K, std::uint64_t seed, const Eigen::VectorXd* clusters = nullptr);

/// Out-of-fold nuisance predictions for every row.
NuisanceSet crossfit_nuisances(const Dataset& ds, const RoleMap& roles, const NuisanceSpecs& specs,
                               const CrossFitPlan& plan, const InterventionSpec& spec, std::uint64_t seed,
                               const NuisanceOptions& options = {});

/// True when every row's fold is absent from the training rows of that fold's models.
bool audit_no_leakage(const NuisanceSet& nuis);

}  // namespace sdecomp
