#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sdecomp/crossfit.hpp"
#include "sdecomp/decompose.hpp"
#include "sdecomp/estimators.hpp"
#include "sdecomp/intervention.hpp"
#include "sdecomp/nuisance.hpp"

namespace sdecomp {

/// Everything needed to go from a dataset to decomposition estimates.
struct AnalysisConfig {
  RoleMap roles;
  InterventionSpec intervention;
  NuisanceSpecs models;
  std::vector<EstimatorKind> estimators{EstimatorKind::imputation, EstimatorKind::weighting,
                                        EstimatorKind::imp_then_weight, EstimatorKind::triply_robust};
  int K = 0;                  // < 2 means no cross-fitting
  bool cluster_folds = false; // keep clusters within one fold
  WeightOptions weighting;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AnalysisResult {
  InitialDisparity disparity;
  std::vector<EstimateRecord> records;  // estimator-major, then comparison group
  std::vector<std::string> warnings;
  bool degenerate = false;
  Provenance provenance = Provenance::in_sample;
};

/// One full pass: intervention distributions, nuisances (cross-fitted when K >= 2),
/// disparity, and every requested estimator.
AnalysisResult run_estimation(const Dataset& ds, const AnalysisConfig& cfg, int jobs = 1);

}  // namespace sdecomp
