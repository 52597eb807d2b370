#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "sdecomp/pipeline.hpp"

namespace sdecomp {

/// Bootstrap summary of one quantity.
struct QuantitySummary {
  double estimate = 0;
  double se = 0;
  std::optional<double> t;  // absent when se == 0
  std::optional<double> p;
  double ci_lo = 0;
  double ci_hi = 0;
  bool zero_se = false;
};

/// Two-sided normal p-value 2 (1 - Phi(|t|)).
double normal_p_value(double t);

/// SE is the sample standard deviation; the CI takes inverse-ECDF order statistics.
/// With zero SE, t and p are reported only when the estimate is also zero (t = 0, p = 1).
QuantitySummary summarize(const std::vector<double>& samples, double estimate, double level = 0.95);

struct BootstrapOptions {
  int B = 500;
  bool clustered = false;
  std::uint64_t seed = 0;
  bool rerandomize_folds = true;
  int jobs = 1;
  double level = 0.95;

  void validate() const;
};

struct InferenceRow {
  EstimatorKind estimator = EstimatorKind::triply_robust;
  std::string group;
  QuantitySummary tau, delta, zeta;
  std::optional<double> pct;
  std::vector<double> tau_samples, delta_samples, zeta_samples;
};

struct InferenceReport {
  AnalysisResult point;
  std::vector<InferenceRow> rows;  // aligned with point.records
  int B = 0;
  int used = 0;
  int retried = 0;
  int dropped = 0;
  bool clustered = false;
  std::uint64_t seed = 0;
  double max_additivity_error = 0;  // over every replicate and record
  std::vector<std::string> failures;
};

/// Row indices for one bootstrap draw: n rows with replacement, or as many whole clusters
/// as the data has, drawn with replacement (cluster ids are kept, so copies stay together).
std::vector<Index> resample_rows(const Dataset& ds, const RoleMap& roles, bool clustered, std::uint64_t seed);

/// Re-runs the full estimation on B resamples. Replicates that fail or hit a degenerate fit
/// are retried once with a fresh seed, then dropped.
InferenceReport bootstrap(const Dataset& ds, const AnalysisConfig& cfg, const BootstrapOptions& opts);

}  // namespace sdecomp
