#include "sdecomp/pipeline.hpp"

#include <algorithm>

namespace sdecomp {

void AnalysisConfig::validate() const {
  roles.validate();
  intervention.validate();
  models.validate();
  weighting.validate();
  if (estimators.empty()) throw ConfigError("no estimators requested");
  if (K == 1 || K < 0) throw ConfigError("K must be 0 (no cross-fitting) or at least 2");
  if (cluster_folds && !roles.cluster) throw ConfigError("cluster_folds requires a cluster column in roles");
}

AnalysisResult run_estimation(const Dataset& ds, const AnalysisConfig& cfg, int jobs) {
  cfg.validate();
  AnalysisResult out;
  out.disparity = estimate_initial_disparity(ds, cfg.roles);

  NuisanceOptions opts;
  opts.jobs = jobs;
  opts.single_factor = std::any_of(cfg.estimators.begin(), cfg.estimators.end(), needs_single);
  NuisanceSet nuis;
  if (cfg.K >= 2) {
    const Eigen::VectorXd* clusters = cfg.cluster_folds ? &ds.values(*cfg.roles.cluster) : nullptr;
    const CrossFitPlan plan = make_folds(ds.rows(), cfg.K, cfg.seed, clusters);
    nuis = crossfit_nuisances(ds, cfg.roles, cfg.models, plan, cfg.intervention, cfg.seed, opts);
    out.provenance = Provenance::out_of_fold;
  } else {
    nuis = fit_nuisances(ds, cfg.roles, cfg.models, cfg.intervention, cfg.seed, opts);
  }
  out.warnings = nuis.warnings;
  out.degenerate = nuis.degenerate;
  if (out.disparity.jittered) out.warnings.push_back("initial disparity: singular regression, ridge jitter added");

  for (EstimatorKind k : cfg.estimators) {
    const auto psi = estimate(k, ds, cfg.roles, nuis, cfg.weighting);
    for (auto& r : make_records(k, out.disparity, psi, cfg.weighting)) {
      if (r.positivity.warning)
        out.warnings.push_back(std::string(to_string(k)) + ", group " + r.group +
                               ": fitted propensity below 0.01 (positivity)");
      out.records.push_back(std::move(r));
    }
  }
  return out;
}

}  // namespace sdecomp
