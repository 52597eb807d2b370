#pragma once

#include <json.hpp>

#include <ostream>

#include "sdecomp/crossfit.hpp"
#include "sdecomp/dataset.hpp"
#include "sdecomp/inference.hpp"
#include "sdecomp/model.hpp"
#include "sdecomp/pipeline.hpp"
#include "sdecomp/simulation.hpp"

namespace sdecomp {

nlohmann::json to_json(const LoadReport& r);
nlohmann::json to_json(const FittedModel& m);
nlohmann::json to_json(const CrossFitPlan& p);  // folds written 1-based
nlohmann::json to_json(const EstimateRecord& r);
nlohmann::json to_json(const AnalysisResult& r);
nlohmann::json to_json(const QuantitySummary& q);
nlohmann::json to_json(const InferenceReport& r);
nlohmann::json to_json(const OracleResult& o);

/// Table layout: estimator, group, quantity, estimate, SE, t, p, CI, % reduction.
void write_report_csv(const AnalysisResult& point, const InferenceReport* inference, std::ostream& out);

/// scenario, method, estimator, n, replicate, delta_hat
void write_estimates_csv(const SimulationResult& sim, std::ostream& out);
/// scenario, method, estimator, n, median_bias, median_rmse, count, truth
void write_metrics_csv(const SimulationResult& sim, std::ostream& out);
nlohmann::json simulation_metadata(const SimulationResult& sim);

/// %.17g, or "NA" for non-finite values.
std::string format_number(double v);

}  // namespace sdecomp
