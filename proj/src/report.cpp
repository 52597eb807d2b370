#include "sdecomp/report.hpp"

#include <cmath>
#include <cstdio>

namespace sdecomp {

using nlohmann::json;

namespace {

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json finite_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

}  // namespace

std::string format_number(double v) {
  if (!std::isfinite(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

json to_json(const LoadReport& r) {
  json cols = json::array();
  for (const auto& c : r.columns) cols.push_back({{"name", c.name}, {"role", c.role}, {"type", to_string(c.type)}});
  return {{"rows_read", r.rows_read}, {"rows_kept", r.rows_kept}, {"dropped", r.dropped}, {"columns", cols}};
}

json to_json(const FittedModel& m) {
  json j{{"family", to_string(m.family)},
         {"features", m.design.names},
         {"diagnostics",
          {{"iterations", m.diagnostics.iterations},
           {"final_loss", finite_or_null(m.diagnostics.final_loss)},
           {"converged", m.diagnostics.converged},
           {"jittered", m.diagnostics.jittered},
           {"degenerate", m.diagnostics.degenerate}}}};
  if (is_gbt(m.family)) {
    json trees = json::array();
    for (const auto& t : m.ensemble.trees) {
      json nodes = json::array();
      for (const auto& nd : t.nodes)
        nodes.push_back({{"feature", nd.feature},
                         {"threshold", nd.threshold},
                         {"left", nd.left},
                         {"right", nd.right},
                         {"leaf_value", nd.leaf_value}});
      trees.push_back(nodes);
    }
    j["base_score"] = m.ensemble.base_score;
    j["learning_rate"] = m.ensemble.learning_rate;
    j["trees"] = trees;
  } else {
    j["coefficients"] = std::vector<double>(m.coefficients.data(), m.coefficients.data() + m.coefficients.size());
  }
  return j;
}

json to_json(const CrossFitPlan& p) {
  std::vector<int> folds;
  folds.reserve(p.assignment.size());
  for (int k : p.assignment) folds.push_back(k + 1);
  return {{"K", p.K}, {"cluster_respecting", p.cluster_respecting}, {"seed", p.seed}, {"fold", folds}};
}

json to_json(const EstimateRecord& r) {
  json j{{"group", r.group},
         {"estimator", to_string(r.estimator)},
         {"n", r.n},
         {"tau", r.tau},
         {"mean_y", r.mean_y},
         {"psi", r.psi},
         {"delta", r.delta},
         {"zeta", r.zeta},
         {"pct_reduction", optional_number(r.pct)},
         {"pct_reduction_display", format_pct(r.pct)},
         {"positivity",
          {{"min_pi_A", r.positivity.min_pi_A},
           {"max_pi_A", r.positivity.max_pi_A},
           {"min_pi_M", r.positivity.min_pi_M},
           {"max_pi_M", r.positivity.max_pi_M},
           {"warning", r.positivity.warning}}}};
  if (r.estimator == EstimatorKind::weighting) {
    j["trim"] = r.trim ? json::array({r.trim->first, r.trim->second}) : json(nullptr);
    j["normalize"] = r.normalize;
    j["n_trimmed"] = r.n_trimmed;
  }
  if (r.estimator == EstimatorKind::triply_robust)
    j["corrections"] = {{"a_weighted", r.correction_A}, {"fully_weighted", r.correction_AM}};
  return j;
}

json to_json(const AnalysisResult& r) {
  json recs = json::array();
  for (const auto& e : r.records) recs.push_back(to_json(e));
  json tau = json::array();
  for (std::size_t j = 0; j < r.disparity.groups.size(); ++j)
    tau.push_back({{"group", r.disparity.groups[j]}, {"tau", r.disparity.tau[j]}, {"mean_y", r.disparity.mean_y[j]}});
  return {{"initial_disparity", tau},
          {"estimates", recs},
          {"nuisance_provenance", to_string(r.provenance)},
          {"warnings", r.warnings}};
}

json to_json(const QuantitySummary& q) {
  return {{"estimate", q.estimate}, {"se", q.se},          {"t", optional_number(q.t)},
          {"p", optional_number(q.p)}, {"ci", {q.ci_lo, q.ci_hi}}, {"zero_se", q.zero_se}};
}

json to_json(const InferenceReport& r) {
  json rows = json::array();
  for (const auto& row : r.rows)
    rows.push_back({{"estimator", to_string(row.estimator)},
                    {"group", row.group},
                    {"tau", to_json(row.tau)},
                    {"delta", to_json(row.delta)},
                    {"zeta", to_json(row.zeta)},
                    {"pct_reduction", optional_number(row.pct)}});
  return {{"B", r.B},
          {"replicates_used", r.used},
          {"replicates_retried", r.retried},
          {"replicates_dropped", r.dropped},
          {"clustered", r.clustered},
          {"seed", r.seed},
          {"max_additivity_error", r.max_additivity_error},
          {"failures", r.failures},
          {"rows", rows}};
}

json to_json(const OracleResult& o) {
  return {{"N", o.N},
          {"n_comparison", o.n_comparison},
          {"mean_y", o.mean_y},
          {"psi_true", o.psi},
          {"delta_true", o.delta},
          {"tau_true", o.tau},
          {"se_psi", o.se_psi},
          {"se_delta", o.se_delta},
          {"se_tau", o.se_tau},
          {"mean_y_population", o.mean_y_all},
          {"se_mean_y_population", o.se_mean_y_all}};
}

void write_report_csv(const AnalysisResult& point, const InferenceReport* inference, std::ostream& out) {
  out << "estimator,group,quantity,estimate,se,t_value,p_value,ci_lo,ci_hi,pct_reduction\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_number(*v) : std::string("NA"); };
  for (std::size_t j = 0; j < point.records.size(); ++j) {
    const auto& r = point.records[j];
    const char* names[3] = {"tau", "delta", "zeta"};
    const double est[3] = {r.tau, r.delta, r.zeta};
    for (int q = 0; q < 3; ++q) {
      out << to_string(r.estimator) << ',' << r.group << ',' << names[q] << ',' << format_number(est[q]);
      if (inference) {
        const auto& row = inference->rows[j];
        const QuantitySummary& s = q == 0 ? row.tau : q == 1 ? row.delta : row.zeta;
        out << ',' << format_number(s.se) << ',' << opt(s.t) << ',' << opt(s.p) << ',' << format_number(s.ci_lo)
            << ',' << format_number(s.ci_hi);
      } else {
        out << ",NA,NA,NA,NA,NA";
      }
      out << ',' << (q == 1 ? format_pct(r.pct) : std::string()) << '\n';
    }
  }
}

void write_estimates_csv(const SimulationResult& sim, std::ostream& out) {
  out << "scenario,method,estimator,n,replicate,delta_hat\n";
  for (const auto& c : sim.cells)
    for (std::size_t j = 0; j < sim.config.estimators.size(); ++j)
      for (std::size_t r = 0; r < c.delta.size(); ++r)
        out << c.scenario << ',' << to_string(c.method) << ',' << to_string(sim.config.estimators[j]) << ',' << c.n
            << ',' << r + 1 << ',' << format_number(c.delta[r][j]) << '\n';
}

void write_metrics_csv(const SimulationResult& sim, std::ostream& out) {
  out << "scenario,method,estimator,n,median_bias,median_rmse,count,truth\n";
  for (const auto& c : sim.cells)
    for (std::size_t j = 0; j < sim.config.estimators.size(); ++j) {
      const auto& m = c.metrics[j];
      out << c.scenario << ',' << to_string(c.method) << ',' << to_string(sim.config.estimators[j]) << ',' << c.n
          << ',' << format_number(m.median_bias) << ',' << format_number(m.median_rmse) << ',' << m.count << ','
          << format_number(sim.truth) << '\n';
    }
}

json simulation_metadata(const SimulationResult& sim) {
  const auto& cfg = sim.config;
  json cells = json::array();
  for (const auto& c : sim.cells)
    cells.push_back({{"scenario", c.scenario},
                     {"method", to_string(c.method)},
                     {"n", c.n},
                     {"failed", c.failed},
                     {"failures", c.failures}});
  json j{{"seed", cfg.seed},
         {"convention", to_string(cfg.convention)},
         {"truth", sim.truth},
         {"truth_source", sim.oracle ? "oracle" : "config"},
         {"replicates", cfg.replicates},
         {"K", cfg.K},
         {"misspecified_keep_z", cfg.scenario.misspecified_keep_z},
         {"cells", cells}};
  if (sim.oracle) j["oracle"] = to_json(*sim.oracle);
  return j;
}

}  // namespace sdecomp
