#include "sdecomp/decompose.hpp"

#include <cmath>
#include <cstdio>

#include "sdecomp/formula.hpp"
#include "sdecomp/glm.hpp"

namespace sdecomp {

InitialDisparity estimate_initial_disparity(const Dataset& ds, const RoleMap& roles) {
  InitialDisparity out;
  const auto& g = ds.column(roles.group.column);
  const auto& y = ds.values(roles.outcome);
  std::vector<std::vector<Index>> members;
  for (const auto& lvl : roles.group.comparisons) {
    members.push_back(rows_in_group(ds, roles, lvl));
    if (members.back().empty()) throw EstimationError("comparison group '" + lvl + "' is empty");
  }
  if (rows_in_group(ds, roles, roles.group.reference).empty())
    throw EstimationError("reference group '" + roles.group.reference + "' is empty");

  FeatureFormula f{Term::intercept(), Term::raw(roles.group.column)};
  for (const auto& c : roles.baseline) f.terms.push_back(Term::centered(c));
  const Design d = build_design(ds, f);
  const auto fit = sdecomp::fit_linear(d.X, y);
  out.jittered = fit.jittered;

  for (std::size_t j = 0; j < roles.group.comparisons.size(); ++j) {
    const std::string& lvl = roles.group.comparisons[j];
    const std::string name = roles.group.column + "[" + lvl + "]";
    Index col = -1;
    for (std::size_t k = 0; k < d.info.names.size(); ++k)
      if (d.info.names[k] == name) col = static_cast<Index>(k);
    if (col < 0) throw SchemaError("group level '" + lvl + "' not found in column '" + g.name + "'");
    double s = 0;
    for (Index i : members[j]) s += y[i];
    out.groups.push_back(lvl);
    out.tau.push_back(fit.coef[col]);
    out.mean_y.push_back(s / static_cast<double>(members[j].size()));
  }
  return out;
}

std::optional<double> pct_reduction(double delta, double tau) {
  if (tau == 0) return std::nullopt;
  return delta / tau * 100.0;
}

Decomposition decompose(double tau, double psi, double mean_y) {
  Decomposition d;
  d.delta = mean_y - psi;
  d.zeta = tau - d.delta;
  d.pct = pct_reduction(d.delta, tau);
  return d;
}

std::string format_pct(std::optional<double> pct, int decimals) {
  if (!pct) return "NA";
  const double rounded = std::round(*pct * 100.0) / 100.0;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, rounded);
  return buf;
}

std::vector<EstimateRecord> make_records(EstimatorKind kind, const InitialDisparity& tau,
                                         const std::vector<GroupPsi>& psi, const WeightOptions& opts) {
  std::vector<EstimateRecord> out;
  for (const auto& p : psi) {
    std::size_t j = 0;
    while (j < tau.groups.size() && tau.groups[j] != p.group) ++j;
    if (j == tau.groups.size()) throw EstimationError("no disparity for group '" + p.group + "'");
    EstimateRecord r;
    r.group = p.group;
    r.estimator = kind;
    r.n = p.n;
    r.tau = tau.tau[j];
    r.mean_y = tau.mean_y[j];
    r.psi = p.psi;
    const Decomposition d = decompose(r.tau, r.psi, r.mean_y);
    r.delta = d.delta;
    r.zeta = d.zeta;
    r.pct = d.pct;
    if (kind == EstimatorKind::weighting) {
      r.trim = opts.trim;
      r.normalize = opts.normalize;
    }
    r.n_trimmed = p.n_trimmed;
    r.positivity = p.positivity;
    r.correction_A = p.correction_A;
    r.correction_AM = p.correction_AM;
    out.push_back(r);
  }
  return out;
}

}  // namespace sdecomp
