#include "sdecomp/estimators.hpp"

#include <algorithm>
#include <cmath>

namespace sdecomp {

const char* to_string(EstimatorKind k) {
  switch (k) {
    case EstimatorKind::imputation: return "imputation";
    case EstimatorKind::weighting: return "weighting";
    case EstimatorKind::imp_then_weight: return "imp_then_weight";
    case EstimatorKind::triply_robust: return "triply_robust";
    case EstimatorKind::single_A: return "single_A";
    case EstimatorKind::single_M: return "single_M";
  }
  return "?";
}

EstimatorKind parse_estimator(const std::string& s) {
  for (auto k : {EstimatorKind::imputation, EstimatorKind::weighting, EstimatorKind::imp_then_weight,
                 EstimatorKind::triply_robust, EstimatorKind::single_A, EstimatorKind::single_M})
    if (s == to_string(k)) return k;
  throw ConfigError("unknown estimator '" + s + "'");
}

bool needs_single(EstimatorKind k) { return k == EstimatorKind::single_A; }

void WeightOptions::validate() const {
  if (!trim) return;
  const auto [lo, hi] = *trim;
  if (!(lo >= 0 && lo < hi && hi <= 100)) throw ConfigError("trim percentiles must satisfy 0 <= lo < hi <= 100");
}

double order_quantile(std::vector<double> v, double q) {
  if (v.empty()) throw EstimationError("quantile of an empty sample");
  std::sort(v.begin(), v.end());
  const auto n = static_cast<double>(v.size());
  // tolerance guards q * n landing a hair above an integer, e.g. 0.03 * 100
  auto k = static_cast<long>(std::ceil(q * n - 1e-9));
  k = std::clamp(k, 1L, static_cast<long>(v.size()));
  return v[static_cast<std::size_t>(k - 1)];
}

namespace {

struct Rows {
  std::string group;
  std::vector<Index> rows;
};

std::vector<Rows> comparison_rows(const Dataset& ds, const RoleMap& roles, const NuisanceSet& nuis) {
  if (nuis.rows() != ds.rows()) throw EstimationError("nuisance set does not match the data");
  std::vector<Rows> out;
  for (const auto& g : roles.group.comparisons) {
    auto rows = rows_in_group(ds, roles, g);
    if (rows.empty()) throw EstimationError("comparison group '" + g + "' is empty");
    out.push_back({g, std::move(rows)});
  }
  return out;
}

Positivity positivity(const NuisanceSet& nuis, const std::vector<Index>& rows) {
  Positivity p;
  for (Index i : rows) {
    p.min_pi_A = std::min(p.min_pi_A, nuis.pi_A[i]);
    p.max_pi_A = std::max(p.max_pi_A, nuis.pi_A[i]);
    p.min_pi_M = std::min(p.min_pi_M, nuis.pi_M[i]);
    p.max_pi_M = std::max(p.max_pi_M, nuis.pi_M[i]);
  }
  p.warning = p.min_pi_A < kPositivityWarning || p.min_pi_M < kPositivityWarning;
  return p;
}

double star_prob(double p1, double level) { return level == 1.0 ? p1 : 1.0 - p1; }

/// Per-row weights: A-only and joint.
void weights(const Dataset& ds, const RoleMap& roles, const NuisanceSet& nuis, Index i, double& wA, double& wAM) {
  const double a = ds.values(roles.system_factor)[i];
  const double m = ds.values(roles.individual_factor)[i];
  wA = star_prob(nuis.pstar_A[i], a) / nuis.pi_A[i];
  wAM = wA * star_prob(nuis.pstar_M[i], m) / nuis.pi_M[i];
}

template <typename Fn>
std::vector<GroupPsi> per_group(const Dataset& ds, const RoleMap& roles, const NuisanceSet& nuis, Fn&& fn) {
  std::vector<GroupPsi> out;
  for (const auto& g : comparison_rows(ds, roles, nuis)) {
    GroupPsi r;
    r.group = g.group;
    r.n = static_cast<Index>(g.rows.size());
    r.positivity = positivity(nuis, g.rows);
    fn(g.rows, r);
    if (!std::isfinite(r.psi)) throw EstimationError("non-finite estimate for group '" + g.group + "'");
    out.push_back(r);
  }
  return out;
}

}  // namespace

std::vector<GroupPsi> estimate_imputation(const Dataset& ds, const RoleMap& roles, const NuisanceSet& nuis) {
  return per_group(ds, roles, nuis, [&](const std::vector<Index>& rows, GroupPsi& r) {
    double s = 0;
    for (Index i : rows) s += nuis.nu_bar[i];
    r.psi = s / static_cast<double>(rows.size());
  });
}

std::vector<GroupPsi> estimate_weighting(const Dataset& ds, const RoleMap& roles, const NuisanceSet& nuis,
                                         const WeightOptions& opts) {
  opts.validate();
  const auto& y = ds.values(roles.outcome);
  return per_group(ds, roles, nuis, [&](const std::vector<Index>& rows, GroupPsi& r) {
    std::vector<double> w(rows.size());
    for (std::size_t j = 0; j < rows.size(); ++j) {
      double wA = 0;
      weights(ds, roles, nuis, rows[j], wA, w[j]);
    }
    if (opts.trim) {
      const double lo = order_quantile(w, opts.trim->first / 100.0);
      const double hi = order_quantile(w, opts.trim->second / 100.0);
      for (auto& v : w) {
        const double c = std::clamp(v, lo, hi);
        if (c != v) ++r.n_trimmed;
        v = c;
      }
    }
    double num = 0, den = 0;
    for (std::size_t j = 0; j < rows.size(); ++j) {
      num += w[j] * y[rows[j]];
      den += w[j];
    }
    if (opts.normalize) {
      if (!(den > 0)) throw EstimationError("normalized weighting: all weights are zero in group '" + r.group + "'");
      r.psi = num / den;
    } else {
      r.psi = num / static_cast<double>(rows.size());
    }
  });
}

std::vector<GroupPsi> estimate_imp_then_weight(const Dataset& ds, const RoleMap& roles, const NuisanceSet& nuis) {
  return per_group(ds, roles, nuis, [&](const std::vector<Index>& rows, GroupPsi& r) {
    double s = 0;
    for (Index i : rows) {
      double wA = 0, wAM = 0;
      weights(ds, roles, nuis, i, wA, wAM);
      s += wA * nuis.mu_bar[i];
    }
    r.psi = s / static_cast<double>(rows.size());
  });
}

std::vector<GroupPsi> estimate_triply_robust(const Dataset& ds, const RoleMap& roles, const NuisanceSet& nuis) {
  const auto& y = ds.values(roles.outcome);
  return per_group(ds, roles, nuis, [&](const std::vector<Index>& rows, GroupPsi& r) {
    double base = 0, c1 = 0, c2 = 0;
    for (Index i : rows) {
      double wA = 0, wAM = 0;
      weights(ds, roles, nuis, i, wA, wAM);
      base += nuis.nu_bar[i];
      c1 += nuis.literal_tilde_a ? wA * (nuis.mu_tilde[i] - nuis.nu_bar[i]) : wA * (nuis.mu_bar[i] - nuis.nu_obs[i]);
      c2 += wAM * (y[i] - nuis.mu_obs[i]);
    }
    const auto n = static_cast<double>(rows.size());
    r.correction_A = c1 / n;
    r.correction_AM = c2 / n;
    r.psi = base / n + r.correction_A + r.correction_AM;
  });
}

std::vector<GroupPsi> estimate_single_factor(const Dataset& ds, const RoleMap& roles, char factor,
                                             const NuisanceSet& nuis) {
  if (factor != 'A' && factor != 'M') throw ConfigError("single-factor estimate needs factor A or M");
  if (factor == 'A' && !nuis.has_single) throw EstimationError("A-only estimate needs the single-factor regression");
  return per_group(ds, roles, nuis, [&](const std::vector<Index>& rows, GroupPsi& r) {
    double s = 0;
    for (Index i : rows) {
      if (factor == 'M') {
        s += nuis.mu_bar[i];
      } else {
        const double p = nuis.pstar_A[i];
        s += p * nuis.nu_single_a[1][i] + (1 - p) * nuis.nu_single_a[0][i];
      }
    }
    r.psi = s / static_cast<double>(rows.size());
  });
}

std::vector<GroupPsi> estimate(EstimatorKind kind, const Dataset& ds, const RoleMap& roles, const NuisanceSet& nuis,
                               const WeightOptions& opts) {
  switch (kind) {
    case EstimatorKind::imputation: return estimate_imputation(ds, roles, nuis);
    case EstimatorKind::weighting: return estimate_weighting(ds, roles, nuis, opts);
    case EstimatorKind::imp_then_weight: return estimate_imp_then_weight(ds, roles, nuis);
    case EstimatorKind::triply_robust: return estimate_triply_robust(ds, roles, nuis);
    case EstimatorKind::single_A: return estimate_single_factor(ds, roles, 'A', nuis);
    case EstimatorKind::single_M: return estimate_single_factor(ds, roles, 'M', nuis);
  }
  throw ConfigError("unknown estimator");
}

}  // namespace sdecomp
