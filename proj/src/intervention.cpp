#include "sdecomp/intervention.hpp"

#include <random>

#include "sdecomp/random.hpp"

namespace sdecomp {

void InterventionSpec::validate() const {
  for (const auto* f : {&A, &M}) {
    if (f->mode == FactorIntervention::Mode::set_value && f->level != 0 && f->level != 1)
      throw ConfigError("set_value level must be 0 or 1, got " + std::to_string(f->level));
  }
  if (integration.kind == Integration::Kind::draw && integration.n_draws < 1)
    throw ConfigError("draw integration needs n_draws >= 1");
}

namespace {

Eigen::VectorXd fit_one(const Dataset& ds, const RoleMap& roles, const FactorIntervention& f,
                        const std::string& factor, const std::vector<std::string>& allowables, ModelFamily fitter,
                        bool& degenerate) {
  const Index n = ds.rows();
  if (f.mode == FactorIntervention::Mode::set_value)
    return Eigen::VectorXd::Constant(n, f.level == 1 ? 1.0 : 0.0);

  const std::string level = f.reference_level.value_or(roles.group.reference);
  const auto rows = rows_in_group(ds, roles, level);
  if (rows.empty()) throw EstimationError("intervention: group level '" + level + "' has no rows");
  const Dataset ref = ds.subset(rows);

  FeatureFormula formula;
  formula.terms.push_back(Term::intercept());
  for (const auto& c : allowables) formula.terms.push_back(Term::raw(c));

  if (fitter != ModelFamily::logistic_glm && fitter != ModelFamily::gbt_binary)
    throw ConfigError(std::string("intervention fitter must be a classifier, got ") + to_string(fitter));
  const ModelSpec spec = fitter == ModelFamily::gbt_binary ? ModelSpec::boosted(fitter, formula)
                                                           : ModelSpec::glm(fitter, formula);
  const FittedModel m = fit_model(spec, ref, ref.values(factor), 0);
  degenerate = m.diagnostics.degenerate;
  return predict(m, ds);
}

}  // namespace

InterventionFit fit_intervention_distributions(const Dataset& ds, const RoleMap& roles, const InterventionSpec& spec,
                                               ModelFamily fitter) {
  spec.validate();
  InterventionFit out;
  out.pstar_A = fit_one(ds, roles, spec.A, roles.system_factor, roles.allowable_A, fitter, out.degenerate_A);
  out.pstar_M = fit_one(ds, roles, spec.M, roles.individual_factor, roles.allowable_M, fitter, out.degenerate_M);
  return out;
}

Eigen::VectorXd integrate_factor(const Eigen::VectorXd& p1, const Eigen::VectorXd& v0, const Eigen::VectorXd& v1,
                                 const Integration& integration, std::uint64_t stream) {
  if (integration.kind == Integration::Kind::marginalize)
    return (p1.array() * v1.array() + (1 - p1.array()) * v0.array()).matrix();

  std::mt19937_64 rng(derive_seed(integration.seed, stream));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd out(p1.size());
  for (Index i = 0; i < p1.size(); ++i) {
    int ones = 0;
    for (int d = 0; d < integration.n_draws; ++d) ones += u(rng) < p1[i];
    out[i] = (ones * v1[i] + (integration.n_draws - ones) * v0[i]) / integration.n_draws;
  }
  return out;
}

Eigen::VectorXd integrate_two_factors(const Eigen::VectorXd& pA, const Eigen::VectorXd& pM,
                                      const std::array<std::array<Eigen::VectorXd, 2>, 2>& v,
                                      const Integration& integration, std::uint64_t stream) {
  const Index n = pA.size();
  Eigen::VectorXd out(n);
  if (integration.kind == Integration::Kind::marginalize) {
    for (Index i = 0; i < n; ++i) {
      const double a = pA[i], m = pM[i];
      out[i] = (1 - a) * ((1 - m) * v[0][0][i] + m * v[0][1][i]) + a * ((1 - m) * v[1][0][i] + m * v[1][1][i]);
    }
    return out;
  }
  std::mt19937_64 rng(derive_seed(integration.seed, stream));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (Index i = 0; i < n; ++i) {
    double s = 0;
    for (int d = 0; d < integration.n_draws; ++d) {
      const int a = u(rng) < pA[i];
      const int m = u(rng) < pM[i];
      s += v[static_cast<std::size_t>(a)][static_cast<std::size_t>(m)][i];
    }
    out[i] = s / integration.n_draws;
  }
  return out;
}

}  // namespace sdecomp
