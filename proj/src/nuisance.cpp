#include "sdecomp/nuisance.hpp"

#include <numeric>

#include "sdecomp/crossfit.hpp"
#include "sdecomp/parallel.hpp"
#include "sdecomp/random.hpp"

namespace sdecomp {

void NuisanceSpecs::validate() const {
  pi_A.validate();
  pi_M.validate();
  mu.validate();
  nu.validate();
  if (!is_classifier(pi_A.family) || !is_classifier(pi_M.family))
    throw ConfigError("pi_A and pi_M need classifier families");
  if (is_classifier(mu.family) || is_classifier(nu.family))
    throw ConfigError("mu and nu need regression families");
}

const char* to_string(Provenance p) { return p == Provenance::in_sample ? "in_sample" : "out_of_fold"; }

namespace {

enum Stream : std::uint64_t {
  kFitPiA = 1,
  kFitPiM,
  kFitMu,
  kFitNu,
  kFitSingle,
  kDrawMuTrain,
  kDrawMuEval,
  kDrawNu,
  kDrawTildeTrain,
  kDrawTildeEval,
  kDrawSingle,
};

std::uint64_t stream_id(Stream s, int fold) { return static_cast<std::uint64_t>(s) * 1000003ULL + static_cast<std::uint64_t>(fold); }

Eigen::VectorXd gather(const Eigen::VectorXd& v, const std::vector<Index>& rows) {
  Eigen::VectorXd out(static_cast<Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) out[static_cast<Index>(i)] = v[rows[i]];
  return out;
}

void scatter(const Eigen::VectorXd& v, const std::vector<Index>& rows, Eigen::VectorXd& into) {
  for (std::size_t i = 0; i < rows.size(); ++i) into[rows[i]] = v[static_cast<Index>(i)];
}

Eigen::VectorXd at_level(const FittedModel& m, const Dataset& ds, const std::string& col, double level) {
  return predict(m, ds.with_values(col, Eigen::VectorXd::Constant(ds.rows(), level)));
}

Eigen::VectorXd at_levels(const FittedModel& m, const Dataset& ds, const std::string& c1, double l1,
                          const std::string& c2, double l2) {
  const Index n = ds.rows();
  return predict(m, ds.with_values(c1, Eigen::VectorXd::Constant(n, l1)).with_values(c2, Eigen::VectorXd::Constant(n, l2)));
}

struct FoldOut {
  Eigen::VectorXd pA1, pM1, mu_obs, mu_tilde, nu_obs, nu_bar, mu_bar;
  std::array<Eigen::VectorXd, 2> mu_m, nu_a, nu_single;
  std::vector<std::string> warnings;
  bool degenerate = false;
};

void note(FoldOut& out, const FittedModel& m, const char* what, int fold) {
  const auto& d = m.diagnostics;
  const std::string where = std::string(what) + (fold >= 0 ? " (fold " + std::to_string(fold + 1) + ")" : "");
  if (d.degenerate) {
    out.degenerate = true;
    out.warnings.push_back(where + ": response has a single level");
  }
  if (!d.converged) out.warnings.push_back(where + ": IRLS did not converge");
  if (d.jittered) out.warnings.push_back(where + ": singular normal system, ridge jitter added");
}

/// Trains on `train`, predicts on `eval`. pstar vectors are aligned with each dataset.
FoldOut fit_fold(const Dataset& train, const Dataset& eval, const Eigen::VectorXd& pstarA_train,
                 const Eigen::VectorXd& pstarM_train, const Eigen::VectorXd& pstarA_eval,
                 const Eigen::VectorXd& pstarM_eval, const RoleMap& roles, const NuisanceSpecs& specs,
                 const InterventionSpec& spec, std::uint64_t seed, int fold, bool single) {
  const std::string& A = roles.system_factor;
  const std::string& M = roles.individual_factor;
  const Integration& integ = spec.integration;
  const int tag = fold < 0 ? 0 : fold;
  FoldOut out;

  const FittedModel piA = fit_model(specs.pi_A, train, train.values(A), derive_seed(seed, kFitPiA, tag));
  note(out, piA, "pi_A", fold);
  out.pA1 = predict(piA, eval);

  const FittedModel piM = fit_model(specs.pi_M, train, train.values(M), derive_seed(seed, kFitPiM, tag));
  note(out, piM, "pi_M", fold);
  out.pM1 = predict(piM, eval);

  const FittedModel mu = fit_model(specs.mu, train, train.values(roles.outcome), derive_seed(seed, kFitMu, tag));
  note(out, mu, "mu", fold);
  out.mu_obs = predict(mu, eval);
  for (int m = 0; m < 2; ++m) out.mu_m[static_cast<std::size_t>(m)] = at_level(mu, eval, M, m);
  out.mu_bar = integrate_factor(pstarM_eval, out.mu_m[0], out.mu_m[1], integ, stream_id(kDrawMuEval, tag));

  // targets for the nested regression come from the mu trained on these same rows
  Eigen::VectorXd target;
  if (spec.literal_tilde_a) {
    std::array<std::array<Eigen::VectorXd, 2>, 2> tr, ev;
    for (int a = 0; a < 2; ++a)
      for (int m = 0; m < 2; ++m) {
        tr[static_cast<std::size_t>(a)][static_cast<std::size_t>(m)] = at_levels(mu, train, A, a, M, m);
        ev[static_cast<std::size_t>(a)][static_cast<std::size_t>(m)] = at_levels(mu, eval, A, a, M, m);
      }
    target = integrate_two_factors(pstarA_train, pstarM_train, tr, integ, stream_id(kDrawTildeTrain, tag));
    out.mu_tilde = integrate_two_factors(pstarA_eval, pstarM_eval, ev, integ, stream_id(kDrawTildeEval, tag));
  } else {
    target = integrate_factor(pstarM_train, at_level(mu, train, M, 0), at_level(mu, train, M, 1), integ,
                              stream_id(kDrawMuTrain, tag));
  }
  const FittedModel nu = fit_model(specs.nu, train, target, derive_seed(seed, kFitNu, tag));
  note(out, nu, "nu", fold);
  out.nu_obs = predict(nu, eval);
  for (int a = 0; a < 2; ++a) out.nu_a[static_cast<std::size_t>(a)] = at_level(nu, eval, A, a);
  out.nu_bar = integrate_factor(pstarA_eval, out.nu_a[0], out.nu_a[1], integ, stream_id(kDrawNu, tag));

  if (single) {
    const FittedModel ns = fit_model(specs.nu, train, predict(mu, train), derive_seed(seed, kFitSingle, tag));
    note(out, ns, "nu_single", fold);
    for (int a = 0; a < 2; ++a) out.nu_single[static_cast<std::size_t>(a)] = at_level(ns, eval, A, a);
  }
  return out;
}

Eigen::VectorXd observed_level_prob(const Eigen::VectorXd& p1, const Eigen::VectorXd& level) {
  return (level.array() == 1.0).select(p1, 1.0 - p1.array()).matrix();
}

NuisanceSet assemble(const Dataset& ds, const RoleMap& roles, const InterventionFit& pstar, const InterventionSpec& spec,
                     bool single) {
  const Index n = ds.rows();
  NuisanceSet s;
  s.pstar_A = pstar.pstar_A;
  s.pstar_M = pstar.pstar_M;
  for (auto* v : {&s.pA1, &s.pM1, &s.mu_obs, &s.mu_bar, &s.nu_obs, &s.nu_bar, &s.mu_m[0], &s.mu_m[1], &s.nu_a[0],
                  &s.nu_a[1]})
    v->resize(n);
  if (spec.literal_tilde_a) s.mu_tilde.resize(n);
  if (single) {
    s.nu_single_a[0].resize(n);
    s.nu_single_a[1].resize(n);
  }
  s.has_single = single;
  s.literal_tilde_a = spec.literal_tilde_a;
  if (pstar.degenerate_A) s.warnings.push_back("pi_star_A: reference group has a single level of A");
  if (pstar.degenerate_M) s.warnings.push_back("pi_star_M: reference group has a single level of M");
  s.degenerate = pstar.degenerate_A || pstar.degenerate_M;
  (void)roles;
  return s;
}

void place(NuisanceSet& s, const FoldOut& f, const std::vector<Index>& rows) {
  scatter(f.pA1, rows, s.pA1);
  scatter(f.pM1, rows, s.pM1);
  scatter(f.mu_obs, rows, s.mu_obs);
  scatter(f.mu_bar, rows, s.mu_bar);
  scatter(f.nu_obs, rows, s.nu_obs);
  scatter(f.nu_bar, rows, s.nu_bar);
  for (std::size_t k = 0; k < 2; ++k) {
    scatter(f.mu_m[k], rows, s.mu_m[k]);
    scatter(f.nu_a[k], rows, s.nu_a[k]);
    if (s.has_single) scatter(f.nu_single[k], rows, s.nu_single_a[k]);
  }
  if (s.literal_tilde_a) scatter(f.mu_tilde, rows, s.mu_tilde);
  s.warnings.insert(s.warnings.end(), f.warnings.begin(), f.warnings.end());
  s.degenerate = s.degenerate || f.degenerate;
}

void finish(NuisanceSet& s, const Dataset& ds, const RoleMap& roles) {
  s.pi_A = observed_level_prob(s.pA1, ds.values(roles.system_factor));
  s.pi_M = observed_level_prob(s.pM1, ds.values(roles.individual_factor));
  const bool finite = s.mu_obs.allFinite() && s.nu_bar.allFinite() && s.mu_bar.allFinite() && s.pi_A.allFinite() &&
                      s.pi_M.allFinite();
  if (!finite) throw EstimationError("nuisance predictions contain non-finite values");
}

}  // namespace

NuisanceSet fit_nuisances(const Dataset& ds, const RoleMap& roles, const NuisanceSpecs& specs,
                          const InterventionSpec& spec, std::uint64_t seed, const NuisanceOptions& options) {
  specs.validate();
  roles.validate(ds);
  const InterventionFit pstar = fit_intervention_distributions(ds, roles, spec, specs.intervention);
  NuisanceSet s = assemble(ds, roles, pstar, spec, options.single_factor);
  std::vector<Index> all(static_cast<std::size_t>(ds.rows()));
  std::iota(all.begin(), all.end(), Index{0});
  const FoldOut f = fit_fold(ds, ds, pstar.pstar_A, pstar.pstar_M, pstar.pstar_A, pstar.pstar_M, roles, specs, spec,
                             seed, -1, options.single_factor);
  place(s, f, all);
  finish(s, ds, roles);
  for (const char* c : {"pi_star_A", "pi_star_M", "pi_A", "pi_M", "mu", "nu"}) s.provenance[c] = Provenance::in_sample;
  s.folds.fold_of_row.assign(all.size(), 0);
  s.folds.training_rows = {all};
  return s;
}

NuisanceSet fit_nuisances_by_fold(const Dataset& ds, const RoleMap& roles, const NuisanceSpecs& specs,
                                  const InterventionSpec& spec, const std::vector<int>& fold_of_row, int n_folds,
                                  std::uint64_t seed, const NuisanceOptions& options) {
  specs.validate();
  roles.validate(ds);
  if (static_cast<Index>(fold_of_row.size()) != ds.rows())
    throw ConfigError("fold assignment length does not match the data");
  std::vector<std::vector<Index>> held(static_cast<std::size_t>(n_folds)), train(static_cast<std::size_t>(n_folds));
  for (std::size_t i = 0; i < fold_of_row.size(); ++i) {
    const int k = fold_of_row[i];
    if (k < 0 || k >= n_folds) throw ConfigError("fold index out of range");
    for (int j = 0; j < n_folds; ++j)
      (j == k ? held : train)[static_cast<std::size_t>(j)].push_back(static_cast<Index>(i));
  }
  for (int k = 0; k < n_folds; ++k)
    if (held[static_cast<std::size_t>(k)].empty()) throw ConfigError("fold " + std::to_string(k + 1) + " is empty");

  const InterventionFit pstar = fit_intervention_distributions(ds, roles, spec, specs.intervention);
  NuisanceSet s = assemble(ds, roles, pstar, spec, options.single_factor);

  std::vector<FoldOut> outs(static_cast<std::size_t>(n_folds));
  parallel_for(outs.size(), options.jobs, [&](std::size_t k) {
    const auto& tr = train[k];
    const auto& ev = held[k];
    outs[k] = fit_fold(ds.subset(tr), ds.subset(ev), gather(pstar.pstar_A, tr), gather(pstar.pstar_M, tr),
                       gather(pstar.pstar_A, ev), gather(pstar.pstar_M, ev), roles, specs, spec, seed,
                       static_cast<int>(k), options.single_factor);
  });
  for (std::size_t k = 0; k < outs.size(); ++k) place(s, outs[k], held[k]);
  finish(s, ds, roles);

  s.provenance["pi_star_A"] = Provenance::in_sample;
  s.provenance["pi_star_M"] = Provenance::in_sample;
  for (const char* c : {"pi_A", "pi_M", "mu", "nu"}) s.provenance[c] = Provenance::out_of_fold;
  s.folds.fold_of_row = fold_of_row;
  s.folds.training_rows = std::move(train);
  return s;
}

NuisanceSet crossfit_nuisances(const Dataset& ds, const RoleMap& roles, const NuisanceSpecs& specs,
                               const CrossFitPlan& plan, const InterventionSpec& spec, std::uint64_t seed,
                               const NuisanceOptions& options) {
  if (static_cast<Index>(plan.assignment.size()) != ds.rows())
    throw ConfigError("cross-fit plan covers " + std::to_string(plan.assignment.size()) + " rows, data has " +
                      std::to_string(ds.rows()));
  return fit_nuisances_by_fold(ds, roles, specs, spec, plan.assignment, plan.K, seed, options);
}

}  // namespace sdecomp
