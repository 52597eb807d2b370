#pragma once

#include <Eigen/Dense>

#include <array>
#include <cstdint>
#include <optional>
#include <string>

#include "sdecomp/dataset.hpp"
#include "sdecomp/model.hpp"

namespace sdecomp {

/// How one target factor is intervened on.
struct FactorIntervention {
  enum class Mode { equalize, set_value };
  Mode mode = Mode::equalize;
  int level = 1;                                 // set_value only
  std::optional<std::string> reference_level;    // equalize: defaults to the group's reference

  static FactorIntervention equalize() { return {}; }
  static FactorIntervention equalize_to(std::string level) { return {Mode::equalize, 1, std::move(level)}; }
  static FactorIntervention set_value(int level) { return {Mode::set_value, level, std::nullopt}; }
};

/// Whether intervened factors are summed out analytically or sampled.
struct Integration {
  enum class Kind { marginalize, draw };
  Kind kind = Kind::marginalize;
  int n_draws = 0;
  std::uint64_t seed = 0;

  static Integration marginalize() { return {}; }
  static Integration draw(int n, std::uint64_t seed) { return {Kind::draw, n, seed}; }
};

struct InterventionSpec {
  FactorIntervention A;
  FactorIntervention M;
  Integration integration;
  /// Evaluate the outcome model at drawn A (with observed Z) in the imputation chain and the
  /// second term of the triply-robust estimator, as the estimator is literally written.
  /// Default evaluates it at observed A and lets the A-weight perform the A intervention.
  bool literal_tilde_a = false;

  void validate() const;
};

/// Per-unit probability that each intervened factor equals 1.
struct InterventionFit {
  Eigen::VectorXd pstar_A;
  Eigen::VectorXd pstar_M;
  bool degenerate_A = false;
  bool degenerate_M = false;
};

/// Equalize: the factor is regressed on the allowable covariates among units of the
/// reference level, then evaluated for every unit. SetValue: a point mass.
InterventionFit fit_intervention_distributions(const Dataset& ds, const RoleMap& roles, const InterventionSpec& spec,
                                               ModelFamily fitter = ModelFamily::logistic_glm);

/// Per-unit average of v over a binary factor with P(level 1) = p1; sums analytically or
/// averages n_draws sampled levels, depending on the integration mode.
Eigen::VectorXd integrate_factor(const Eigen::VectorXd& p1, const Eigen::VectorXd& v0, const Eigen::VectorXd& v1,
                                 const Integration& integration, std::uint64_t stream);

/// Same over two independent binary factors; v[a][m] is the value at A = a, M = m.
Eigen::VectorXd integrate_two_factors(const Eigen::VectorXd& pA, const Eigen::VectorXd& pM,
                                      const std::array<std::array<Eigen::VectorXd, 2>, 2>& v,
                                      const Integration& integration, std::uint64_t stream);

}  // namespace sdecomp
