#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>

#include "sdecomp/dataset.hpp"
#include "sdecomp/formula.hpp"
#include "sdecomp/gbt.hpp"
#include "sdecomp/glm.hpp"

namespace sdecomp {

enum class ModelFamily { linear_glm, logistic_glm, gbt_regression, gbt_binary };

const char* to_string(ModelFamily f);
ModelFamily parse_family(const std::string& s);
bool is_gbt(ModelFamily f);
bool is_classifier(ModelFamily f);

/// What to fit: a family, the right-hand side, and boosting parameters for gbt families.
struct ModelSpec {
  ModelFamily family = ModelFamily::linear_glm;
  FeatureFormula formula;
  std::optional<GbtParams> gbt;

  void validate() const;
  static ModelSpec glm(ModelFamily family, FeatureFormula f) { return {family, std::move(f), std::nullopt}; }
  static ModelSpec boosted(ModelFamily family, FeatureFormula f, GbtParams p = {}) {
    return {family, std::move(f), p};
  }
};

struct FitDiagnostics {
  int iterations = 0;
  double final_loss = 0.0;  // deviance / RSS for GLMs, mean training loss for GBT
  bool converged = true;
  bool jittered = false;
  bool degenerate = false;
};

/// A fitted model. Immutable; `predict` is a pure function of the model and its input.
struct FittedModel {
  ModelFamily family = ModelFamily::linear_glm;
  FeatureFormula formula;
  DesignInfo design;
  Eigen::VectorXd coefficients;  // GLM families
  GbtEnsemble ensemble;          // GBT families
  FitDiagnostics diagnostics;
};

FittedModel fit_linear_model(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);
FittedModel fit_logistic_model(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);
FittedModel fit_gbt_model(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ModelSpec& spec, std::uint64_t seed);

/// Response-scale predictions; classifiers clipped to [1e-6, 1 - 1e-6].
Eigen::VectorXd predict(const FittedModel& model, const Eigen::MatrixXd& X);

/// Expands the spec's formula on `ds` and fits to `target`.
FittedModel fit_model(const ModelSpec& spec, const Dataset& ds, const Eigen::VectorXd& target, std::uint64_t seed);
/// Replays the training expansion on `ds` and predicts.
Eigen::VectorXd predict(const FittedModel& model, const Dataset& ds);

}  // namespace sdecomp
