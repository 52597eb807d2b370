#include "sdecomp/model.hpp"

namespace sdecomp {

const char* to_string(ModelFamily f) {
  switch (f) {
    case ModelFamily::linear_glm: return "linear_glm";
    case ModelFamily::logistic_glm: return "logistic_glm";
    case ModelFamily::gbt_regression: return "gbt_regression";
    case ModelFamily::gbt_binary: return "gbt_binary";
  }
  return "?";
}

ModelFamily parse_family(const std::string& s) {
  if (s == "linear_glm") return ModelFamily::linear_glm;
  if (s == "logistic_glm") return ModelFamily::logistic_glm;
  if (s == "gbt_regression") return ModelFamily::gbt_regression;
  if (s == "gbt_binary") return ModelFamily::gbt_binary;
  throw ConfigError("unknown model family '" + s + "'");
}

bool is_gbt(ModelFamily f) { return f == ModelFamily::gbt_regression || f == ModelFamily::gbt_binary; }
bool is_classifier(ModelFamily f) { return f == ModelFamily::logistic_glm || f == ModelFamily::gbt_binary; }

void ModelSpec::validate() const {
  if (is_gbt(family) != gbt.has_value())
    throw ConfigError(std::string("gbt parameters must be given exactly for gbt families (family ") +
                      to_string(family) + ")");
  if (gbt) gbt->validate();
  if (formula.terms.empty()) throw ConfigError("model formula is empty");
}

FittedModel fit_linear_model(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const auto fit = sdecomp::fit_linear(X, y);
  FittedModel m;
  m.family = ModelFamily::linear_glm;
  m.coefficients = fit.coef;
  m.diagnostics = {fit.iterations, fit.deviance, fit.converged, fit.jittered, fit.degenerate};
  return m;
}

FittedModel fit_logistic_model(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  const auto fit = sdecomp::fit_logistic_irls(X, y);
  FittedModel m;
  m.family = ModelFamily::logistic_glm;
  m.coefficients = fit.coef;
  m.diagnostics = {fit.iterations, fit.deviance, fit.converged, fit.jittered, fit.degenerate};
  return m;
}

FittedModel fit_gbt_model(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const ModelSpec& spec, std::uint64_t seed) {
  if (!is_gbt(spec.family)) throw ConfigError("fit_gbt_model needs a gbt family");
  FittedModel m;
  m.family = spec.family;
  const GbtLoss loss = spec.family == ModelFamily::gbt_binary ? GbtLoss::logistic : GbtLoss::squared;
  m.ensemble = sdecomp::fit_gbt(X, y, loss, spec.gbt.value_or(GbtParams{}), seed);
  m.diagnostics.iterations = static_cast<int>(m.ensemble.trees.size());
  m.diagnostics.final_loss = m.ensemble.loss_trace.back();
  if (loss == GbtLoss::logistic) {
    const double prev = y.mean();
    m.diagnostics.degenerate = prev == 0.0 || prev == 1.0;
  }
  return m;
}

Eigen::VectorXd predict(const FittedModel& model, const Eigen::MatrixXd& X) {
  if (is_gbt(model.family)) {
    return model.ensemble.predict(X);
  }
  if (X.cols() != model.coefficients.size())
    throw SchemaError("predict: design has " + std::to_string(X.cols()) + " columns, model has " +
                      std::to_string(model.coefficients.size()));
  Eigen::VectorXd eta = X * model.coefficients;
  if (model.family == ModelFamily::linear_glm) return eta;
  return inverse_logit(eta).unaryExpr([](double p) { return clip_probability(p); });
}

FittedModel fit_model(const ModelSpec& spec, const Dataset& ds, const Eigen::VectorXd& target, std::uint64_t seed) {
  spec.validate();
  const FeatureFormula formula = is_gbt(spec.family) ? spec.formula.without_intercept() : spec.formula;
  Design d = build_design(ds, formula);
  FittedModel m;
  switch (spec.family) {
    case ModelFamily::linear_glm: m = fit_linear_model(d.X, target); break;
    case ModelFamily::logistic_glm: m = fit_logistic_model(d.X, target); break;
    case ModelFamily::gbt_regression:
    case ModelFamily::gbt_binary: m = fit_gbt_model(d.X, target, spec, seed); break;
  }
  m.formula = formula;
  m.design = std::move(d.info);
  return m;
}

Eigen::VectorXd predict(const FittedModel& model, const Dataset& ds) {
  return predict(model, build_design(ds, model.formula, model.design));
}

}  // namespace sdecomp
