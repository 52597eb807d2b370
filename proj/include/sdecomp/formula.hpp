#pragma once

#include <Eigen/Dense>

#include <map>
#include <string>
#include <vector>

#include "sdecomp/dataset.hpp"

namespace sdecomp {

/// One right-hand-side term of a model formula.
struct Term {
  enum class Kind { intercept, raw, centered, interaction, factorial, transform };
  Kind kind = Kind::raw;
  std::vector<std::string> columns;
  std::string transform;  // only for Kind::transform

  static Term intercept() { return {Kind::intercept, {}, {}}; }
  static Term raw(std::string c) { return {Kind::raw, {std::move(c)}, {}}; }
  static Term centered(std::string c) { return {Kind::centered, {std::move(c)}, {}}; }
  static Term interaction(std::vector<std::string> cs);
  static Term factorial(std::vector<std::string> cs) { return {Kind::factorial, std::move(cs), {}}; }
  static Term apply(std::string fn, std::vector<std::string> cs);

  /// Parses "1", "C", "center(C)", "R:X3", "factorial(R,X,C)", "xm2(X1,X2)".
  static Term parse(const std::string& text);
  [[nodiscard]] std::string str() const;

  friend bool operator==(const Term&, const Term&) = default;
};

/// Ordered list of terms; expansion order follows term order.
struct FeatureFormula {
  std::vector<Term> terms;

  FeatureFormula() = default;
  FeatureFormula(std::initializer_list<Term> ts) : terms(ts) {}
  static FeatureFormula parse(const std::vector<std::string>& texts);

  [[nodiscard]] bool has_intercept() const;
  [[nodiscard]] FeatureFormula without_intercept() const;
  [[nodiscard]] std::vector<std::string> columns() const;  // every referenced column
  [[nodiscard]] std::vector<std::string> str() const;
};

/// Column names of an expanded design plus the centering constants used,
/// so that the same expansion can be replayed on other rows.
struct DesignInfo {
  std::vector<std::string> names;
  std::map<std::string, double> centers;
};

struct Design {
  Eigen::MatrixXd X;
  DesignInfo info;
};

/// Expands a formula. Centered terms use means of `ds`.
Design build_design(const Dataset& ds, const FeatureFormula& formula);
/// Expands with centering constants frozen from a previous expansion.
Eigen::MatrixXd build_design(const Dataset& ds, const FeatureFormula& formula, const DesignInfo& frozen);

/// Named elementwise transforms usable in formulas.
/// xm1(a) = exp(a)/2, xm2(a,b) = b/(1+exp(a)) + 10, xm3(a,b) = (a*b/25 + 0.6)^3,
/// exp(a), log(a) (a > 0), inv(a) (a != 0), square(a).
Eigen::VectorXd apply_transform(const std::string& name, const std::vector<const Eigen::VectorXd*>& args);

}  // namespace sdecomp
