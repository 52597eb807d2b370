#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "sdecomp/errors.hpp"

namespace sdecomp {

/// Probabilities produced anywhere in the library lie in [kProbEps, 1 - kProbEps].
inline constexpr double kProbEps = 1e-6;
inline constexpr double kRidgeJitter = 1e-8;
inline constexpr double kIrlsTolerance = 1e-8;
inline constexpr int kIrlsMaxIter = 100;

template <typename Scalar>
Scalar clip_probability(Scalar p) {
  return std::clamp(p, Scalar(kProbEps), Scalar(1 - kProbEps));
}

template <typename Derived>
auto inverse_logit(const Eigen::MatrixBase<Derived>& eta) {
  using Scalar = typename Derived::Scalar;
  return eta.unaryExpr([](Scalar v) {
    if (v >= 0) return Scalar(1) / (Scalar(1) + std::exp(-v));
    const Scalar e = std::exp(v);
    return e / (Scalar(1) + e);
  });
}

template <typename Scalar>
struct GlmFit {
  Eigen::Matrix<Scalar, Eigen::Dynamic, 1> coef;
  int iterations = 0;
  Scalar deviance = 0;
  bool converged = true;
  bool jittered = false;    // normal system was singular, ridge added
  bool degenerate = false;  // response has a single level
};

namespace detail {

template <typename Scalar>
bool nearly_singular(const Eigen::LDLT<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>>& ldlt) {
  if (ldlt.info() != Eigen::Success) return true;
  const auto d = ldlt.vectorD();
  if (d.size() == 0) return false;
  const Scalar hi = d.cwiseAbs().maxCoeff();
  return !(d.minCoeff() > hi * Scalar(1e-12)) || !std::isfinite(hi);
}

/// Solves (A) x = b, adding the ridge jitter when A is numerically singular.
template <typename Scalar>
Eigen::Matrix<Scalar, Eigen::Dynamic, 1> solve_normal(Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic> A,
                                                      const Eigen::Matrix<Scalar, Eigen::Dynamic, 1>& b,
                                                      bool& jittered) {
  Eigen::LDLT<Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>> ldlt(A);
  if (nearly_singular(ldlt)) {
    jittered = true;
    A.diagonal().array() += Scalar(kRidgeJitter);
    ldlt.compute(A);
  }
  return ldlt.solve(b);
}

template <typename Derived>
typename Derived::Scalar bernoulli_deviance(const Eigen::MatrixBase<Derived>& eta,
                                            const Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1>& y) {
  using Scalar = typename Derived::Scalar;
  Scalar dev = 0;
  for (Eigen::Index i = 0; i < eta.size(); ++i) {
    const Scalar e = eta[i];
    // -log p = log1p(exp(-e)), -log(1-p) = log1p(exp(e)), evaluated stably
    const Scalar softplus_pos = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    dev += softplus_pos - y[i] * e;
  }
  return 2 * dev;
}

}  // namespace detail

/// Ordinary least squares through the normal equations.
template <typename DerivedX, typename DerivedY>
GlmFit<typename DerivedX::Scalar> fit_linear(const Eigen::MatrixBase<DerivedX>& X,
                                             const Eigen::MatrixBase<DerivedY>& y) {
  using Scalar = typename DerivedX::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (X.rows() == 0) throw EstimationError("fit_linear: zero rows");
  if (X.rows() != y.size()) throw EstimationError("fit_linear: row count mismatch");
  if (!X.allFinite() || !y.allFinite()) throw EstimationError("fit_linear: non-finite input");

  GlmFit<Scalar> fit;
  const Mat xtx = X.transpose() * X;
  const Vec xty = X.transpose() * y;
  fit.coef = detail::solve_normal<Scalar>(xtx, xty, fit.jittered);
  fit.deviance = (y - X * fit.coef).squaredNorm();
  fit.iterations = 1;
  return fit;
}

/// Logistic regression by iteratively reweighted least squares.
/// Stops when |dev - dev_old| / (|dev| + 0.1) < 1e-8 or after 100 iterations.
template <typename DerivedX, typename DerivedY>
GlmFit<typename DerivedX::Scalar> fit_logistic_irls(const Eigen::MatrixBase<DerivedX>& X,
                                                    const Eigen::MatrixBase<DerivedY>& y_in) {
  using Scalar = typename DerivedX::Scalar;
  using Mat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  using Vec = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
  if (X.rows() == 0) throw EstimationError("fit_logistic_irls: zero rows");
  if (X.rows() != y_in.size()) throw EstimationError("fit_logistic_irls: row count mismatch");
  if (!X.allFinite() || !y_in.allFinite()) throw EstimationError("fit_logistic_irls: non-finite input");
  const Vec y = y_in;
  for (Eigen::Index i = 0; i < y.size(); ++i)
    if (y[i] != 0 && y[i] != 1) throw DomainError("fit_logistic_irls: response must be 0/1");

  const Eigen::Index p = X.cols();
  GlmFit<Scalar> fit;
  fit.coef = Vec::Zero(p);

  const Scalar prevalence = y.mean();
  if (prevalence == 0 || prevalence == 1) {
    // Intercept column (all ones) carries the clipped prevalence; everything else is zero.
    fit.degenerate = true;
    const Scalar q = clip_probability(prevalence);
    for (Eigen::Index j = 0; j < p; ++j) {
      if ((X.col(j).array() == Scalar(1)).all()) {
        fit.coef[j] = std::log(q / (1 - q));
        break;
      }
    }
    fit.deviance = detail::bernoulli_deviance(X * fit.coef, y);
    return fit;
  }

  Vec eta = X * fit.coef;
  Scalar dev = detail::bernoulli_deviance(eta, y);
  fit.converged = false;
  for (int iter = 1; iter <= kIrlsMaxIter; ++iter) {
    const Vec mu = inverse_logit(eta);
    const Vec w = (mu.array() * (1 - mu.array())).max(Scalar(1e-12)).matrix();
    const Mat xtwx = X.transpose() * w.asDiagonal() * X;
    const Vec score = X.transpose() * (y - mu);
    const Vec step = detail::solve_normal<Scalar>(xtwx, score, fit.jittered);

    // Newton step with halving if the deviance does not improve.
    Scalar scale = 1;
    Vec coef_new = fit.coef + step;
    Vec eta_new = X * coef_new;
    Scalar dev_new = detail::bernoulli_deviance(eta_new, y);
    for (int h = 0; h < 30 && !(dev_new <= dev + Scalar(1e-12) * (std::abs(dev) + 1)); ++h) {
      scale /= 2;
      coef_new = fit.coef + scale * step;
      eta_new = X * coef_new;
      dev_new = detail::bernoulli_deviance(eta_new, y);
    }
    if (!std::isfinite(dev_new)) throw EstimationError("fit_logistic_irls: non-finite deviance");
    fit.coef = coef_new;
    eta = eta_new;
    const Scalar change = std::abs(dev_new - dev) / (std::abs(dev_new) + Scalar(0.1));
    dev = dev_new;
    fit.iterations = iter;
    if (change < Scalar(kIrlsTolerance)) {
      fit.converged = true;
      break;
    }
  }
  fit.deviance = dev;
  return fit;
}

}  // namespace sdecomp
