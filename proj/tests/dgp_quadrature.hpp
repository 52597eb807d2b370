#pragma once

// Deterministic truth for the simulation DGP by tensor Gauss-Hermite quadrature over
// (X1, X2, X3, Z noise). Outcome noise has mean zero and drops out.

#include <Eigen/Dense>

#include <cmath>
#include <vector>

namespace quad {

inline double expit(double v) { return 1 / (1 + std::exp(-v)); }

struct Rule {
  std::vector<double> x, w;
};

/// Nodes and weights for E[f(N(0,1))] via Golub-Welsch on the probabilists' Hermite recurrence.
inline Rule hermite(int n) {
  Eigen::MatrixXd J = Eigen::MatrixXd::Zero(n, n);
  for (int k = 1; k < n; ++k) J(k, k - 1) = J(k - 1, k) = std::sqrt(static_cast<double>(k));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(J);
  Rule r;
  for (int i = 0; i < n; ++i) {
    r.x.push_back(es.eigenvalues()[i]);
    r.w.push_back(es.eigenvectors()(0, i) * es.eigenvectors()(0, i));
  }
  return r;
}

struct Truth {
  double mean_y1 = 0;  // E[Y | R = 1]
  double psi = 0;      // E[Y(A*, M*) | R = 1]
  double delta = 0;
  double tau = 0;      // limit of the R coefficient in Y ~ R + C
  double pA[2][2]{};   // P(A = 1 | R = r, C = c)
  double pM[2][2]{};
};

/// With `by_c` the intervention laws are the reference group's within C strata,
/// otherwise pooled over C.
inline Truth dgp_truth(bool by_c, int nodes = 24) {
  const Rule g = hermite(nodes);
  const double pc1 = 0.4;
  auto pr1 = [](int c) { return expit(0.5 - 0.5 * c); };

  auto lin_a = [](int r, int c, double x1, double x2, double x3) {
    return -0.8 + r + 1.5 * c + x1 + 0.2 * x2 - 0.5 * x3 + r * x3;
  };
  auto z_of = [](int r, int c, double x1, double x2, double x3, int a, double e) {
    return -0.5 + 0.2 * r + 0.5 * c - 0.5 * x1 + 0.7 * x2 + 0.5 * x3 + 1.2 * a + e;
  };
  auto lin_m = [](int r, int c, double x1, double x2, double x3, int a, double z) {
    return -1 + 2 * r + 0.2 * a + c - x1 - 0.2 * x2 + 1.5 * x3 + r * x2 + 0.5 * z;
  };
  auto y_of = [](int r, int c, double x1, double x2, double x3, int a, double z, int m) {
    return 1 - 0.5 * r + 0.7 * m - 0.2 * r * m + 0.5 * r * m * a + a + c - x1 + 0.5 * x2 - 0.5 * x3 - 0.5 * z;
  };

  // natural laws and conditional means per (r, c)
  Truth t;
  double ey[2][2]{};
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) {
      double sa = 0, sm = 0, sy = 0;
      for (int i = 0; i < nodes; ++i)
        for (int j = 0; j < nodes; ++j)
          for (int k = 0; k < nodes; ++k)
            for (int l = 0; l < nodes; ++l) {
              const double w = g.w[i] * g.w[j] * g.w[k] * g.w[l];
              const double x1 = g.x[i], x2 = g.x[j], x3 = g.x[k], e = g.x[l];
              const double pa = expit(lin_a(r, c, x1, x2, x3));
              sa += w * pa;
              for (int a = 0; a < 2; ++a) {
                const double wa = w * (a ? pa : 1 - pa);
                const double z = z_of(r, c, x1, x2, x3, a, e);
                const double pm = expit(lin_m(r, c, x1, x2, x3, a, z));
                sm += wa * pm;
                sy += wa * (pm * y_of(r, c, x1, x2, x3, a, z, 1) + (1 - pm) * y_of(r, c, x1, x2, x3, a, z, 0));
              }
            }
      t.pA[r][c] = sa;
      t.pM[r][c] = sm;
      ey[r][c] = sy;
    }

  // reference laws used by the intervention
  double qa[2], qm[2];
  for (int c = 0; c < 2; ++c) {
    if (by_c) {
      qa[c] = t.pA[0][c];
      qm[c] = t.pM[0][c];
    } else {
      const double w1 = pc1 * (1 - pr1(1)), w0 = (1 - pc1) * (1 - pr1(0));
      qa[c] = (w1 * t.pA[0][1] + w0 * t.pA[0][0]) / (w0 + w1);
      qm[c] = (w1 * t.pM[0][1] + w0 * t.pM[0][0]) / (w0 + w1);
    }
  }

  double psi_c[2]{};
  for (int c = 0; c < 2; ++c) {
    double s = 0;
    for (int i = 0; i < nodes; ++i)
      for (int j = 0; j < nodes; ++j)
        for (int k = 0; k < nodes; ++k)
          for (int l = 0; l < nodes; ++l) {
            const double w = g.w[i] * g.w[j] * g.w[k] * g.w[l];
            for (int a = 0; a < 2; ++a) {
              const double z = z_of(1, c, g.x[i], g.x[j], g.x[k], a, g.x[l]);
              for (int m = 0; m < 2; ++m)
                s += w * (a ? qa[c] : 1 - qa[c]) * (m ? qm[c] : 1 - qm[c]) *
                     y_of(1, c, g.x[i], g.x[j], g.x[k], a, z, m);
            }
          }
    psi_c[c] = s;
  }

  const double q1 = pc1 * pr1(1), q0 = (1 - pc1) * pr1(0);
  const double w1 = q1 / (q0 + q1), w0 = q0 / (q0 + q1);
  t.mean_y1 = w0 * ey[1][0] + w1 * ey[1][1];
  t.psi = w0 * psi_c[0] + w1 * psi_c[1];
  t.delta = t.mean_y1 - t.psi;

  double num = 0, den = 0;
  for (int c = 0; c < 2; ++c) {
    const double p = pr1(c);
    const double w = (c ? pc1 : 1 - pc1) * p * (1 - p);
    num += w * (ey[1][c] - ey[0][c]);
    den += w;
  }
  t.tau = num / den;
  return t;
}

}  // namespace quad
