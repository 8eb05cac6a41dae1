#pragma once

#include <cmath>
#include <vector>

#include "sblab/core/errors.hpp"
#include "sblab/core/vec3.hpp"

namespace sblab {

struct Rule1D {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// Gauss-Legendre nodes and weights on [-1, 1] (Newton on the Legendre recurrence).
inline Rule1D gauss_legendre_rule(int order) {
  if (order < 1) throw ParameterError("gauss_legendre_rule: order must be >= 1");
  Rule1D r;
  r.nodes.resize(order);
  r.weights.resize(order);
  const int m = (order + 1) / 2;
  for (int i = 1; i <= m; ++i) {
    double z = std::cos(pi * (i - 0.25) / (order + 0.5));
    double dp = 1.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (int j = 1; j <= order; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / j;
      }
      dp = order * (z * p1 - p2) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::fabs(dz) < 1e-16) break;
    }
    const double w = 2.0 / ((1.0 - z * z) * dp * dp);
    r.nodes[i - 1] = -z;
    r.weights[i - 1] = w;
    r.nodes[order - i] = z;
    r.weights[order - i] = w;
  }
  return r;
}

/// Integral of f over [a, b] with an order-point Gauss-Legendre rule.
template <typename Fn>
double integrate_gl(Fn&& f, double a, double b, int order = 64) {
  const Rule1D r = gauss_legendre_rule(order);
  const double xm = 0.5 * (a + b), xl = 0.5 * (b - a);
  double s = 0.0;
  for (int i = 0; i < order; ++i) s += r.weights[i] * f(xm + xl * r.nodes[i]);
  return s * xl;
}

}  // namespace sblab
