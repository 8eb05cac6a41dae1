#pragma once

#include <cmath>

#include "sblab/core/errors.hpp"
#include "sblab/core/vec3.hpp"

namespace sblab {

// Exterior Stokes solution around the sphere of radius 1/n centred at 0 with
// constant boundary velocity v (unit viscosity):
//   G[v](x) = alpha(r) v + beta(r) (v.x) x
//   alpha = (1/(4n)) (3/r + 1/(n^2 r^3)),  beta = (3/(4n)) (1/r^3 - 1/(n^2 r^5))
//   P[v](x) = (3/(2n)) v.x / r^3

namespace detail {

inline void require_nonzero(const Vec3& x) {
  if (x == Vec3{}) throw SingularityError("stokeslet: evaluation at the sphere centre");
}

struct StokesletCoefficients {
  double alpha, beta, dalpha, dbeta;  // and radial derivatives
};

inline StokesletCoefficients stokeslet_coefficients(double r, double n) {
  const double r2 = r * r, r3 = r2 * r;
  const double a2 = 1.0 / (n * n);
  StokesletCoefficients c;
  c.alpha = (3.0 / r + a2 / r3) / (4.0 * n);
  c.beta = 3.0 * (1.0 / r3 - a2 / (r3 * r2)) / (4.0 * n);
  c.dalpha = (-3.0 / r2 - 3.0 * a2 / (r2 * r2)) / (4.0 * n);
  c.dbeta = 3.0 * (-3.0 / (r2 * r2) + 5.0 * a2 / (r3 * r3)) / (4.0 * n);
  return c;
}

}  // namespace detail

inline Vec3 stokeslet_velocity(const Vec3& v, const Vec3& x, double n) {
  detail::require_nonzero(x);
  const double r = norm(x);
  const auto c = detail::stokeslet_coefficients(r, n);
  return c.alpha * v + (c.beta * dot(v, x)) * x;
}

inline double stokeslet_pressure(const Vec3& v, const Vec3& x, double n) {
  detail::require_nonzero(x);
  const double r = norm(x);
  return 1.5 / n * dot(v, x) / (r * r * r);
}

/// grad[i][k] = d G_i / d x_k.
inline Mat3 stokeslet_gradient(const Vec3& v, const Vec3& x, double n) {
  detail::require_nonzero(x);
  const double r = norm(x);
  const auto c = detail::stokeslet_coefficients(r, n);
  const double vx = dot(v, x);
  Mat3 g{};
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      g[i][k] = c.dalpha * x[k] / r * v[i] + c.dbeta * x[k] / r * vx * x[i] + c.beta * (v[k] * x[i] + (i == k ? vx : 0.0));
  return g;
}

/// Traction sigma . normal with sigma = -p I + grad u + grad u^T.
inline Vec3 stokeslet_traction(const Vec3& v, const Vec3& x, double n, const Vec3& normal) {
  const Mat3 g = stokeslet_gradient(v, x, n);
  const double p = stokeslet_pressure(v, x, n);
  Vec3 t{};
  for (int i = 0; i < 3; ++i) {
    double s = -p * normal[i];
    for (int k = 0; k < 3; ++k) s += (g[i][k] + g[k][i]) * normal[k];
    t[i] = s;
  }
  return t;
}

}  // namespace sblab
