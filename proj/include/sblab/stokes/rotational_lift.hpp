#pragma once

#include <cmath>

#include "sblab/core/errors.hpp"
#include "sblab/core/quadrature.hpp"
#include "sblab/core/smooth.hpp"
#include "sblab/stokes/sphere_quadrature.hpp"
#include "sblab/core/vec3.hpp"

namespace sblab {

/// Divergence-free extension of a constant velocity V: the curl of
/// (V x y) / 2 chi0(n |y|), y = x - center, where chi0 = 1 on [0, 1] and 0
/// beyond 1 + h0.
class RotationalLift {
 public:
  RotationalLift(const Vec3& v, const Vec3& center, double n, double h0) : v_(v), c_(center), n_(n), h0_(h0) {
    if (!(h0 > 0.0 && h0 < 0.5)) throw ParameterError("rotational_lift: h0 must lie in (0, 1/2)");
    if (!(n > 0.0)) throw ParameterError("rotational_lift: n must be positive");
  }

  double chi0(double s) const { return 1.0 - smooth_step((s - 1.0) / h0_); }
  double dchi0(double s) const { return -smooth_step_derivative((s - 1.0) / h0_) / h0_; }

  /// chi V + (n chi'(n r) r / 2) (V - (V.e) e), e = y / r.
  Vec3 operator()(const Vec3& x) const {
    const Vec3 y = x - c_;
    const double r = norm(y);
    const double s = n_ * r;
    if (s <= 1.0) return v_;
    if (s >= 1.0 + h0_) return Vec3{};
    const Vec3 e = (1.0 / r) * y;
    return chi0(s) * v_ + (0.5 * n_ * r * dchi0(s)) * (v_ - dot(v_, e) * e);
  }

  /// Central-difference divergence with step h.
  double divergence(const Vec3& x, double h) const {
    double d = 0.0;
    for (int k = 0; k < 3; ++k) {
      Vec3 p = x, m = x;
      p[k] += h;
      m[k] -= h;
      d += ((*this)(p)[k] - (*this)(m)[k]) / (2.0 * h);
    }
    return d;
  }

  /// Central-difference gradient, grad[i][k] = d w_i / d x_k.
  Mat3 gradient(const Vec3& x, double h) const {
    Mat3 g{};
    for (int k = 0; k < 3; ++k) {
      Vec3 p = x, m = x;
      p[k] += h;
      m[k] -= h;
      const Vec3 d = (1.0 / (2.0 * h)) * ((*this)(p) - (*this)(m));
      for (int i = 0; i < 3; ++i) g[i][k] = d[i];
    }
    return g;
  }

  double support_radius() const { return (1.0 + h0_) / n_; }
  const Vec3& center() const { return c_; }

 private:
  Vec3 v_, c_;
  double n_, h0_;
};

/// int |grad w|^2 for the lift with |V| = 1 and n = 1 (the integral scales as
/// |V|^2 / n), by Gauss quadrature over the transition shell.
inline double lift_energy_constant(double h0, int radial_order = 48, int angular_order = 10) {
  const RotationalLift w(e3, Vec3{}, 1.0, h0);
  const Rule1D gl = gauss_legendre_rule(radial_order);
  const SphereRule ang = product_gauss_rule(angular_order);
  double e = 0.0;
  for (int i = 0; i < radial_order; ++i) {
    const double r = 1.0 + 0.5 * h0 * (gl.nodes[i] + 1.0), wr = 0.5 * h0 * gl.weights[i];
    double s = 0.0;
    for (std::size_t q = 0; q < ang.size(); ++q) s += ang.weights[q] * frobenius2(w.gradient(r * ang.nodes[q], 1e-6));
    e += wr * 4.0 * pi * r * r * s;
  }
  return e;
}

inline RotationalLift rotational_lift(const Vec3& v, const Vec3& center, double n, double h0) {
  return RotationalLift(v, center, n, h0);
}

}  // namespace sblab
