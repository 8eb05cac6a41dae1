#pragma once

#include "sblab/stokes/sphere_quadrature.hpp"
#include "sblab/stokes/stokeslet.hpp"

namespace sblab {

/// Force exerted by the sphere of radius 1/n on the fluid: the traction
/// sigma . nu integrated over the sphere with nu the normal pointing into the
/// obstacle. For the Stokeslet this is 6 pi v / n, positive along v.
inline Vec3 drag_integral(const Vec3& v, double n, int quadrature_order = 26) {
  if (!(n > 0.0)) throw ParameterError("drag_integral: n must be positive");
  const SphereRule rule = sphere_rule(quadrature_order);
  const double radius = 1.0 / n;
  const double area = 4.0 * pi * radius * radius;
  Vec3 f{};
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const Vec3 x = radius * rule.nodes[q];
    f += (rule.weights[q] * area) * stokeslet_traction(v, x, n, -1.0 * rule.nodes[q]);
  }
  return f;
}

}  // namespace sblab
