#pragma once

#include <cmath>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sblab/core/errors.hpp"
#include "sblab/core/quadrature.hpp"
#include "sblab/core/vec3.hpp"

namespace sblab {

/// Rule on the unit sphere; weights sum to 1 (multiply by 4 pi r^2 for an
/// integral over the sphere of radius r).
struct SphereRule {
  std::vector<Vec3> nodes;
  std::vector<double> weights;
  int degree = 0;  // exact for spherical polynomials up to this degree

  std::size_t size() const { return nodes.size(); }
};

namespace detail {

inline void add_octahedron(SphereRule& r, double w) {
  for (int a = 0; a < 3; ++a)
    for (double s : {1.0, -1.0}) {
      Vec3 p{};
      p[a] = s;
      r.nodes.push_back(p);
      r.weights.push_back(w);
    }
}

inline void add_edge_midpoints(SphereRule& r, double w) {
  const double c = 1.0 / std::sqrt(2.0);
  for (int a = 0; a < 3; ++a)
    for (double s : {1.0, -1.0})
      for (double t : {1.0, -1.0}) {
        Vec3 p{};
        p[(a + 1) % 3] = s * c;
        p[(a + 2) % 3] = t * c;
        r.nodes.push_back(p);
        r.weights.push_back(w);
      }
}

inline void add_cube_vertices(SphereRule& r, double w) {
  const double c = 1.0 / std::sqrt(3.0);
  for (double s : {1.0, -1.0})
    for (double t : {1.0, -1.0})
      for (double u : {1.0, -1.0}) {
        r.nodes.push_back({s * c, t * c, u * c});
        r.weights.push_back(w);
      }
}

/// The 24 points (+-l, +-l, +-m) and permutations.
inline void add_llm(SphereRule& r, double l, double m, double w) {
  for (int a = 0; a < 3; ++a)
    for (double s : {1.0, -1.0})
      for (double t : {1.0, -1.0})
        for (double u : {1.0, -1.0}) {
          Vec3 p{};
          p[a] = u * m;
          p[(a + 1) % 3] = s * l;
          p[(a + 2) % 3] = t * l;
          r.nodes.push_back(p);
          r.weights.push_back(w);
        }
}

}  // namespace detail

/// 26-point octahedral rule, degree 7.
inline SphereRule lebedev26() {
  SphereRule r;
  r.degree = 7;
  detail::add_octahedron(r, 1.0 / 21.0);
  detail::add_edge_midpoints(r, 4.0 / 105.0);
  detail::add_cube_vertices(r, 9.0 / 280.0);
  return r;
}

/// 50-point octahedral rule, degree 11.
inline SphereRule lebedev50() {
  SphereRule r;
  r.degree = 11;
  detail::add_octahedron(r, 4.0 / 315.0);
  detail::add_edge_midpoints(r, 64.0 / 2835.0);
  detail::add_cube_vertices(r, 27.0 / 1280.0);
  detail::add_llm(r, 1.0 / std::sqrt(11.0), 3.0 / std::sqrt(11.0), 14641.0 / 725760.0);
  return r;
}

/// Gauss-Legendre in cos(theta) times the trapezoid rule in phi; exact to
/// degree 2 order - 1.
inline SphereRule product_gauss_rule(int order) {
  if (order < 1) throw ParameterError("product_gauss_rule: order must be >= 1");
  const Rule1D gl = gauss_legendre_rule(order);
  const int nphi = 2 * order;
  SphereRule r;
  r.degree = 2 * order - 1;
  for (int i = 0; i < order; ++i) {
    const double ct = gl.nodes[i], st = std::sqrt(std::max(0.0, 1.0 - ct * ct));
    for (int k = 0; k < nphi; ++k) {
      const double phi = 2.0 * pi * (k + 0.5) / nphi;
      r.nodes.push_back({st * std::cos(phi), st * std::sin(phi), ct});
      r.weights.push_back(gl.weights[i] / (2.0 * nphi));
    }
  }
  return r;
}

/// 26 or 50 select the octahedral tables; anything else a product rule with
/// ceil(sqrt(order / 2)) polar nodes.
inline SphereRule sphere_rule(int order) {
  if (order == 26) return lebedev26();
  if (order == 50) return lebedev50();
  if (order < 2) throw ParameterError("sphere_rule: order must be >= 2");
  return product_gauss_rule(static_cast<int>(std::ceil(std::sqrt(order / 2.0))));
}

/// Reads a node table "x y z w" per line ('#' comments allowed).
inline SphereRule read_sphere_rule(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  SphereRule r;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream is(line);
    Vec3 p;
    double w;
    if (!(is >> p.x >> p.y >> p.z >> w)) throw ConfigError("malformed quadrature line in " + path);
    r.nodes.push_back(p);
    r.weights.push_back(w);
  }
  return r;
}

}  // namespace sblab
