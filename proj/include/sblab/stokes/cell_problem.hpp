#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sblab/core/errors.hpp"
#include "sblab/core/random.hpp"
#include "sblab/stokes/sphere_quadrature.hpp"
#include "sblab/stokes/stokeslet.hpp"

namespace sblab {

// Point force (Oseen tensor, unit viscosity):
//   u = (f / r + (f.x) x / r^3) / (8 pi),  p = (f.x) / (4 pi r^3)

inline Vec3 oseen_velocity(const Vec3& f, const Vec3& x) {
  const double r2 = norm2(x), r = std::sqrt(r2);
  if (r2 == 0.0) throw SingularityError("oseen: evaluation at the source");
  return (1.0 / (8.0 * pi)) * ((1.0 / r) * f + (dot(f, x) / (r2 * r)) * x);
}

inline double oseen_pressure(const Vec3& f, const Vec3& x) {
  const double r = norm(x);
  if (r == 0.0) throw SingularityError("oseen: evaluation at the source");
  return dot(f, x) / (4.0 * pi * r * r * r);
}

inline Mat3 oseen_gradient(const Vec3& f, const Vec3& x) {
  const double r2 = norm2(x), r = std::sqrt(r2), r3 = r2 * r, r5 = r3 * r2;
  if (r2 == 0.0) throw SingularityError("oseen: evaluation at the source");
  const double fx = dot(f, x);
  Mat3 g{};
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      g[i][k] = (-f[i] * x[k] / r3 + (f[k] * x[i] + (i == k ? fx : 0.0)) / r3 - 3.0 * fx * x[i] * x[k] / r5) /
                (8.0 * pi);
  return g;
}

enum class WallProfile { constant, shear, zero };

inline WallProfile wall_profile_from_name(const std::string& s) {
  if (s == "constant") return WallProfile::constant;
  if (s == "shear") return WallProfile::shear;
  if (s == "zero") return WallProfile::zero;
  throw ConfigError("unknown w profile '" + s + "'");
}

enum class CellPlacement { lattice, random };

struct CellProblemOptions {
  CellPlacement placement = CellPlacement::lattice;
  int sphere_sources = 26;   // interior point forces per sphere (octahedral directions)
  int sphere_nodes = 8;      // polar Gauss order of the surface collocation rule
  int wall_sources = 8;      // per face edge, on a cube of twice the cell width
  int wall_nodes = 12;       // collocation points per face edge
  int energy_order = 24;     // Gauss points per face edge for the error integral
  double max_condition = 1e14;
};

struct CellProblemResult {
  double error = 0.0;      // ||grad (u - u_s)||_{L2(F)}
  double bound_rhs = 0.0;  // sqrt(M/n) (1/sqrt(n) + sqrt(M/(n d_m)))
  double fit_residual = 0.0;  // max boundary mismatch of u at check points
  double condition = 0.0;     // |R_00| / |R_kk| of the pivoted QR
  std::vector<Vec3> centres;
};

namespace detail {

inline Vec3 wall_profile(WallProfile w, const Vec3& x, double width) {
  switch (w) {
    case WallProfile::constant:
      return e1;
    case WallProfile::shear:
      return {x.y - 0.5 * width, 0.0, 0.0};
    case WallProfile::zero:
      return {};
  }
  return {};
}

inline std::vector<Vec3> place_cell_spheres(double width, std::size_t m, double d_m, CellPlacement how,
                                            std::uint64_t seed) {
  std::vector<Vec3> c;
  if (how == CellPlacement::lattice) {
    const std::size_t k = static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(m)) - 1e-12));
    const double span = (static_cast<double>(k) - 1.0) * d_m;
    const double lo = 0.5 * (width - span);
    for (std::size_t a = 0; a < k && c.size() < m; ++a)
      for (std::size_t b = 0; b < k && c.size() < m; ++b)
        for (std::size_t d = 0; d < k && c.size() < m; ++d) c.push_back({lo + d * d_m, lo + b * d_m, lo + a * d_m});
    // centre the used sites
    Vec3 mean{};
    for (const Vec3& x : c) mean += x;
    mean = (1.0 / static_cast<double>(c.size())) * mean;
    const Vec3 shift = Vec3{0.5 * width, 0.5 * width, 0.5 * width} - mean;
    for (Vec3& x : c) x += shift;
  } else {
    Engine g(seed);
    const Box inner{{d_m, d_m, d_m}, {width - d_m, width - d_m, width - d_m}};
    if (!(width > 2.0 * d_m)) throw GeometryError("cell problem: cell too narrow for the wall distance");
    for (int attempt = 0; attempt < 100000 && c.size() < m; ++attempt) {
      const Vec3 x = uniform_in_box(g, inner);
      bool ok = true;
      for (const Vec3& y : c) ok = ok && distance(x, y) >= d_m;
      if (ok) c.push_back(x);
    }
  }
  if (c.size() < m) throw GeometryError("cell problem: placement infeasible");
  for (std::size_t i = 0; i < c.size(); ++i) {
    const Vec3& x = c[i];
    const double wall = std::min({x.x, x.y, x.z, width - x.x, width - x.y, width - x.z});
    if (wall < d_m * (1.0 - 1e-12)) throw GeometryError("cell problem: placement infeasible (wall distance < d_m)");
    for (std::size_t j = 0; j < i; ++j)
      if (distance(x, c[j]) < d_m * (1.0 - 1e-12)) throw GeometryError("cell problem: placement infeasible");
  }
  return c;
}

/// Points and weights of an s x s Gauss grid on each face of (0, W)^3 with
/// the outward normal.
struct FaceNode {
  Vec3 x, normal;
  double w;
};

inline std::vector<FaceNode> cube_face_nodes(double width, int s, bool gauss) {
  std::vector<double> t(s), wt(s);
  if (gauss) {
    const Rule1D r = gauss_legendre_rule(s);
    for (int i = 0; i < s; ++i) {
      t[i] = 0.5 * width * (r.nodes[i] + 1.0);
      wt[i] = 0.5 * width * r.weights[i];
    }
  } else {
    for (int i = 0; i < s; ++i) {
      t[i] = width * (i + 0.5) / s;
      wt[i] = width / s;
    }
  }
  std::vector<FaceNode> out;
  for (int a = 0; a < 3; ++a)
    for (int side = 0; side < 2; ++side)
      for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j) {
          FaceNode f;
          f.x[a] = side ? width : 0.0;
          f.x[(a + 1) % 3] = t[i];
          f.x[(a + 2) % 3] = t[j];
          f.normal[a] = side ? 1.0 : -1.0;
          f.w = wt[i] * wt[j];
          out.push_back(f);
        }
  return out;
}

}  // namespace detail

/// Stokes flow in the cube T = (0, W)^3 with M spheres of radius 1/n: u = w on
/// the spheres, u = 0 on the walls. The flow is represented by point forces
/// inside each sphere (radius 1/(2n)) and outside the cell (on the faces of a
/// cube of side 2W), plus one G[c_i] per sphere, fitted in least squares.
/// The error of u_s = sum G[w(X_i)](. - X_i) is measured through the
/// boundary identity int_F |grad e|^2 = int_{dF} ((grad e) nu - p nu) . e
/// (nu the outward normal of F), exact because e is a Stokes flow in F.
inline CellProblemResult cell_problem_experiment(double cell_width, std::size_t m, double n, double d_m,
                                                 WallProfile w, std::uint64_t seed,
                                                 const CellProblemOptions& o = {}) {
  if (m == 0 || !(n > 0.0) || !(cell_width > 0.0)) throw ParameterError("cell problem: need M >= 1, n > 0, width > 0");
  if (!(d_m > 4.0 / n)) throw GeometryError("cell problem: separation must exceed 4/n");
  CellProblemResult res;
  res.centres = detail::place_cell_spheres(cell_width, m, d_m, o.placement, seed);
  res.bound_rhs = std::sqrt(m / n) * (1.0 / std::sqrt(n) + std::sqrt(m / (n * d_m)));
  const double a = 1.0 / n;
  const auto& X = res.centres;
  std::vector<Vec3> wx(m);
  for (std::size_t i = 0; i < m; ++i) wx[i] = detail::wall_profile(w, X[i], cell_width);
  bool zero = true;
  for (const Vec3& v : wx) zero = zero && v == Vec3{};
  if (zero && w == WallProfile::zero) return res;

  // sources
  struct Source {
    Vec3 x;
    int sphere;  // >= 0: G[c] at the centre of that sphere; -1: point force
  };
  std::vector<Source> src;
  const SphereRule dirs = sphere_rule(o.sphere_sources);
  for (std::size_t i = 0; i < m; ++i) {
    src.push_back({X[i], static_cast<int>(i)});
    for (const Vec3& e : dirs.nodes) src.push_back({X[i] + (0.5 * a) * e, -1});
  }
  const Vec3 mid{0.5 * cell_width, 0.5 * cell_width, 0.5 * cell_width};
  for (const auto& f : detail::cube_face_nodes(2.0 * cell_width, o.wall_sources, false))
    src.push_back({f.x + mid - Vec3{cell_width, cell_width, cell_width}, -1});

  auto velocity = [&](const Source& s, const Vec3& f, const Vec3& x) {
    return s.sphere >= 0 ? stokeslet_velocity(f, x - s.x, n) : oseen_velocity(f, x - s.x);
  };
  auto gradient = [&](const Source& s, const Vec3& f, const Vec3& x) {
    return s.sphere >= 0 ? stokeslet_gradient(f, x - s.x, n) : oseen_gradient(f, x - s.x);
  };
  auto pressure = [&](const Source& s, const Vec3& f, const Vec3& x) {
    return s.sphere >= 0 ? stokeslet_pressure(f, x - s.x, n) : oseen_pressure(f, x - s.x);
  };

  // collocation
  struct Row {
    Vec3 x, target;
  };
  std::vector<Row> rows;
  const SphereRule surf = product_gauss_rule(o.sphere_nodes);
  for (std::size_t i = 0; i < m; ++i)
    for (const Vec3& e : surf.nodes) {
      const Vec3 y = X[i] + a * e;
      rows.push_back({y, detail::wall_profile(w, y, cell_width)});
    }
  for (const auto& f : detail::cube_face_nodes(cell_width, o.wall_nodes, false)) rows.push_back({f.x, Vec3{}});

  const Eigen::Index ncols = 3 * static_cast<Eigen::Index>(src.size());
  const Eigen::Index nrows = 3 * static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd A(nrows, ncols);
  Eigen::VectorXd rhs(nrows);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (std::size_t s = 0; s < src.size(); ++s)
      for (int c = 0; c < 3; ++c) {
        Vec3 f{};
        f[c] = 1.0;
        const Vec3 u = velocity(src[s], f, rows[r].x);
        for (int k = 0; k < 3; ++k) A(3 * r + k, 3 * s + c) = u[k];
      }
    for (int k = 0; k < 3; ++k) rhs(3 * r + k) = rows[r].target[k];
  }
  Eigen::VectorXd scale = A.colwise().norm().transpose();
  for (Eigen::Index c = 0; c < ncols; ++c) A.col(c) /= scale(c);
  const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
  const Eigen::Index rank = std::min(nrows, ncols);
  const double r00 = std::abs(qr.matrixQR()(0, 0)), rkk = std::abs(qr.matrixQR()(rank - 1, rank - 1));
  res.condition = rkk > 0.0 ? r00 / rkk : std::numeric_limits<double>::infinity();
  if (!(res.condition <= o.max_condition))
    throw ConditioningError("cell problem: collocation matrix is ill-conditioned", res.condition);
  Eigen::VectorXd coef = qr.solve(rhs);
  for (Eigen::Index c = 0; c < ncols; ++c) coef(c) /= scale(c);
  std::vector<Vec3> f(src.size());
  for (std::size_t s = 0; s < src.size(); ++s) f[s] = {coef(3 * s), coef(3 * s + 1), coef(3 * s + 2)};

  struct State {
    Vec3 u;
    Mat3 g;
    double p;
  };
  auto fitted = [&](const Vec3& x) {
    State st{{}, {}, 0.0};
    for (std::size_t s = 0; s < src.size(); ++s) {
      st.u += velocity(src[s], f[s], x);
      st.g += gradient(src[s], f[s], x);
      st.p += pressure(src[s], f[s], x);
    }
    return st;
  };
  auto error_state = [&](const Vec3& x) {
    State st = fitted(x);
    for (std::size_t i = 0; i < m; ++i) {
      st.u -= stokeslet_velocity(wx[i], x - X[i], n);
      const Mat3 g = stokeslet_gradient(wx[i], x - X[i], n);
      for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) st.g[r][c] -= g[r][c];
      st.p -= stokeslet_pressure(wx[i], x - X[i], n);
    }
    return st;
  };
  auto flux = [](const State& st, const Vec3& nu) {
    Vec3 t{};
    for (int r = 0; r < 3; ++r) t[r] = st.g[r][0] * nu.x + st.g[r][1] * nu.y + st.g[r][2] * nu.z - st.p * nu[r];
    return dot(t, st.u);
  };

  // fit residual at points off the collocation grid
  const SphereRule check = lebedev50();
  for (std::size_t i = 0; i < m; ++i)
    for (const Vec3& e : check.nodes) {
      const Vec3 y = X[i] + a * e;
      res.fit_residual = std::max(res.fit_residual, norm(fitted(y).u - detail::wall_profile(w, y, cell_width)));
    }
  for (const auto& fn : detail::cube_face_nodes(cell_width, o.wall_nodes + 3, true))
    res.fit_residual = std::max(res.fit_residual, norm(fitted(fn.x).u));

  double energy = 0.0;
  for (const auto& fn : detail::cube_face_nodes(cell_width, o.energy_order, true))
    energy += fn.w * flux(error_state(fn.x), fn.normal);
  const SphereRule quad = product_gauss_rule(o.sphere_nodes + 4);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t q = 0; q < quad.size(); ++q) {
      const Vec3 y = X[i] + a * quad.nodes[q];
      energy += 4.0 * pi * a * a * quad.weights[q] * flux(error_state(y), -1.0 * quad.nodes[q]);
    }
  res.error = std::sqrt(std::max(0.0, energy));
  return res;
}

}  // namespace sblab
