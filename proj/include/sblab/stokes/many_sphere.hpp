#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sblab/core/errors.hpp"
#include "sblab/core/parallel.hpp"
#include "sblab/core/random.hpp"
#include "sblab/core/statistics.hpp"
#include "sblab/geometry/cell_list.hpp"
#include "sblab/geometry/config_io.hpp"
#include "sblab/geometry/configuration.hpp"
#include "sblab/stokes/sphere_quadrature.hpp"
#include "sblab/stokes/stokeslet.hpp"
#include "sblab/stokes/superposition.hpp"

namespace sblab {

// The velocity field around n rigid spheres is represented as
//   u(x) = sum_j G[b_j](x - X_j)
// with one strength b_j per sphere. The schemes differ in how b is fixed:
//   cg           (I + K) b = V at the centres, K_ij = G(X_i - X_j), solved by
//                conjugate gradients (K is symmetric);
//   reflections  the Jacobi sweep b <- V - K b;
//   collocation  least squares of u = V_i at surface nodes (CGLS).

enum class SolverScheme { cg, reflections, collocation };

inline std::string scheme_name(SolverScheme s) {
  switch (s) {
    case SolverScheme::cg:
      return "cg";
    case SolverScheme::reflections:
      return "reflections";
    case SolverScheme::collocation:
      return "collocation";
  }
  return "cg";
}

inline SolverScheme scheme_from_name(const std::string& s) {
  if (s == "cg") return SolverScheme::cg;
  if (s == "reflections") return SolverScheme::reflections;
  if (s == "collocation") return SolverScheme::collocation;
  throw ConfigError("unknown solver scheme '" + s + "'");
}

struct SolveOptions {
  double tol = 1e-10;
  int max_iter = 200;
  SolverScheme scheme = SolverScheme::cg;
  unsigned threads = 1;
  int residual_order = 26;     // surface nodes per sphere for the measured residual
  int collocation_order = 26;  // surface nodes per sphere for the collocation scheme
};

struct StokesSolution {
  ParticleConfiguration configuration;
  std::vector<Vec3> strengths;
  int iterations = 0;
  double residual = 0.0;              // measured sup |u - V_i| over surface nodes
  double collocation_residual = 0.0;  // max_i |V_i - b_i - sum_{j != i} G[b_j](X_i - X_j)|
  SolverScheme scheme = SolverScheme::cg;
  std::vector<double> history;        // per-iteration update or residual norm

  double n() const { return static_cast<double>(configuration.n()); }
};

namespace detail {

/// y_i = sum_{j != i} G[b_j](X_i - X_j), parallel over i.
inline std::vector<Vec3> interaction(const std::vector<Vec3>& x, const std::vector<Vec3>& b, double n,
                                     unsigned threads) {
  std::vector<Vec3> y(x.size());
  parallel_for(x.size(), threads, [&](std::size_t i) {
    Vec3 s{};
    for (std::size_t j = 0; j < x.size(); ++j)
      if (j != i) s += stokeslet_unchecked(b[j], x[i] - x[j], n);
    y[i] = s;
  });
  return y;
}

inline double max_norm(const std::vector<Vec3>& a) {
  double m = 0.0;
  for (const Vec3& v : a) m = std::max(m, norm(v));
  return m;
}

inline double dot_all(const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += dot(a[i], b[i]);
  return s;
}

inline std::vector<Vec3> centre_mismatch(const ParticleConfiguration& c, const std::vector<Vec3>& b, unsigned threads) {
  const auto k = interaction(c.positions, b, c.n(), threads);
  std::vector<Vec3> r(b.size());
  for (std::size_t i = 0; i < b.size(); ++i) r[i] = c.velocities[i] - b[i] - k[i];
  return r;
}

inline void solve_cg(const ParticleConfiguration& c, const SolveOptions& o, StokesSolution& s) {
  const double n = c.n();
  const double scale = std::max(1.0, max_norm(c.velocities));
  std::vector<Vec3>& b = s.strengths;
  b = c.velocities;
  std::vector<Vec3> r = centre_mismatch(c, b, o.threads);
  std::vector<Vec3> p = r;
  double rr = dot_all(r, r);
  for (int it = 0;; ++it) {
    const double rmax = max_norm(r);
    s.history.push_back(rmax);
    s.iterations = it;
    if (rmax <= o.tol * scale) return;
    if (it >= o.max_iter)
      throw NonConvergenceError("solve: conjugate gradients hit max_iter", s.history, min_pair_distance(c));
    const auto kp = interaction(c.positions, p, n, o.threads);
    std::vector<Vec3> ap(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) ap[i] = p[i] + kp[i];
    const double pap = dot_all(p, ap);
    if (!(pap > 0.0))
      throw NonConvergenceError("solve: interaction matrix is not positive definite", s.history, min_pair_distance(c));
    const double a = rr / pap;
    for (std::size_t i = 0; i < b.size(); ++i) {
      b[i] += a * p[i];
      r[i] -= a * ap[i];
    }
    const double rr_new = dot_all(r, r);
    const double beta = rr_new / rr;
    rr = rr_new;
    for (std::size_t i = 0; i < p.size(); ++i) p[i] = r[i] + beta * p[i];
  }
}

inline void solve_reflections(const ParticleConfiguration& c, const SolveOptions& o, StokesSolution& s) {
  const double n = c.n();
  std::vector<Vec3>& b = s.strengths;
  b = c.velocities;
  int growth = 0;
  for (int it = 1; it <= o.max_iter; ++it) {
    const auto k = interaction(c.positions, b, n, o.threads);
    double update = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
      const Vec3 nb = c.velocities[i] - k[i];
      update = std::max(update, norm(nb - b[i]));
      b[i] = nb;
    }
    s.iterations = it;
    growth = (!s.history.empty() && update > s.history.back()) ? growth + 1 : 0;
    s.history.push_back(update);
    if (!std::isfinite(update) || growth >= 5)
      throw NonConvergenceError("solve: reflections diverge", s.history, min_pair_distance(c));
    if (update < o.tol) return;
  }
  throw NonConvergenceError("solve: reflections hit max_iter", s.history, min_pair_distance(c));
}

/// CGLS on the surface collocation system.
inline void solve_collocation(const ParticleConfiguration& c, const SolveOptions& o, StokesSolution& s) {
  const double n = c.n();
  const SphereRule rule = sphere_rule(o.collocation_order);
  const std::size_t q = rule.size(), m = c.n();
  std::vector<Vec3> nodes(m * q), rhs(m * q);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t k = 0; k < q; ++k) {
      nodes[i * q + k] = c.positions[i] + (1.0 / n) * rule.nodes[k];
      rhs[i * q + k] = c.velocities[i];
    }
  auto apply = [&](const std::vector<Vec3>& b) {
    return superposition_field(c.positions, b, n, nodes, o.threads);
  };
  auto apply_t = [&](const std::vector<Vec3>& r) {
    // G(x) is symmetric and even, so the adjoint is a superposition from the nodes
    return superposition_field(nodes, r, n, c.positions, o.threads);
  };
  std::vector<Vec3>& b = s.strengths;
  b = c.velocities;
  const auto ab = apply(b);
  std::vector<Vec3> r(m * q);
  for (std::size_t k = 0; k < r.size(); ++k) r[k] = rhs[k] - ab[k];
  std::vector<Vec3> g = apply_t(r), p = g;
  const double g0 = std::max(std::sqrt(dot_all(apply_t(rhs), apply_t(rhs))), 1e-300);
  double gg = dot_all(g, g);
  for (int it = 0;; ++it) {
    const double rel = std::sqrt(gg) / g0;
    s.history.push_back(rel);
    s.iterations = it;
    if (rel <= o.tol || gg == 0.0) return;
    if (it >= o.max_iter)
      throw NonConvergenceError("solve: collocation least squares hit max_iter", s.history, min_pair_distance(c));
    const auto ap = apply(p);
    const double a = gg / dot_all(ap, ap);
    for (std::size_t i = 0; i < m; ++i) b[i] += a * p[i];
    for (std::size_t k = 0; k < r.size(); ++k) r[k] -= a * ap[k];
    g = apply_t(r);
    const double gg_new = dot_all(g, g);
    const double beta = gg_new / gg;
    gg = gg_new;
    for (std::size_t i = 0; i < m; ++i) p[i] = g[i] + beta * p[i];
  }
}

}  // namespace detail

/// sup over surface nodes of all spheres of |u(x) - V_i|.
inline double boundary_residual(const StokesSolution& sol, int order = 26, unsigned threads = 1) {
  const auto& c = sol.configuration;
  if (c.n() == 0) return 0.0;
  const double n = sol.n();
  const SphereRule rule = sphere_rule(order);
  std::vector<double> worst(c.n(), 0.0);
  parallel_for(c.n(), threads, [&](std::size_t i) {
    for (const Vec3& e : rule.nodes) {
      const Vec3 y = c.positions[i] + (1.0 / n) * e;
      Vec3 u{};
      for (std::size_t j = 0; j < c.n(); ++j) u += detail::stokeslet_unchecked(sol.strengths[j], y - c.positions[j], n);
      worst[i] = std::max(worst[i], norm(u - c.velocities[i]));
    }
  });
  return *std::max_element(worst.begin(), worst.end());
}

inline StokesSolution solve(const ParticleConfiguration& config, const SolveOptions& opt = {}) {
  if (!(opt.tol > 0.0)) throw ParameterError("solve: tol must be positive");
  if (opt.max_iter < 0) throw ParameterError("solve: max_iter must be >= 0");
  require_valid(config);
  StokesSolution s;
  s.configuration = config;
  s.scheme = opt.scheme;
  if (config.n() == 0) return s;
  switch (opt.scheme) {
    case SolverScheme::cg:
      detail::solve_cg(config, opt, s);
      break;
    case SolverScheme::reflections:
      detail::solve_reflections(config, opt, s);
      break;
    case SolverScheme::collocation:
      detail::solve_collocation(config, opt, s);
      break;
  }
  for (const Vec3& b : s.strengths)
    if (!is_finite(b)) throw NonConvergenceError("solve: non-finite strengths", s.history, 0.0);
  s.collocation_residual = detail::max_norm(detail::centre_mismatch(config, s.strengths, opt.threads));
  s.residual = boundary_residual(s, opt.residual_order, opt.threads);
  return s;
}

/// V_i inside sphere i (|x - X_i| < 1/n), the superposition elsewhere.
inline std::vector<Vec3> evaluate(const StokesSolution& sol, const std::vector<Vec3>& xs, unsigned threads = 1) {
  const auto& c = sol.configuration;
  const double n = sol.n(), a = 1.0 / n;
  std::vector<Vec3> out(xs.size());
  parallel_for(xs.size(), threads, [&](std::size_t t) {
    const Vec3& x = xs[t];
    Vec3 u{};
    for (std::size_t j = 0; j < c.n(); ++j) {
      const Vec3 d = x - c.positions[j];
      if (norm(d) < a) {
        u = c.velocities[j];
        break;
      }
      u += detail::stokeslet_unchecked(sol.strengths[j], d, n);
    }
    out[t] = u;
  });
  return out;
}

inline Vec3 evaluate(const StokesSolution& sol, const Vec3& x) { return evaluate(sol, std::vector<Vec3>{x})[0]; }

enum class EnergyMethod { boundary, shells };

struct EnergyOptions {
  EnergyMethod method = EnergyMethod::boundary;
  int sphere_order = 50;   // boundary: nodes per sphere
  int angular_order = 12;  // shells: polar Gauss nodes
  int radial_order = 8;    // shells: Gauss nodes per radial panel
  double outer_factor = 50.0;  // shells: outer radius = factor * max(cloud diameter, 2/n)
  unsigned threads = 1;
};

/// Far-field tail of the shell quadrature: beyond R the field is the
/// monopole (3 / (4n|x|)) (B + (B.e) e), B = sum b_j, whose Dirichlet energy
/// outside B(c, R) is 15 pi |B|^2 / (2 n^2 R).
inline double monopole_tail(const Vec3& total_strength, double n, double radius) {
  return 15.0 * pi * norm2(total_strength) / (2.0 * n * n * radius);
}

/// ||grad u||^2 over the exterior of the spheres.
///   boundary: u is an exact Stokes flow outside the spheres, so
///             int |grad u|^2 = sum_i int_{dB_i} ((grad u) nu - p nu) . u
///             with nu pointing into sphere i;
///   shells:   concentric shells around the centroid (points inside spheres
///             skipped) out to R, then monopole_tail.
inline double dirichlet_energy(const StokesSolution& sol, const EnergyOptions& o = {}) {
  const auto& c = sol.configuration;
  if (c.n() == 0) return 0.0;
  const double n = sol.n(), a = 1.0 / n;
  bool all_zero = true;
  for (const Vec3& b : sol.strengths) all_zero = all_zero && b == Vec3{};
  if (all_zero) return 0.0;
  if (o.method == EnergyMethod::boundary) {
    const SphereRule rule = sphere_rule(o.sphere_order);
    std::vector<double> part(c.n(), 0.0);
    parallel_for(c.n(), o.threads, [&](std::size_t i) {
      double s = 0.0;
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const Vec3 nu = -1.0 * rule.nodes[q];
        const Vec3 y = c.positions[i] + a * rule.nodes[q];
        Vec3 u{};
        Mat3 g{};
        double p = 0.0;
        for (std::size_t j = 0; j < c.n(); ++j) {
          const Vec3 d = y - c.positions[j];
          u += detail::stokeslet_unchecked(sol.strengths[j], d, n);
          g += stokeslet_gradient(sol.strengths[j], d, n);
          p += stokeslet_pressure(sol.strengths[j], d, n);
        }
        Vec3 flux{};
        for (int r = 0; r < 3; ++r) flux[r] = g[r][0] * nu.x + g[r][1] * nu.y + g[r][2] * nu.z - p * nu[r];
        s += rule.weights[q] * dot(flux, u);
      }
      part[i] = 4.0 * pi * a * a * s;
    });
    double e = 0.0;
    for (double v : part) e += v;
    return e;
  }
  // shells
  Vec3 centre{};
  for (const Vec3& x : c.positions) centre += x;
  centre = (1.0 / static_cast<double>(c.n())) * centre;
  double diam = 0.0;
  for (const Vec3& x : c.positions) diam = std::max(diam, 2.0 * distance(x, centre));
  const double outer = o.outer_factor * std::max(diam, 2.0 * a);
  std::vector<double> edges{0.0, a};
  while (edges.back() < outer) edges.push_back(std::min(outer, edges.back() * 1.5));
  const SphereRule ang = product_gauss_rule(o.angular_order);
  const Rule1D gl = gauss_legendre_rule(o.radial_order);
  std::vector<std::pair<double, double>> radial;  // (r, weight incl. r^2)
  for (std::size_t k = 0; k + 1 < edges.size(); ++k) {
    const double lo = edges[k], hi = edges[k + 1];
    for (int i = 0; i < o.radial_order; ++i) {
      const double r = 0.5 * (lo + hi) + 0.5 * (hi - lo) * gl.nodes[i];
      radial.emplace_back(r, 0.5 * (hi - lo) * gl.weights[i] * r * r);
    }
  }
  std::vector<double> part(radial.size(), 0.0);
  parallel_for(radial.size(), o.threads, [&](std::size_t k) {
    const auto [r, w] = radial[k];
    double s = 0.0;
    for (std::size_t q = 0; q < ang.size(); ++q) {
      const Vec3 y = centre + r * ang.nodes[q];
      bool inside = false;
      for (const Vec3& x : c.positions) inside = inside || distance(y, x) < a;
      if (inside) continue;
      Mat3 g{};
      for (std::size_t j = 0; j < c.n(); ++j) g += stokeslet_gradient(sol.strengths[j], y - c.positions[j], n);
      s += ang.weights[q] * frobenius2(g);
    }
    part[k] = 4.0 * pi * w * s;
  });
  double e = 0.0;
  for (double v : part) e += v;
  Vec3 total{};
  for (const Vec3& b : sol.strengths) total += b;
  return e + monopole_tail(total, n, outer);
}

struct EnergyAudit {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;  // lhs / rhs, 0 when rhs vanishes
};

/// rhs = (1/n) sum_i |V_i|^2 (1 + (1/n) sum_{j != i, |X_i - X_j| < 5/(2n)} 1 / (|X_i - X_j| - 2/n)).
inline double energy_bound_rhs(const ParticleConfiguration& c) {
  const double n = static_cast<double>(c.n());
  if (c.n() == 0) return 0.0;
  std::vector<double> near(c.n(), 0.0);
  if (c.n() >= 2) {
    const double reach = 2.5 / n;
    const CellList cells(c.positions, reach);
    cells.for_each_pair_within(c.positions, reach, [&](std::size_t i, std::size_t j, double d) {
      if (d < reach) {
        near[i] += 1.0 / (d - 2.0 / n);
        near[j] += 1.0 / (d - 2.0 / n);
      }
    });
  }
  double s = 0.0;
  for (std::size_t i = 0; i < c.n(); ++i) s += norm2(c.velocities[i]) * (1.0 + near[i] / n);
  return s / n;
}

inline EnergyAudit energy_bound_audit(const StokesSolution& sol, const EnergyOptions& o = {}) {
  EnergyAudit a;
  a.lhs = dirichlet_energy(sol, o);
  a.rhs = energy_bound_rhs(sol.configuration);
  a.ratio = a.rhs > 0.0 ? a.lhs / a.rhs : 0.0;
  return a;
}

struct BallError {
  double value = 0.0;      // estimate of ||U - u||_{L2(B(0, R))}
  double std_error = 0.0;  // Monte-Carlo standard error of the squared norm, propagated
};

/// Monte-Carlo L2 distance over B(0, R) between the solution (extended by V_i
/// inside the spheres) and a reference exposing evaluate(x) and covers(R).
template <typename Reference>
BallError l2_error_ball(const StokesSolution& sol, const Reference& ref, double R, std::size_t quad_points,
                        std::uint64_t seed, unsigned threads = 1) {
  if (!(R > 0.0) || quad_points < 2) throw ParameterError("l2_error_ball: need R > 0 and >= 2 points");
  if (!ref.covers(R)) throw DomainError("l2_error_ball: reference does not cover the ball");
  Engine g(seed);
  std::vector<Vec3> pts(quad_points);
  for (auto& p : pts) {
    do p = {2.0 * uniform01(g) - 1.0, 2.0 * uniform01(g) - 1.0, 2.0 * uniform01(g) - 1.0};
    while (norm2(p) > 1.0);
    p = R * p;
  }
  const auto u = evaluate(sol, pts, threads);
  std::vector<double> sq(quad_points);
  for (std::size_t k = 0; k < quad_points; ++k) sq[k] = norm2(u[k] - ref.evaluate(pts[k]));
  const MeanEstimate m = mean_and_stderr(sq);
  const double vol = 4.0 / 3.0 * pi * R * R * R;
  BallError e;
  e.value = std::sqrt(vol * m.mean);
  e.std_error = e.value > 0.0 ? 0.5 * vol * m.std_error / e.value : 0.0;
  return e;
}

inline nlohmann::json solution_to_json(const StokesSolution& s, const std::string& config_ref) {
  nlohmann::json j;
  j["config"] = config_ref;
  j["n"] = s.configuration.n();
  nlohmann::json b = nlohmann::json::array();
  for (const Vec3& v : s.strengths) b.push_back(to_json_array(v));
  j["strengths"] = std::move(b);
  j["residual"] = s.residual;
  j["collocation_residual"] = s.collocation_residual;
  j["iterations"] = s.iterations;
  j["scheme"] = scheme_name(s.scheme);
  return j;
}

/// Rebuilds a solution from its JSON record and the configuration it refers to.
inline StokesSolution solution_from_json(const nlohmann::json& j, const ParticleConfiguration& c) {
  StokesSolution s;
  s.configuration = c;
  try {
    for (const auto& v : j.at("strengths")) s.strengths.push_back(vec3_from_json(v));
    s.residual = j.at("residual").get<double>();
    s.collocation_residual = j.value("collocation_residual", 0.0);
    s.iterations = j.at("iterations").get<int>();
    s.scheme = scheme_from_name(j.at("scheme").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("solution JSON: ") + e.what());
  }
  if (s.strengths.size() != c.n()) throw ConfigError("solution JSON: strength count differs from configuration");
  return s;
}

/// "x,y,z,ux,uy,uz" rows.
inline std::string field_samples_csv(const StokesSolution& sol, const std::vector<Vec3>& pts, unsigned threads = 1) {
  const auto u = evaluate(sol, pts, threads);
  std::ostringstream os;
  os.precision(17);
  os << "x,y,z,ux,uy,uz\n";
  for (std::size_t k = 0; k < pts.size(); ++k)
    os << pts[k].x << ',' << pts[k].y << ',' << pts[k].z << ',' << u[k].x << ',' << u[k].y << ',' << u[k].z << '\n';
  return os.str();
}

}  // namespace sblab
