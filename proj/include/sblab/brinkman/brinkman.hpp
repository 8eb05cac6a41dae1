#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sblab/brinkman/grid_field.hpp"
#include "sblab/brinkman/spectral.hpp"
#include "sblab/core/errors.hpp"
#include "sblab/core/vec3.hpp"
#include "sblab/geometry/configuration.hpp"
#include "sblab/sampling/phase_density.hpp"

namespace sblab {

/// free_space: zero Fourier mode pinned to 0 (surrogate for decay at
/// infinity). periodic: the box is the physical domain, so the mean flow is
/// an unknown like any other mode.
enum class BoxMode { free_space, periodic };

inline std::string box_mode_name(BoxMode m) { return m == BoxMode::periodic ? "periodic" : "free_space"; }
inline BoxMode box_mode_from_name(const std::string& s) {
  if (s == "free_space") return BoxMode::free_space;
  if (s == "periodic") return BoxMode::periodic;
  throw ConfigError("unknown box mode '" + s + "'");
}

struct BrinkmanProblem {
  double L = 4.0;
  int m = 64;
  std::vector<double> rho;  // m^3, x fastest
  GridField j;
  Box omega0{{-0.5, -0.5, -0.5}, {0.5, 0.5, 0.5}};
  BoxMode mode = BoxMode::free_space;

  std::size_t points() const { return static_cast<std::size_t>(m) * m * m; }
  double h() const { return 2.0 * L / m; }

  double rho_mean() const {
    double s = 0.0;
    for (double r : rho) s += r;
    return rho.empty() ? 0.0 : s / static_cast<double>(rho.size());
  }

  /// Throws DomainError when rho < 0, the grids disagree or (free-space
  /// mode) the data leak outside Omega0 or Omega0 crowds the box.
  void validate() const {
    if (rho.size() != points() || j.m != m || j.L != L) throw DomainError("BrinkmanProblem: grid mismatch");
    for (double r : rho)
      if (!(r >= 0.0) || !std::isfinite(r)) throw DomainError("BrinkmanProblem: rho must be finite and >= 0");
    for (double v : j.values)
      if (!std::isfinite(v)) throw DomainError("BrinkmanProblem: j must be finite");
    if (mode == BoxMode::periodic) return;
    for (int a = 0; a < 3; ++a)
      if (omega0.lo[a] < -L / 2 || omega0.hi[a] > L / 2)
        throw DomainError("BrinkmanProblem: Omega0 must keep a margin of L/2 to the box faces");
    // cell-averaged rasterisation may touch nodes up to half a cell outside
    const double pad = h();
    Box grown{omega0.lo - Vec3{pad, pad, pad}, omega0.hi + Vec3{pad, pad, pad}};
    for (std::size_t p = 0; p < points(); ++p) {
      if (rho[p] == 0.0 && j.at(p) == Vec3{}) continue;
      if (!grown.contains(j.node(p))) throw DomainError("BrinkmanProblem: data supported outside Omega0");
    }
  }
};

namespace detail {

inline double interval_overlap(double a, double b, double lo, double hi) {
  return std::max(0.0, std::min(b, hi) - std::max(a, lo));
}
/// int_{[a,b] cap [lo,hi]} y dy
inline double interval_first_moment(double a, double b, double lo, double hi) {
  const double s = std::max(a, lo), t = std::min(b, hi);
  return t > s ? 0.5 * (t * t - s * s) : 0.0;
}

}  // namespace detail

/// Rasterises rho(x) and j(x) = rho(x) E[v | x] of a box-supported law as
/// exact cell averages over [x - h/2, x + h/2]^3, so total mass and
/// momentum are preserved.
inline BrinkmanProblem rasterize(const PhaseDensity& f, double L, int m, BoxMode mode = BoxMode::free_space) {
  if (f.single_site()) throw DomainError("rasterize: law has no density");
  BrinkmanProblem pr;
  pr.L = L;
  pr.m = m;
  pr.mode = mode;
  pr.omega0 = f.support;
  pr.j = GridField(L, m);
  pr.rho.assign(pr.points(), 0.0);
  const double h = pr.h(), rho0 = f.rho_sup(), inv = 1.0 / (h * h * h);
  const Box& b = f.support;
  for (std::size_t p = 0; p < pr.points(); ++p) {
    const Vec3 x = pr.j.node(p);
    double ov[3];
    for (int a = 0; a < 3; ++a) ov[a] = detail::interval_overlap(x[a] - h / 2, x[a] + h / 2, b.lo[a], b.hi[a]);
    const double frac = ov[0] * ov[1] * ov[2] * inv;
    if (frac == 0.0) continue;
    pr.rho[p] = rho0 * frac;
    if (f.model == VelocityModel::shear) {
      const double my = detail::interval_first_moment(x.y - h / 2, x.y + h / 2, b.lo.y, b.hi.y);
      pr.j.set(p, {rho0 * f.shear_rate * ov[0] * my * ov[2] * inv, 0.0, 0.0});
    } else {
      pr.j.set(p, pr.rho[p] * f.v0);
    }
  }
  return pr;
}

/// Mollified empirical measures: each particle carries mass 1/N spread by a
/// Gaussian of width two grid cells (truncated at three widths, normalised
/// on the grid). Diagnostics only.
inline BrinkmanProblem rasterize_empirical(const ParticleConfiguration& c, double L, int m, const Box& omega0,
                                           BoxMode mode = BoxMode::free_space) {
  if (c.n() == 0) throw DomainError("rasterize_empirical: empty configuration");
  BrinkmanProblem pr;
  pr.L = L;
  pr.m = m;
  pr.mode = mode;
  pr.omega0 = omega0;
  pr.j = GridField(L, m);
  pr.rho.assign(pr.points(), 0.0);
  const double h = pr.h(), sig = 2.0 * h;
  const int reach = 6;
  const double N = static_cast<double>(c.n());
  std::vector<double> w;
  for (std::size_t i = 0; i < c.n(); ++i) {
    const Vec3 x = c.positions[i];
    int base[3];
    for (int a = 0; a < 3; ++a) base[a] = static_cast<int>(std::lround((x[a] + L) / h));
    w.clear();
    double total = 0.0;
    for (int dz = -reach; dz <= reach; ++dz)
      for (int dy = -reach; dy <= reach; ++dy)
        for (int dx = -reach; dx <= reach; ++dx) {
          const Vec3 y{-L + (base[0] + dx) * h, -L + (base[1] + dy) * h, -L + (base[2] + dz) * h};
          const double r2 = norm2(y - x);
          const double v = r2 <= 9.0 * sig * sig ? std::exp(-0.5 * r2 / (sig * sig)) : 0.0;
          w.push_back(v);
          total += v;
        }
    const double scale = 1.0 / (N * total * h * h * h);
    std::size_t q = 0;
    for (int dz = -reach; dz <= reach; ++dz)
      for (int dy = -reach; dy <= reach; ++dy)
        for (int dx = -reach; dx <= reach; ++dx, ++q) {
          if (w[q] == 0.0) continue;
          auto wrap = [m](int t) { return ((t % m) + m) % m; };
          const std::size_t p = pr.j.index(wrap(base[0] + dx), wrap(base[1] + dy), wrap(base[2] + dz));
          const double mass = w[q] * scale;
          pr.rho[p] += mass;
          pr.j.set(p, pr.j.at(p) + mass * c.velocities[i]);
        }
  }
  return pr;
}

// ---- spectral diagnostics ---------------------------------------------------

/// Fills f.curvature = max_x sum_a |d_aa u_c(x)| over components c.
inline void estimate_curvature(const SpectralGrid& g, GridField& f, const SpectralVector& uh) {
  std::vector<cplx> t(g.ncomplex());
  std::vector<double> r(g.nreal());
  std::vector<double> acc(g.nreal());
  double best = 0.0;
  for (int c = 0; c < 3; ++c) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (int a = 0; a < 3; ++a) {
      for (std::size_t q = 0; q < g.ncomplex(); ++q) {
        const double k = g.wavevector(q)[a];
        t[q] = -k * k * uh[c][q];
      }
      g.inverse(t.data(), r.data());
      for (std::size_t p = 0; p < g.nreal(); ++p) acc[p] += std::abs(r[p]);
    }
    for (double v : acc) best = std::max(best, v);
  }
  f.curvature = best;
}

inline void estimate_curvature(GridField& f) {
  SpectralGrid g(f.L, f.m);
  estimate_curvature(g, f, to_spectral(g, f));
}

/// int |grad u|^2 over the box.
inline double dirichlet_integral(const SpectralGrid& g, const SpectralVector& uh) {
  double s = 0.0;
  for (std::size_t c = 0; c < g.ncomplex(); ++c) {
    const double k2 = norm2(g.wavevector(c));
    s += g.weight(c) * k2 * (std::norm(uh[0][c]) + std::norm(uh[1][c]) + std::norm(uh[2][c]));
  }
  return s * g.cell_volume() / static_cast<double>(g.nreal());
}

inline double dirichlet_integral(const GridField& f) {
  SpectralGrid g(f.L, f.m);
  return dirichlet_integral(g, to_spectral(g, f));
}

/// int |D^2 u|^2 (full Hessian, Frobenius).
inline double hessian_integral(const SpectralGrid& g, const SpectralVector& uh) {
  double s = 0.0;
  for (std::size_t c = 0; c < g.ncomplex(); ++c) {
    const double k2 = norm2(g.wavevector(c));
    s += g.weight(c) * k2 * k2 * (std::norm(uh[0][c]) + std::norm(uh[1][c]) + std::norm(uh[2][c]));
  }
  return s * g.cell_volume() / static_cast<double>(g.nreal());
}

/// ||div u||_2 / (||grad u||_2 + ||u||_2 / L), evaluated spectrally.
inline double spectral_divergence(const GridField& f) {
  SpectralGrid g(f.L, f.m);
  const SpectralVector uh = to_spectral(g, f);
  double div = 0.0, u2 = 0.0;
  for (std::size_t c = 0; c < g.ncomplex(); ++c) {
    const Vec3 k = g.wavevector(c);
    div += g.weight(c) * std::norm(k.x * uh[0][c] + k.y * uh[1][c] + k.z * uh[2][c]);
    u2 += g.weight(c) * (std::norm(uh[0][c]) + std::norm(uh[1][c]) + std::norm(uh[2][c]));
  }
  const double scale = g.cell_volume() / static_cast<double>(g.nreal());
  const double den = std::sqrt(dirichlet_integral(g, uh)) + std::sqrt(u2 * scale) / f.L;
  return den > 0.0 ? std::sqrt(div * scale) / den : 0.0;
}

// ---- solvers ----------------------------------------------------------------

/// Stokes with forcing 6 pi j: u^(k) = 6 pi P(k) j^(k) / |k|^2, zero mode 0.
inline GridField solve_stokes(const GridField& j) {
  SpectralGrid g(j.L, j.m);
  SpectralVector uh = to_spectral(g, j);
  leray_project(g, uh, false);
  for (std::size_t c = 1; c < g.ncomplex(); ++c) {
    const double k2 = norm2(g.wavevector(c));
    for (int a = 0; a < 3; ++a) uh[a][c] *= 6.0 * pi / k2;
  }
  GridField u = from_spectral(g, uh);
  u.mean_zero = true;
  estimate_curvature(g, u, uh);
  return u;
}

struct BrinkmanSolution {
  GridField field;
  int iterations = 0;
  double residual = 0.0;  // relative, recomputed from scratch at exit
  std::vector<double> history;
};

namespace detail {

/// a(u, .) restricted to the admissible modes: P(|k|^2 u^ + 6 pi F[rho u]).
class BrinkmanOperator {
 public:
  BrinkmanOperator(const SpectralGrid& g, const std::vector<double>& rho, bool keep_mean)
      : g_(g), rho_(rho), keep_mean_(keep_mean), real_(g.nreal()) {}

  void apply(const SpectralVector& x, SpectralVector& y) const {
    for (int a = 0; a < 3; ++a) {
      y[a].resize(g_.ncomplex());
      g_.inverse(x[a].data(), real_.data());
      for (std::size_t p = 0; p < real_.size(); ++p) real_[p] *= 6.0 * pi * rho_[p];
      g_.forward(real_.data(), y[a].data());
      for (std::size_t c = 0; c < g_.ncomplex(); ++c) y[a][c] += norm2(g_.wavevector(c)) * x[a][c];
    }
    leray_project(g_, y, keep_mean_);
  }

 private:
  const SpectralGrid& g_;
  const std::vector<double>& rho_;
  bool keep_mean_;
  mutable std::vector<double> real_;
};

inline void axpy(double a, const SpectralVector& x, SpectralVector& y) {
  for (int k = 0; k < 3; ++k)
    for (std::size_t c = 0; c < x[k].size(); ++c) y[k][c] += a * x[k][c];
}

}  // namespace detail

/// Preconditioned CG for a(u, w) = 6 pi (j, w) over divergence-free grid
/// fields; preconditioner 1 / (|k|^2 + 6 pi mean(rho)).
inline BrinkmanSolution solve_brinkman(const BrinkmanProblem& pr, double tol = 1e-10, int max_iter = 500) {
  pr.validate();
  if (!(tol > 0.0) || max_iter < 1) throw ParameterError("solve_brinkman: need tol > 0 and max_iter >= 1");
  const SpectralGrid g(pr.L, pr.m);
  const double rbar = pr.rho_mean();
  const bool keep_mean = pr.mode == BoxMode::periodic && rbar > 0.0;
  const detail::BrinkmanOperator A(g, pr.rho, keep_mean);

  SpectralVector b = to_spectral(g, pr.j);
  leray_project(g, b, keep_mean);
  for (auto& comp : b)
    for (auto& v : comp) v *= 6.0 * pi;

  auto precondition = [&](const SpectralVector& r, SpectralVector& z) {
    z = r;
    for (std::size_t c = 0; c < g.ncomplex(); ++c) {
      const double d = norm2(g.wavevector(c)) + 6.0 * pi * rbar;
      for (int a = 0; a < 3; ++a) z[a][c] = d > 0.0 ? z[a][c] / d : 0.0;
    }
  };

  BrinkmanSolution out;
  SpectralVector x;
  for (auto& comp : x) comp.assign(g.ncomplex(), 0.0);
  const double bnorm = std::sqrt(spectral_dot(g, b, b));
  if (bnorm == 0.0) {
    out.field = GridField(pr.L, pr.m);
    out.field.mean_zero = !keep_mean;
    out.field.curvature = 0.0;
    return out;
  }
  SpectralVector r = b, z, p, q;
  precondition(r, z);
  p = z;
  double rz = spectral_dot(g, r, z);
  double rel = 1.0;
  int it = 0;
  while (true) {
    rel = std::sqrt(spectral_dot(g, r, r)) / bnorm;
    out.history.push_back(rel);
    if (rel < tol) break;
    if (it >= max_iter)
      throw NonConvergenceError("solve_brinkman: max_iter reached at residual " + std::to_string(rel),
                                out.history);
    A.apply(p, q);
    const double pq = spectral_dot(g, p, q);
    if (!(pq > 0.0)) throw NonConvergenceError("solve_brinkman: operator not positive", out.history);
    const double alpha = rz / pq;
    detail::axpy(alpha, p, x);
    detail::axpy(-alpha, q, r);
    precondition(r, z);
    const double rz_new = spectral_dot(g, r, z);
    for (int a = 0; a < 3; ++a)
      for (std::size_t c = 0; c < g.ncomplex(); ++c) p[a][c] = z[a][c] + (rz_new / rz) * p[a][c];
    rz = rz_new;
    ++it;
  }
  // true residual
  A.apply(x, q);
  detail::axpy(-1.0, b, q);
  out.residual = std::sqrt(spectral_dot(g, q, q)) / bnorm;
  out.iterations = it;
  out.field = from_spectral(g, x);
  out.field.mean_zero = !keep_mean;
  estimate_curvature(g, out.field, x);
  return out;
}

/// Terms of the energy identity int|grad u|^2 + 6 pi int rho|u|^2 = 6 pi int j.u
struct BrinkmanEnergy {
  double dirichlet = 0.0;
  double friction = 0.0;
  double pairing = 0.0;
  double lhs() const { return dirichlet + friction; }
};

inline BrinkmanEnergy brinkman_energy(const BrinkmanProblem& pr, const GridField& u) {
  BrinkmanEnergy e;
  e.dirichlet = dirichlet_integral(u);
  const double dv = std::pow(pr.h(), 3);
  for (std::size_t p = 0; p < pr.points(); ++p) {
    const Vec3 v = u.at(p);
    e.friction += 6.0 * pi * pr.rho[p] * norm2(v) * dv;
    e.pairing += 6.0 * pi * dot(pr.j.at(p), v) * dv;
  }
  return e;
}

inline double lp_norm(const GridField& f, double p) {
  const double dv = std::pow(f.h(), 3);
  double s = 0.0;
  for (std::size_t q = 0; q < f.points(); ++q) s += std::pow(norm(f.at(q)), p);
  return std::pow(s * dv, 1.0 / p);
}

inline double lp_norm(const std::vector<double>& f, double h, double p) {
  double s = 0.0;
  for (double v : f) s += std::pow(std::abs(v), p);
  return std::pow(s * h * h * h, 1.0 / p);
}

struct EllipticRatios {
  double ratio_grad = std::numeric_limits<double>::quiet_NaN();
  double ratio_hess = std::numeric_limits<double>::quiet_NaN();
  bool grad_defined = false;
  bool hess_defined = false;
};

/// ||grad u||_2 / ||j||_{6/5} and ||D^2 u||_2 / (||j||_2 + ||j||_{6/5}).
inline EllipticRatios verify_elliptic_bounds(const BrinkmanProblem& pr, const GridField& u) {
  EllipticRatios r;
  const double j65 = lp_norm(pr.j, 1.2), j2 = lp_norm(pr.j, 2.0);
  const SpectralGrid g(u.L, u.m);
  const SpectralVector uh = to_spectral(g, u);
  if (j65 > 0.0) {
    r.ratio_grad = std::sqrt(dirichlet_integral(g, uh)) / j65;
    r.grad_defined = true;
  }
  if (j2 + j65 > 0.0) {
    r.ratio_hess = std::sqrt(hessian_integral(g, uh)) / (j2 + j65);
    r.hess_defined = true;
  }
  return r;
}

}  // namespace sblab
