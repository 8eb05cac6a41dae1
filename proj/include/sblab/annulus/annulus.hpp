#pragma once

#include <algorithm>
#include <cmath>
#include <fstream>
#include <string>
#include <vector>

#include <Eigen/Sparse>

#include "sblab/core/errors.hpp"
#include "sblab/core/parallel.hpp"
#include "sblab/core/quadrature.hpp"
#include "sblab/core/random.hpp"
#include "sblab/core/smooth.hpp"

namespace sblab {

/// Even bump with 1 on [-1/4, 1/4] and 0 outside [-1/2, 1/2]:
/// zeta(s) = S(4 (1/2 - |s|)) with S the exp-based smooth step.
inline double annulus_bump(double s) { return smooth_step(4.0 * (0.5 - std::abs(s))); }
inline double annulus_bump_derivative(double s) {
  const double d = -4.0 * smooth_step_derivative(4.0 * (0.5 - std::abs(s)));
  return s < 0.0 ? -d : d;
}

/// Odd increasing map of [-1, 1] onto itself sending [0, 1/2] onto
/// [0, 1 - 1/delta]; chi' interpolates between 2 (1 - 1/delta) and k
/// through zeta(delta (s - 1/2)_+).
class AnnulusMap {
 public:
  explicit AnnulusMap(double delta) : delta_(delta) {
    if (!(delta > 2.0) || !std::isfinite(delta)) throw ParameterError("AnnulusMap: delta must exceed 2");
    plateau_ = 2.0 * (1.0 - 1.0 / delta);
    zinf_ = bump_integral(0.5);
    k_ = (1.0 - plateau_ * zinf_) / (delta * (0.5 - zinf_ / delta));
  }

  double delta() const { return delta_; }
  double k() const { return k_; }
  double plateau() const { return plateau_; }

  double chi(double x) const {
    if (x < 0.0) return -chi(-x);
    if (x <= 0.5) return plateau_ * x;
    return plateau_ * 0.5 + k_ * (x - 0.5) + (plateau_ - k_) / delta_ * bump_integral(delta_ * (x - 0.5));
  }
  double chi_prime(double x) const {
    const double t = delta_ * std::max(0.0, std::abs(x) - 0.5);
    const double z = annulus_bump(t);
    return plateau_ * z + k_ * (1.0 - z);
  }
  double chi_second(double x) const {
    if (std::abs(x) <= 0.5) return 0.0;
    const double t = delta_ * (std::abs(x) - 0.5);
    const double d = (plateau_ - k_) * delta_ * annulus_bump_derivative(t);
    return x < 0.0 ? -d : d;
  }

  /// Inverse of chi by safeguarded Newton.
  double sigma(double y) const {
    if (y < 0.0) return -sigma(-y);
    if (y >= 1.0) return 1.0;
    if (y <= 1.0 - 1.0 / delta_) return y / plateau_;
    double lo = 0.5, hi = 1.0, x = 0.5 + (y - chi(0.5)) / k_;
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
      const double f = chi(x) - y;
      if (f > 0.0) hi = x;
      else lo = x;
      if (std::abs(f) < 1e-15 || hi - lo < 1e-15) break;
      double nx = x - f / chi_prime(x);
      if (!(nx > lo && nx < hi)) nx = 0.5 * (lo + hi);
      x = nx;
    }
    return x;
  }
  double sigma_prime(double y) const { return 1.0 / chi_prime(sigma(y)); }
  double sigma_second(double y) const {
    const double x = sigma(y), c1 = chi_prime(x);
    return -chi_second(x) / (c1 * c1 * c1);
  }

 private:
  /// int_0^t zeta, t >= 0 (constant beyond 1/2).
  static double bump_integral(double t) {
    t = std::min(t, 0.5);
    if (t <= 0.25) return t;
    const Rule1D gl = gauss_legendre_rule(24);
    const int panels = 16;
    const double w = (t - 0.25) / panels;
    double s = 0.25;
    for (int p = 0; p < panels; ++p) {
      const double a = 0.25 + p * w;
      for (std::size_t i = 0; i < gl.nodes.size(); ++i)
        s += 0.5 * w * gl.weights[i] * annulus_bump(a + 0.5 * w * (gl.nodes[i] + 1.0));
    }
    return s;
  }

  double delta_, plateau_, zinf_, k_;
};

inline AnnulusMap build_annulus_map(double delta) { return AnnulusMap(delta); }

struct MapAudit {
  double delta = 0.0;
  double chi1_min = 0.0, chi1_max = 0.0, chi2_max = 0.0;
  double sigma1_min = 0.0, sigma1_max = 0.0, sigma2_max = 0.0;
  // implied constants: c/delta <= chi', |chi''| <= C delta, sigma' <= C delta, |sigma''| <= C delta^4
  double c_chi1 = 0.0, c_chi2 = 0.0, c_sigma1 = 0.0, c_sigma2 = 0.0;
  double inverse_error = 0.0;  // max |chi(sigma(x)) - x| and |sigma(chi(y)) - y|
  bool chi1_le_2 = false, sigma1_ge_half = false;
  bool pass = false;
};

/// Samples chi', chi'', sigma', sigma'' on a uniform grid of [-1, 1].
inline MapAudit map_derivative_audit(const AnnulusMap& map, int samples = 10000) {
  if (samples < 2) throw ParameterError("map_derivative_audit: need >= 2 samples");
  MapAudit a;
  a.delta = map.delta();
  a.chi1_min = a.sigma1_min = 1e300;
  for (int i = 0; i < samples; ++i) {
    const double t = -1.0 + 2.0 * i / (samples - 1);
    const double c1 = map.chi_prime(t), s1 = map.sigma_prime(t);
    a.chi1_min = std::min(a.chi1_min, c1);
    a.chi1_max = std::max(a.chi1_max, c1);
    a.chi2_max = std::max(a.chi2_max, std::abs(map.chi_second(t)));
    a.sigma1_min = std::min(a.sigma1_min, s1);
    a.sigma1_max = std::max(a.sigma1_max, s1);
    a.sigma2_max = std::max(a.sigma2_max, std::abs(map.sigma_second(t)));
    a.inverse_error = std::max({a.inverse_error, std::abs(map.chi(map.sigma(t)) - t), std::abs(map.sigma(map.chi(t)) - t)});
  }
  const double d = map.delta();
  a.c_chi1 = a.chi1_min * d;
  a.c_chi2 = a.chi2_max / d;
  a.c_sigma1 = a.sigma1_max / d;
  a.c_sigma2 = a.sigma2_max / std::pow(d, 4);
  a.chi1_le_2 = a.chi1_max <= 2.0;
  a.sigma1_ge_half = a.sigma1_min >= 0.5 - 1e-12;
  const double cap = 100.0;
  a.pass = a.chi1_le_2 && a.sigma1_ge_half && a.c_chi1 >= 1.0 / cap && a.c_chi2 <= cap && a.c_sigma1 <= cap &&
           a.c_sigma2 <= cap;
  return a;
}

// ---- Poincare-Wirtinger constant -------------------------------------------------

struct PwOptions {
  bool full_cube = false;  // no hole (the formal delta -> 1 limit)
  double tol = 1e-10;      // relative change of the Rayleigh quotient
  int max_iter = 300;
  double inner_tol = 1e-12;
  std::uint64_t seed = 1;
};

struct PwEstimate {
  double delta = 0.0;
  int grid_m = 0;
  double lambda1 = 0.0;
  double estimate = 0.0;  // 1 / sqrt(lambda1)
  int iterations = 0;
  std::size_t cells = 0;
  double max_mean_drift = 0.0;  // max |mean| / rms over the iterates
  std::vector<double> history;  // Rayleigh quotients
};

/// Cell-centred grid on [-1, 1]^3 with m cells per axis; a cell belongs to
/// the annulus when its centre lies outside the open hole (-(1 - 1/delta),
/// 1 - 1/delta)^3. Neumann conditions are the reflecting 7-point stencil:
/// only faces shared by two domain cells carry flux.
inline PwEstimate pw_constant_estimate(double delta, int grid_m, const PwOptions& opt = {}) {
  if (grid_m < 32) throw ParameterError("pw_constant_estimate: grid_m must be >= 32");
  if (!opt.full_cube && !(delta > 2.0)) throw ParameterError("pw_constant_estimate: delta must exceed 2");
  const int m = grid_m;
  const double h = 2.0 / m, hole = opt.full_cube ? 0.0 : 1.0 - 1.0 / delta;
  auto centre = [&](int i) { return -1.0 + (i + 0.5) * h; };
  auto inside = [&](int i, int j, int k) {
    if (opt.full_cube) return true;
    const double c = std::max({std::abs(centre(i)), std::abs(centre(j)), std::abs(centre(k))});
    return c > hole;
  };
  std::vector<int> id(static_cast<std::size_t>(m) * m * m, -1);
  int n = 0;
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i)
        if (inside(i, j, k)) id[i + m * (j + static_cast<std::size_t>(m) * k)] = n++;
  auto at = [&](int i, int j, int k) { return id[i + m * (j + static_cast<std::size_t>(m) * k)]; };

  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(n) * 7);
  const double w = 1.0 / (h * h);
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i) {
        const int p = at(i, j, k);
        if (p < 0) continue;
        double diag = 0.0;
        const int nb[6][3] = {{i - 1, j, k}, {i + 1, j, k}, {i, j - 1, k}, {i, j + 1, k}, {i, j, k - 1}, {i, j, k + 1}};
        for (const auto& q : nb) {
          if (q[0] < 0 || q[0] >= m || q[1] < 0 || q[1] >= m || q[2] < 0 || q[2] >= m) continue;
          const int r = at(q[0], q[1], q[2]);
          if (r < 0) continue;
          trip.emplace_back(p, r, -w);
          diag += w;
        }
        trip.emplace_back(p, p, diag);
      }
  Eigen::SparseMatrix<double> A(n, n);
  A.setFromTriplets(trip.begin(), trip.end());

  auto project = [](Eigen::VectorXd& v) { v.array() -= v.mean(); };

  PwEstimate out;
  out.delta = opt.full_cube ? 1.0 : delta;
  out.grid_m = m;
  out.cells = static_cast<std::size_t>(n);

  // start: a linear profile plus a seeded perturbation
  Eigen::VectorXd x(n);
  Engine g(opt.seed);
  for (int k = 0; k < m; ++k)
    for (int j = 0; j < m; ++j)
      for (int i = 0; i < m; ++i)
        if (at(i, j, k) >= 0)
          x[at(i, j, k)] = centre(i) + 0.5 * centre(j) + 0.25 * centre(k) + 0.1 * (uniform01(g) - 0.5);
  project(x);
  x.normalize();

  Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper> cg;
  cg.setTolerance(opt.inner_tol);
  cg.setMaxIterations(10 * m + 1000);
  cg.compute(A);

  double rq = x.dot(A * x);
  out.history.push_back(rq);
  for (int it = 1; it <= opt.max_iter; ++it) {
    Eigen::VectorXd y = cg.solve(x);
    project(y);
    const double rms = y.norm() / std::sqrt(static_cast<double>(n));
    // drift measured after projection: what the next iterate carries
    out.max_mean_drift = std::max(out.max_mean_drift, std::abs(y.mean()) / rms);
    x = y / y.norm();
    const double next = x.dot(A * x);
    out.history.push_back(next);
    out.iterations = it;
    if (std::abs(next - rq) <= opt.tol * next) {
      rq = next;
      out.lambda1 = rq;
      out.estimate = 1.0 / std::sqrt(rq);
      return out;
    }
    rq = next;
  }
  throw NonConvergenceError("pw_constant_estimate: Rayleigh quotient stagnated", out.history);
}

inline PwEstimate pw_constant_full_cube(int grid_m) {
  PwOptions o;
  o.full_cube = true;
  return pw_constant_estimate(0.0, grid_m, o);
}

/// Runs the estimate for each delta (independent tasks).
inline std::vector<PwEstimate> pw_scaling_study(const std::vector<double>& deltas, int grid_m, unsigned threads = 1) {
  std::vector<PwEstimate> out(deltas.size());
  parallel_for(deltas.size(), threads, [&](std::size_t i) { out[i] = pw_constant_estimate(deltas[i], grid_m); });
  return out;
}

/// Least-squares slope of log(estimate) against log(delta).
inline double pw_scaling_slope(const std::vector<PwEstimate>& runs) {
  if (runs.size() < 2) throw ParameterError("pw_scaling_slope: need >= 2 runs");
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(runs.size());
  for (const auto& r : runs) {
    const double x = std::log(r.delta), y = std::log(r.estimate);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline void write_pw_csv(const std::vector<PwEstimate>& runs, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out.precision(12);
  out << "delta,grid_m,lambda1,pw_estimate,iterations\n";
  for (const auto& r : runs)
    out << r.delta << ',' << r.grid_m << ',' << r.lambda1 << ',' << r.estimate << ',' << r.iterations << '\n';
}

}  // namespace sblab
