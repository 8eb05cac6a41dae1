#pragma once

#include <algorithm>
#include <array>
#include <map>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sblab/core/errors.hpp"
#include "sblab/core/quadrature.hpp"
#include "sblab/core/random.hpp"
#include "sblab/transport/empirical_measure.hpp"
#include "sblab/transport/network_simplex.hpp"

namespace sblab {

// Test functions are normalised by max(|phi|_inf, [phi]_theta) <= 1 with
// [phi]_theta = sup |phi(x) - phi(y)| / |x - y|^theta.

/// Constants of the bump zeta(y) = c exp(-1 / (1 - |y|^2)) on the unit ball
/// of R^3 (unit mass): A = int |y|^theta zeta, B = int |grad zeta|.
struct MollifierConstants {
  double a = 0.0;
  double b = 0.0;
};

inline MollifierConstants mollifier_constants(double theta) {
  auto bump = [](double r) { return r < 1.0 ? std::exp(-1.0 / (1.0 - r * r)) : 0.0; };
  const int order = 200;
  const double mass = 4.0 * pi * integrate_gl([&](double r) { return r * r * bump(r); }, 0.0, 1.0, order);
  MollifierConstants k;
  k.a = 4.0 * pi * integrate_gl([&](double r) { return std::pow(r, 2.0 + theta) * bump(r); }, 0.0, 1.0, order) / mass;
  k.b = 4.0 * pi *
        integrate_gl(
            [&](double r) {
              const double s = 1.0 - r * r;
              return r < 1.0 ? r * r * bump(r) * 2.0 * r / (s * s) : 0.0;
            },
            0.0, 1.0, order) /
        mass;
  return k;
}

struct HolderUpper {
  double bound = 0.0;
  double epsilon = 0.0;   // minimiser on the grid
  double w1 = 0.0;        // W1 between the normalised positive and negative parts
  double k0 = 0.0;        // bound <= k0 * w1^(theta/(1+theta)) + |p - q| at the grid point eps = w1^(1/(1+theta))
};

namespace detail {

inline void check_theta(double theta) {
  if (!(theta > 0.0 && theta <= 1.0)) throw ParameterError("holder: theta must lie in (0, 1]");
}

/// Positive and negative parts of a signed measure as weight vectors on
/// separate atom lists.
struct Split {
  std::vector<Vec3> p_pts, q_pts;
  std::vector<double> p_w, q_w;
  double p = 0.0, q = 0.0;
};

/// Coincident atoms are merged first, so m - m has no parts at all.
inline Split split(const SignedMeasure& s) {
  std::map<std::array<double, 3>, double> merged;
  for (std::size_t i = 0; i < s.size(); ++i) merged[{s.points[i].x, s.points[i].y, s.points[i].z}] += s.weights[i];
  Split r;
  for (const auto& [x, w] : merged) {
    const Vec3 p{x[0], x[1], x[2]};
    if (w > 0) {
      r.p_pts.push_back(p);
      r.p_w.push_back(w);
      r.p += w;
    } else if (w < 0) {
      r.q_pts.push_back(p);
      r.q_w.push_back(-w);
      r.q -= w;
    }
  }
  return r;
}

}  // namespace detail

/// Upper bound on the dual norm of sigma by mollification: for eps > 0,
///   <phi, sigma> <= A eps^theta |sigma| + (B / eps) p W1(P/p, Q/q) + |p - q|
/// where sigma = P - Q, p = |P|, q = |Q|; minimised over 25 log-spaced eps in
/// [W1^2, W1^(1/2)] plus eps = W1^(1/(1+theta)), and capped by |sigma|.
inline HolderUpper holder_dual_upper(const SignedMeasure& sigma, double theta) {
  detail::check_theta(theta);
  const MollifierConstants k = mollifier_constants(theta);
  HolderUpper h;
  h.k0 = 2.0 * k.a + k.b;
  const detail::Split s = detail::split(sigma);
  const double tv = s.p + s.q;
  if (tv == 0.0) return h;
  if (s.p == 0.0 || s.q == 0.0) {
    h.bound = tv;
    return h;
  }
  std::vector<double> pw = s.p_w, qw = s.q_w;
  for (double& w : pw) w /= s.p;
  for (double& w : qw) w /= s.q;
  h.w1 = solve_transport(pw, qw, [&](std::size_t i, std::size_t j) { return distance(s.p_pts[i], s.q_pts[j]); }).cost;
  const double mismatch = std::abs(s.p - s.q);
  h.bound = tv;
  if (h.w1 <= 0.0) {
    h.bound = std::min(tv, mismatch);
    return h;
  }
  std::vector<double> eps;
  const double lo = std::log(h.w1 * h.w1), hi = std::log(std::sqrt(h.w1));
  for (int i = 0; i < 25; ++i) eps.push_back(std::exp(lo + (hi - lo) * i / 24.0));
  eps.push_back(std::pow(h.w1, 1.0 / (1.0 + theta)));
  for (double e : eps) {
    const double b = k.a * std::pow(e, theta) * tv + k.b / e * s.p * h.w1 + mismatch;
    if (b < h.bound) {
      h.bound = b;
      h.epsilon = e;
    }
  }
  return h;
}

inline HolderUpper holder_dual_upper(const EmpiricalMeasure& m, const EmpiricalMeasure& m_bar, double theta) {
  return holder_dual_upper(SignedMeasure::from(m).minus(SignedMeasure::from(m_bar)), theta);
}

/// Lower bound: max |<phi, sigma>| over a dictionary of admissible test
/// functions, namely clamped cones clamp(c - |z - a|^theta, -1, 1) centred
/// at atoms (c on a grid) and cosines s cos(w.z + b) with s chosen so that
/// s 2^(1-theta) |w|^theta <= 1.
inline double holder_dual_lower(const SignedMeasure& sigma_in, double theta, std::size_t dictionary_size,
                                std::uint64_t seed) {
  detail::check_theta(theta);
  const detail::Split parts = detail::split(sigma_in);
  SignedMeasure sigma;
  sigma.points = parts.p_pts;
  sigma.weights = parts.p_w;
  sigma.points.insert(sigma.points.end(), parts.q_pts.begin(), parts.q_pts.end());
  for (double w : parts.q_w) sigma.weights.push_back(-w);
  if (sigma.size() == 0) return 0.0;
  double best = 0.0;
  const std::size_t n = sigma.size();
  auto pair = [&](auto&& phi) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += sigma.weights[i] * phi(sigma.points[i]);
    best = std::max(best, std::abs(s));
  };
  // cones centred at the heaviest atoms
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return std::abs(sigma.weights[a]) > std::abs(sigma.weights[b]); });
  const std::size_t cones = std::min(n, std::max<std::size_t>(1, dictionary_size / 2));
  std::vector<double> r(n);
  for (std::size_t c = 0; c < cones; ++c) {
    const Vec3 a = sigma.points[order[c]];
    double rmax = 0;
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = std::pow(distance(sigma.points[i], a), theta);
      rmax = std::max(rmax, r[i]);
    }
    constexpr int levels = 17;
    for (int l = 0; l < levels; ++l) {
      const double cval = -1.0 + (rmax + 2.0) * l / (levels - 1);
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += sigma.weights[i] * std::clamp(cval - r[i], -1.0, 1.0);
      best = std::max(best, std::abs(s));
    }
  }
  // random cosines over several frequency scales
  Engine g(seed);
  const std::size_t waves = dictionary_size > cones ? dictionary_size - cones : 0;
  for (std::size_t w = 0; w < waves; ++w) {
    const double scale = std::pow(2.0, -1.0 + 7.0 * uniform01(g));
    const Vec3 omega = scale * uniform_on_sphere(g);
    const double phase = 2.0 * pi * uniform01(g);
    const double amp = std::min(1.0, 1.0 / (std::pow(2.0, 1.0 - theta) * std::pow(norm(omega), theta)));
    pair([&](const Vec3& z) { return amp * std::cos(dot(omega, z) + phase); });
  }
  return best;
}

inline double holder_dual_lower(const EmpiricalMeasure& m, const EmpiricalMeasure& m_bar, double theta,
                                std::size_t dictionary_size, std::uint64_t seed) {
  return holder_dual_lower(SignedMeasure::from(m).minus(SignedMeasure::from(m_bar)), theta, dictionary_size, seed);
}

struct DualInterval {
  double lower = 0.0;
  double upper = 0.0;
};

/// sum over alpha of the dual norms of (jn_alpha - j_alpha). jn and j_ref
/// both carry a payload; j_ref is typically m draws Y_k of rho with weights
/// 1/m and payload j(Y_k) / rho(Y_k).
inline DualInterval flux_distance(const EmpiricalMeasure& jn, const EmpiricalMeasure& j_ref, double theta,
                                  std::size_t dictionary_size = 64, std::uint64_t seed = 0) {
  if (!jn.has_payload() || !j_ref.has_payload()) throw DomainError("flux_distance: payload missing");
  DualInterval d;
  for (int a = 0; a < 3; ++a) {
    const SignedMeasure s = SignedMeasure::flux_component(jn, a).minus(SignedMeasure::flux_component(j_ref, a));
    d.upper += holder_dual_upper(s, theta).bound;
    d.lower += holder_dual_lower(s, theta, dictionary_size, derive_seed(seed, 0xF1, a));
  }
  return d;
}

}  // namespace sblab
