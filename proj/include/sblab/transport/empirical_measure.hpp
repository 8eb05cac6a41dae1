#pragma once

#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "sblab/core/errors.hpp"
#include "sblab/core/vec3.hpp"
#include "sblab/geometry/configuration.hpp"

namespace sblab {

/// Weighted point masses in R^dim (dim = 3 for positions, 6 for phase
/// space). Atoms are stored row-major in `coords`. An optional per-atom
/// 3-vector payload turns the measure into a flux sum_i w_i payload_i delta_i.
struct EmpiricalMeasure {
  int dim = 3;
  std::vector<double> coords;
  std::vector<double> weights;
  std::vector<Vec3> payload;

  std::size_t size() const { return weights.size(); }
  bool empty() const { return weights.empty(); }
  std::span<const double> atom(std::size_t i) const { return {coords.data() + i * dim, static_cast<std::size_t>(dim)}; }
  double total_mass() const { return std::accumulate(weights.begin(), weights.end(), 0.0); }
  bool has_payload() const { return !payload.empty(); }

  bool uniform_weights() const {
    if (empty()) return false;
    for (double w : weights)
      if (w != weights.front()) return false;
    return true;
  }

  /// Throws unless weights are nonnegative, atoms finite, and (if
  /// probability is set) the weights sum to one within 1e-12.
  void check(bool probability = true) const {
    if (coords.size() != weights.size() * static_cast<std::size_t>(dim))
      throw DomainError("empirical measure: coordinate array does not match weights");
    if (!payload.empty() && payload.size() != weights.size())
      throw DomainError("empirical measure: payload length does not match weights");
    for (double w : weights)
      if (!(w >= 0.0) || !std::isfinite(w)) throw DomainError("empirical measure: weights must be nonnegative");
    for (double x : coords)
      if (!std::isfinite(x)) throw DomainError("empirical measure: non-finite atom");
    if (probability && std::abs(total_mass() - 1.0) > 1e-12)
      throw MassError("empirical measure: weights do not sum to one");
  }

  static EmpiricalMeasure uniform(const std::vector<Vec3>& pts) {
    EmpiricalMeasure m;
    m.dim = 3;
    m.coords.reserve(3 * pts.size());
    for (const Vec3& p : pts) m.coords.insert(m.coords.end(), {p.x, p.y, p.z});
    m.weights.assign(pts.size(), pts.empty() ? 0.0 : 1.0 / static_cast<double>(pts.size()));
    return m;
  }

  static EmpiricalMeasure dirac(const Vec3& p, double w = 1.0) {
    EmpiricalMeasure m = uniform({p});
    m.weights[0] = w;
    return m;
  }

  /// (1/N) sum delta_{X_i}, with payload V_i so that flux() is j^N.
  static EmpiricalMeasure density(const ParticleConfiguration& c) {
    EmpiricalMeasure m = uniform(c.positions);
    m.payload = c.velocities;
    return m;
  }

  /// (1/N) sum delta_{(X_i, V_i)} in R^6.
  static EmpiricalMeasure phase(const ParticleConfiguration& c) {
    EmpiricalMeasure m;
    m.dim = 6;
    for (std::size_t i = 0; i < c.n(); ++i) {
      const Vec3& x = c.positions[i];
      const Vec3& v = c.velocities[i];
      m.coords.insert(m.coords.end(), {x.x, x.y, x.z, v.x, v.y, v.z});
    }
    m.weights.assign(c.n(), c.n() ? 1.0 / static_cast<double>(c.n()) : 0.0);
    return m;
  }
};

/// Finite signed measure on R^3 (atoms with real weights).
struct SignedMeasure {
  std::vector<Vec3> points;
  std::vector<double> weights;

  std::size_t size() const { return points.size(); }
  double total_variation() const {
    double s = 0;
    for (double w : weights) s += std::abs(w);
    return s;
  }

  static SignedMeasure from(const EmpiricalMeasure& m, double sign = 1.0) {
    if (m.dim != 3) throw DomainError("signed measure: atoms must be 3-dimensional");
    SignedMeasure s;
    for (std::size_t i = 0; i < m.size(); ++i) {
      const auto a = m.atom(i);
      s.points.push_back({a[0], a[1], a[2]});
      s.weights.push_back(sign * m.weights[i]);
    }
    return s;
  }

  /// Component alpha of the flux sum_i w_i payload_i delta_i.
  static SignedMeasure flux_component(const EmpiricalMeasure& m, int alpha) {
    if (!m.has_payload()) throw DomainError("flux measure: payload missing");
    SignedMeasure s = from(m);
    for (std::size_t i = 0; i < s.size(); ++i) s.weights[i] *= m.payload[i][alpha];
    return s;
  }

  /// this - other
  SignedMeasure minus(const SignedMeasure& other) const {
    SignedMeasure s = *this;
    s.points.insert(s.points.end(), other.points.begin(), other.points.end());
    for (double w : other.weights) s.weights.push_back(-w);
    return s;
  }

  SignedMeasure scaled(double c) const {
    SignedMeasure s = *this;
    for (double& w : s.weights) w *= c;
    return s;
  }
};

}  // namespace sblab
