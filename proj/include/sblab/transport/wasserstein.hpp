#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "sblab/core/errors.hpp"
#include "sblab/core/random.hpp"
#include "sblab/core/statistics.hpp"
#include "sblab/transport/assignment.hpp"
#include "sblab/transport/empirical_measure.hpp"
#include "sblab/transport/network_simplex.hpp"

namespace sblab {

inline double euclid(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t d = 0; d < a.size(); ++d) s += (a[d] - b[d]) * (a[d] - b[d]);
  return std::sqrt(s);
}

/// Exact W1 between two discrete measures of equal mass with Euclidean
/// ground cost. Equal-count uniform weights go to the assignment solver,
/// everything else to the network simplex.
inline double w1_discrete(const EmpiricalMeasure& mu, const EmpiricalMeasure& nu, bool probability = true) {
  if (mu.empty() || nu.empty()) throw DomainError("w1_discrete: empty measure");
  if (mu.dim != nu.dim) throw DomainError("w1_discrete: dimension mismatch");
  mu.check(probability);
  nu.check(probability);
  const double pm = mu.total_mass(), pn = nu.total_mass();
  if (std::abs(pm - pn) > 1e-9 * std::max(1.0, pm)) throw MassError("w1_discrete: total masses differ");
  const int dim = mu.dim;
  if (mu.size() == nu.size() && mu.uniform_weights() && nu.uniform_weights()) {
    const std::size_t n = mu.size();
    const double* a = mu.coords.data();
    const double* b = nu.coords.data();
    auto cost = [&](std::size_t i, std::size_t j) {
      const double* p = a + i * dim;
      const double* q = b + j * dim;
      double s = 0;
      for (int d = 0; d < dim; ++d) s += (p[d] - q[d]) * (p[d] - q[d]);
      return std::sqrt(s);
    };
    auto r = solve_assignment_rows(
        n, [&](std::size_t i, double* out) {
          for (std::size_t j = 0; j < n; ++j) out[j] = cost(i, j);
        },
        cost);
    double c = 0;
    for (std::size_t i = 0; i < n; ++i) c += euclid(mu.atom(i), nu.atom(r.col_for_row[i]));
    return c * mu.weights.front();
  }
  return solve_transport(mu.weights, nu.weights, [&](std::size_t i, std::size_t j) {
           return euclid(mu.atom(i), nu.atom(j));
         }).cost;
}

/// Estimator of W1(mu, rho) for a continuous law: the law is replaced by
/// m_ref i.i.d. draws (uniform weights); reps independent references give a
/// mean and standard error. The estimate is biased upwards, with bias
/// vanishing as m_ref grows.
inline MeanEstimate w1_empirical_vs_density(const EmpiricalMeasure& mu, const std::function<Vec3(Engine&)>& draw,
                                            std::size_t m_ref, std::size_t reps, std::uint64_t seed) {
  if (mu.dim != 3) throw DomainError("w1_empirical_vs_density: positions must be 3-dimensional");
  if (m_ref < mu.size()) throw ParameterError("w1_empirical_vs_density: m_ref must be >= atom count");
  if (reps == 0) throw ParameterError("w1_empirical_vs_density: reps must be >= 1");
  std::vector<double> vals;
  for (std::size_t r = 0; r < reps; ++r) {
    Engine g(derive_seed(seed, 0x317, r));
    std::vector<Vec3> ref(m_ref);
    for (auto& y : ref) y = draw(g);
    vals.push_back(w1_discrete(mu, EmpiricalMeasure::uniform(ref)));
  }
  return mean_and_stderr(vals);
}

}  // namespace sblab
