#pragma once

#include <cmath>
#include <cstddef>
#include <limits>

#include "sblab/core/errors.hpp"
#include "sblab/geometry/configuration.hpp"
#include "sblab/geometry/covering.hpp"

namespace sblab {

/// Cell-size and cell-count thresholds M_N = n^beta, lambda_N = (eta M_N / n)^(1/3).
struct ConcentrationParameters {
  double cell_count = 0.0;  // M_N, real valued
  double cell_width = 0.0;  // lambda_N

  std::size_t cell_count_ceil() const { return static_cast<std::size_t>(std::ceil(cell_count - 1e-12)); }
};

inline void check_alpha(double alpha) {
  if (!(alpha > 2.0 / 3.0 && alpha < 1.0)) throw ParameterError("alpha must lie in (2/3, 1)");
}

inline ConcentrationParameters concentration_parameters(std::size_t n, double alpha, double beta, double eta) {
  if (n == 0) throw ParameterError("concentration_parameters: n must be positive");
  check_alpha(alpha);
  if (!(beta > 0.0 && beta < 0.5)) throw ParameterError("beta must lie in (0, 1/2)");
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ParameterError("eta must be positive and finite");
  const double nn = static_cast<double>(n);
  ConcentrationParameters p;
  p.cell_count = std::pow(nn, beta);
  p.cell_width = std::cbrt(eta * p.cell_count / nn);
  return p;
}

/// Thresholds used by the non-concentrated estimate: M_N = n^(3(1-alpha)/5)
/// and lambda = (eta M_N / n)^(1/3).
inline ConcentrationParameters concentration_parameters_theorem_mode(std::size_t n, double alpha, double eta) {
  if (n == 0) throw ParameterError("concentration_parameters: n must be positive");
  check_alpha(alpha);
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ParameterError("eta must be positive and finite");
  const double nn = static_cast<double>(n);
  ConcentrationParameters p;
  p.cell_count = std::pow(nn, 3.0 * (1.0 - alpha) / 5.0);
  p.cell_width = std::cbrt(eta * p.cell_count / nn);
  return p;
}

struct ConcentrationReport {
  double d_min = std::numeric_limits<double>::infinity();
  std::size_t max_cell_count = 0;        // maximised over the shifted grids
  std::size_t canonical_cell_count = 0;  // grid anchored at the region corner
  bool in_O_alpha = false;
  bool in_O_lambda_M = false;
  double alpha = 0.0, beta = 0.0, eta = 0.0;
  ConcentrationParameters thresholds;

  bool concentrated() const { return in_O_alpha || in_O_lambda_M; }
};

/// Flags close pairs (d_min < n^-alpha) and crowded cells (some cube of
/// width lambda_N holds at least ceil(M_N) centers). Crowding is tested on
/// the grid anchored at the region corner and its 7 half-cell shifts.
inline ConcentrationReport classify_concentration(const ParticleConfiguration& c, double alpha, double beta,
                                                  double eta) {
  ConcentrationReport r;
  r.alpha = alpha;
  r.beta = beta;
  r.eta = eta;
  const std::size_t n = c.n();
  r.thresholds = concentration_parameters(std::max<std::size_t>(n, 1), alpha, beta, eta);
  if (n >= 2) r.d_min = min_pair_distance(c);
  r.in_O_alpha = r.d_min < std::pow(static_cast<double>(n), -alpha);
  const double lam = r.thresholds.cell_width;
  for (int s = 0; s < 8; ++s) {
    const Vec3 shift{(s & 1) ? lam / 2 : 0.0, (s & 2) ? lam / 2 : 0.0, (s & 4) ? lam / 2 : 0.0};
    const std::size_t m = max_cell_occupancy(c.positions, c.region.lo + shift, lam);
    if (s == 0) r.canonical_cell_count = m;
    r.max_cell_count = std::max(r.max_cell_count, m);
  }
  r.in_O_lambda_M = n > 0 && r.max_cell_count >= r.thresholds.cell_count_ceil();
  return r;
}

}  // namespace sblab
