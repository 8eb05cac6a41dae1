#pragma once

#include <cmath>

namespace sblab {

/// Smooth step: 0 for t <= 0, 1 for t >= 1, C-infinity in between
/// (psi(t) / (psi(t) + psi(1 - t)) with psi(t) = exp(-1/t)).
inline double smooth_step(double t) {
  if (t <= 0.0) return 0.0;
  if (t >= 1.0) return 1.0;
  const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
  return a / (a + b);
}

inline double smooth_step_derivative(double t) {
  if (t <= 0.0 || t >= 1.0) return 0.0;
  const double a = std::exp(-1.0 / t), b = std::exp(-1.0 / (1.0 - t));
  const double da = a / (t * t), db = -b / ((1.0 - t) * (1.0 - t));
  return (da * (a + b) - a * (da + db)) / ((a + b) * (a + b));
}

}  // namespace sblab
