#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <vector>

#include "sblab/core/errors.hpp"
#include "sblab/geometry/configuration.hpp"

namespace sblab {

using CellIndex = std::array<std::int64_t, 3>;

/// Partition of the particles into cubes of width lambda anchored at
/// region.lo + grid_offset, with the corridor (particles closer than
/// lambda/delta to a cube face) bookkept for the covering bound.
struct CellCovering {
  double cell_width = 0.0;
  Vec3 grid_offset{};
  std::map<CellIndex, std::vector<std::size_t>> occupancy;
  double corridor_fraction = 0.0;  // 1/delta
  std::vector<std::size_t> corridor;
  double corridor_mass = 0.0;  // (1/n) sum over the corridor of (1 + |V|^2)
  double total_mass = 0.0;     // (1/n) sum over all particles of (1 + |V|^2)
  bool bound_satisfied = false;

  std::size_t max_occupancy() const {
    std::size_t m = 0;
    for (const auto& [k, v] : occupancy) m = std::max(m, v.size());
    return m;
  }
};

inline CellIndex cell_index(const Vec3& x, const Vec3& anchor, double width) {
  const Vec3 r = x - anchor;
  return {static_cast<std::int64_t>(std::floor(r.x / width)), static_cast<std::int64_t>(std::floor(r.y / width)),
          static_cast<std::int64_t>(std::floor(r.z / width))};
}

/// Distance from x to the nearest face of the grid of cubes of the given width.
inline double distance_to_cell_faces(const Vec3& x, const Vec3& anchor, double width) {
  double best = std::numeric_limits<double>::infinity();
  for (int a = 0; a < 3; ++a) {
    const double t = (x[a] - anchor[a]) - width * std::floor((x[a] - anchor[a]) / width);
    best = std::min(best, std::min(t, width - t));
  }
  return best;
}

/// Largest number of centers in a single cube of the grid anchored at anchor.
inline std::size_t max_cell_occupancy(const std::vector<Vec3>& positions, const Vec3& anchor, double width) {
  std::map<CellIndex, std::size_t> counts;
  std::size_t best = 0;
  for (const Vec3& x : positions) best = std::max(best, ++counts[cell_index(x, anchor, width)]);
  return best;
}

namespace detail {

inline CellCovering covering_at(const ParticleConfiguration& c, double lambda, double delta, const Vec3& offset) {
  CellCovering cov;
  cov.cell_width = lambda;
  cov.grid_offset = offset;
  cov.corridor_fraction = 1.0 / delta;
  const Vec3 anchor = c.region.lo + offset;
  const double n = static_cast<double>(c.n());
  for (std::size_t i = 0; i < c.n(); ++i) {
    const Vec3& x = c.positions[i];
    cov.occupancy[cell_index(x, anchor, lambda)].push_back(i);
    const double w = 1.0 + norm2(c.velocities[i]);
    cov.total_mass += w / n;
    if (distance_to_cell_faces(x, anchor, lambda) < lambda / delta) {
      cov.corridor.push_back(i);
      cov.corridor_mass += w / n;
    }
  }
  cov.bound_satisfied = cov.corridor_mass <= (12.0 / delta) * cov.total_mass;
  return cov;
}

}  // namespace detail

/// Scans offsets on a k x k x k grid inside one cell (k^3 ~ offset_trials)
/// and keeps the one with the smallest corridor mass. bound_satisfied
/// reports whether the chosen offset meets
///   (1/n) sum_{corridor} (1+|V|^2) <= (12/delta) (1/n) sum_i (1+|V|^2).
inline CellCovering build_covering(const ParticleConfiguration& c, double lambda, double delta,
                                   std::size_t offset_trials = 1000) {
  if (!(lambda > 0.0)) throw ParameterError("build_covering: lambda must be positive");
  if (!(delta > 0.5)) throw ParameterError("build_covering: delta must exceed 1/2");
  if (offset_trials == 0) throw ParameterError("build_covering: need at least one offset trial");
  std::size_t k = 1;
  while ((k + 1) * (k + 1) * (k + 1) <= offset_trials) ++k;
  const Vec3 lo = c.region.lo;
  double best_mass = std::numeric_limits<double>::infinity();
  Vec3 best_offset{};
  const double s = lambda / static_cast<double>(k);
  for (std::size_t a = 0; a < k; ++a)
    for (std::size_t b = 0; b < k; ++b)
      for (std::size_t d = 0; d < k; ++d) {
        const Vec3 offset{s * static_cast<double>(a), s * static_cast<double>(b), s * static_cast<double>(d)};
        double mass = 0.0;
        for (std::size_t i = 0; i < c.n(); ++i)
          if (distance_to_cell_faces(c.positions[i], lo + offset, lambda) < lambda / delta)
            mass += 1.0 + norm2(c.velocities[i]);
        if (mass < best_mass) {
          best_mass = mass;
          best_offset = offset;
        }
      }
  CellCovering best = detail::covering_at(c, lambda, delta, best_offset);
  return best;
}

}  // namespace sblab
