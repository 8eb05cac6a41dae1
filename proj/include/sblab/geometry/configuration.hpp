#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "sblab/core/errors.hpp"
#include "sblab/core/vec3.hpp"
#include "sblab/geometry/cell_list.hpp"

namespace sblab {

/// A static cloud of n spheres of radius 1/n with rigid velocities.
struct ParticleConfiguration {
  std::vector<Vec3> positions;
  std::vector<Vec3> velocities;
  Box region{};  // the bounded container holding all centers

  ParticleConfiguration() = default;
  ParticleConfiguration(std::vector<Vec3> pos, std::vector<Vec3> vel, Box region_ = Box{})
      : positions(std::move(pos)), velocities(std::move(vel)), region(region_) {
    if (positions.size() != velocities.size())
      throw DomainError("configuration: positions and velocities differ in length");
  }

  std::size_t n() const { return positions.size(); }
  double radius() const { return positions.empty() ? 0.0 : 1.0 / static_cast<double>(n()); }
};

/// Outcome of validate_configuration; pairs and indices are zero-based.
struct ValidationResult {
  std::vector<std::pair<std::size_t, std::size_t>> overlapping_pairs;
  std::vector<std::size_t> outside_region;

  bool ok() const { return overlapping_pairs.empty() && outside_region.empty(); }
};

/// Checks membership in the admissible set: every pair of centers farther
/// apart than 2/n and every center inside the region.
inline ValidationResult validate_configuration(const ParticleConfiguration& c) {
  ValidationResult r;
  const std::size_t n = c.n();
  for (std::size_t i = 0; i < n; ++i)
    if (!c.region.contains(c.positions[i]) || !is_finite(c.positions[i])) r.outside_region.push_back(i);
  if (n < 2) return r;
  const double contact = 2.0 / static_cast<double>(n);
  const CellList cells(c.positions, contact);
  cells.for_each_pair_within(c.positions, contact, [&](std::size_t i, std::size_t j, double d) {
    if (d <= contact) r.overlapping_pairs.emplace_back(std::min(i, j), std::max(i, j));
  });
  std::sort(r.overlapping_pairs.begin(), r.overlapping_pairs.end());
  return r;
}

inline void require_valid(const ParticleConfiguration& c) {
  const ValidationResult v = validate_configuration(c);
  if (!v.ok()) {
    throw ValidationError("configuration violates the admissible set: " +
                          std::to_string(v.overlapping_pairs.size()) + " overlapping pair(s), " +
                          std::to_string(v.outside_region.size()) + " center(s) outside the region");
  }
}

/// O(n^2) reference scan of the minimal center distance.
inline double min_pair_distance_bruteforce(const std::vector<Vec3>& p) {
  if (p.size() < 2) throw DomainError("min_pair_distance: need at least two particles");
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < p.size(); ++i)
    for (std::size_t j = i + 1; j < p.size(); ++j) best = std::min(best, distance(p[i], p[j]));
  return best;
}

/// Cell-bucketed minimal center distance. Exact: if the best candidate found
/// among neighbouring cells is no larger than the cell width, no farther pair
/// can beat it; otherwise the width is doubled and the scan repeated.
inline double min_pair_distance(const std::vector<Vec3>& p) {
  if (p.size() < 2) throw DomainError("min_pair_distance: need at least two particles");
  Vec3 lo = p.front(), hi = p.front();
  for (const Vec3& x : p) {
    lo = {std::min(lo.x, x.x), std::min(lo.y, x.y), std::min(lo.z, x.z)};
    hi = {std::max(hi.x, x.x), std::max(hi.y, x.y), std::max(hi.z, x.z)};
  }
  const double extent = max_abs(hi - lo);
  if (extent == 0.0) return 0.0;
  double width = extent / std::cbrt(static_cast<double>(p.size()));
  for (;;) {
    double best = std::numeric_limits<double>::infinity();
    const CellList cells(p, width);
    cells.for_each_pair_within(p, width, [&](std::size_t, std::size_t, double d) { best = std::min(best, d); });
    if (best <= width) return best;
    width *= 2.0;
  }
}

inline double min_pair_distance(const ParticleConfiguration& c) { return min_pair_distance(c.positions); }

/// For each sphere, the number of spheres j (itself included) whose balls of
/// radius 3/(2n) intersect its own, i.e. |X_i - X_j| < 3/n.
inline std::vector<int> neighbor_counts(const ParticleConfiguration& c) {
  require_valid(c);
  const std::size_t n = c.n();
  std::vector<int> counts(n, 1);
  if (n < 2) return counts;
  const double reach = 3.0 / static_cast<double>(n);
  const CellList cells(c.positions, reach);
  cells.for_each_pair_within(c.positions, reach, [&](std::size_t i, std::size_t j, double d) {
    if (d < reach) {
      ++counts[i];
      ++counts[j];
    }
  });
  return counts;
}

}  // namespace sblab
