#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <unordered_map>
#include <utility>
#include <vector>

#include "sblab/core/errors.hpp"
#include "sblab/core/vec3.hpp"

namespace sblab {

/// Uniform bucket grid over a point set for short-range pair queries.
class CellList {
 public:
  CellList(const std::vector<Vec3>& points, double width) : width_(width) {
    if (!(width > 0.0) || !std::isfinite(width)) throw ParameterError("CellList: width must be positive");
    order_.resize(points.size());
    std::iota(order_.begin(), order_.end(), std::size_t{0});
    keys_.resize(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) keys_[i] = key(cell_of(points[i]));
    std::stable_sort(order_.begin(), order_.end(), [&](std::size_t a, std::size_t b) { return keys_[a] < keys_[b]; });
    std::size_t start = 0;
    while (start < order_.size()) {
      std::size_t end = start;
      const std::uint64_t k = keys_[order_[start]];
      while (end < order_.size() && keys_[order_[end]] == k) ++end;
      ranges_.emplace(k, std::make_pair(start, end));
      start = end;
    }
  }

  double width() const { return width_; }

  std::array<std::int64_t, 3> cell_of(const Vec3& p) const {
    return {static_cast<std::int64_t>(std::floor(p.x / width_)), static_cast<std::int64_t>(std::floor(p.y / width_)),
            static_cast<std::int64_t>(std::floor(p.z / width_))};
  }

  /// Calls fn(i, j, d) once for every unordered pair i < j with d = |p_i - p_j| <= reach.
  template <typename Fn>
  void for_each_pair_within(const std::vector<Vec3>& points, double reach, Fn&& fn) const {
    const std::int64_t span = static_cast<std::int64_t>(std::ceil(reach / width_));
    for (std::size_t a = 0; a < points.size(); ++a) {
      const auto c = cell_of(points[a]);
      for (std::int64_t dx = -span; dx <= span; ++dx)
        for (std::int64_t dy = -span; dy <= span; ++dy)
          for (std::int64_t dz = -span; dz <= span; ++dz) {
            const auto it = ranges_.find(key({c[0] + dx, c[1] + dy, c[2] + dz}));
            if (it == ranges_.end()) continue;
            for (std::size_t s = it->second.first; s < it->second.second; ++s) {
              const std::size_t b = order_[s];
              if (b <= a) continue;
              const double d = distance(points[a], points[b]);
              if (d <= reach) fn(a, b, d);
            }
          }
    }
  }

  /// Calls fn(j, d) for every indexed point j with |q - p_j| <= reach.
  template <typename Fn>
  void for_each_near(const std::vector<Vec3>& points, const Vec3& q, double reach, Fn&& fn) const {
    const std::int64_t span = static_cast<std::int64_t>(std::ceil(reach / width_));
    const auto c = cell_of(q);
    for (std::int64_t dx = -span; dx <= span; ++dx)
      for (std::int64_t dy = -span; dy <= span; ++dy)
        for (std::int64_t dz = -span; dz <= span; ++dz) {
          const auto it = ranges_.find(key({c[0] + dx, c[1] + dy, c[2] + dz}));
          if (it == ranges_.end()) continue;
          for (std::size_t s = it->second.first; s < it->second.second; ++s) {
            const std::size_t b = order_[s];
            const double d = distance(q, points[b]);
            if (d <= reach) fn(b, d);
          }
        }
  }

 private:
  static std::uint64_t key(const std::array<std::int64_t, 3>& c) {
    constexpr std::int64_t bias = std::int64_t{1} << 20;
    const auto u = [](std::int64_t v) { return static_cast<std::uint64_t>((v + bias) & 0x1fffff); };
    return (u(c[0]) << 42) | (u(c[1]) << 21) | u(c[2]);
  }

  double width_;
  std::vector<std::size_t> order_;
  std::vector<std::uint64_t> keys_;
  std::unordered_map<std::uint64_t, std::pair<std::size_t, std::size_t>> ranges_;
};

}  // namespace sblab
