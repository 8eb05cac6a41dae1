#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <span>
#include <vector>

#include "sblab/core/parallel.hpp"
#include "sblab/stokes/stokeslet.hpp"

namespace sblab {

// w(x) = sum_i G[b_i](x - X_i)

namespace detail {

inline void check_superposition(std::span<const Vec3> centers, std::span<const Vec3> values, double n) {
  if (centers.size() != values.size()) throw DomainError("superposition: centers and values differ in length");
  if (!(n > 0.0)) throw ParameterError("superposition: n must be positive");
}

/// Kernel with the same arithmetic as stokeslet_velocity.
inline Vec3 stokeslet_unchecked(const Vec3& b, const Vec3& d, double n) {
  if (d == Vec3{}) throw SingularityError("superposition: target coincides with a centre");
  const auto c = stokeslet_coefficients(norm(d), n);
  return c.alpha * b + (c.beta * dot(b, d)) * d;
}

}  // namespace detail

/// Direct O(#centers #targets) sum, parallel over targets.
inline std::vector<Vec3> superposition_field(std::span<const Vec3> centers, std::span<const Vec3> values, double n,
                                             std::span<const Vec3> targets, unsigned threads = 1) {
  detail::check_superposition(centers, values, n);
  std::vector<Vec3> out(targets.size());
  parallel_for(targets.size(), threads, [&](std::size_t t) {
    Vec3 s{};
    for (std::size_t i = 0; i < centers.size(); ++i) {
      if (values[i] == Vec3{}) {
        if (targets[t] == centers[i]) throw SingularityError("superposition: target coincides with a centre");
        continue;
      }
      s += detail::stokeslet_unchecked(values[i], targets[t] - centers[i], n);
    }
    out[t] = s;
  });
  return out;
}

/// Blocked path: centres are bucketed on a grid of the given width and each
/// target sums its own neighbourhood first and the remaining buckets in a
/// fixed order. Far buckets whose strengths all vanish are skipped. Every
/// interaction is still evaluated exactly; no far-field truncation is made.
inline std::vector<Vec3> superposition_field_blocked(std::span<const Vec3> centers, std::span<const Vec3> values,
                                                     double n, std::span<const Vec3> targets, double cell_width,
                                                     unsigned threads = 1) {
  detail::check_superposition(centers, values, n);
  if (!(cell_width > 0.0)) throw ParameterError("superposition: cell width must be positive");
  struct Block {
    std::vector<Vec3> x, b;
    bool zero = true;
  };
  std::vector<std::array<long long, 3>> keys(centers.size());
  auto cell = [&](const Vec3& p) {
    return std::array<long long, 3>{static_cast<long long>(std::floor(p.x / cell_width)),
                                    static_cast<long long>(std::floor(p.y / cell_width)),
                                    static_cast<long long>(std::floor(p.z / cell_width))};
  };
  for (std::size_t i = 0; i < centers.size(); ++i) keys[i] = cell(centers[i]);
  std::vector<std::size_t> order(centers.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return keys[a] < keys[b]; });
  std::vector<Block> blocks;
  for (std::size_t s = 0; s < order.size(); ++s) {
    const std::size_t i = order[s];
    if (s == 0 || keys[i] != keys[order[s - 1]]) blocks.emplace_back();
    blocks.back().x.push_back(centers[i]);
    blocks.back().b.push_back(values[i]);
    if (values[i] != Vec3{}) blocks.back().zero = false;
  }
  std::vector<Vec3> out(targets.size());
  parallel_for(targets.size(), threads, [&](std::size_t t) {
    Vec3 s{};
    for (const Block& blk : blocks) {
      if (blk.zero) {
        for (const Vec3& x : blk.x)
          if (x == targets[t]) throw SingularityError("superposition: target coincides with a centre");
        continue;
      }
      for (std::size_t k = 0; k < blk.x.size(); ++k) s += detail::stokeslet_unchecked(blk.b[k], targets[t] - blk.x[k], n);
    }
    out[t] = s;
  });
  return out;
}

/// Gradient of the superposition, grad[i][k] = d w_i / d x_k.
inline std::vector<Mat3> superposition_gradient(std::span<const Vec3> centers, std::span<const Vec3> values, double n,
                                                std::span<const Vec3> targets, unsigned threads = 1) {
  detail::check_superposition(centers, values, n);
  std::vector<Mat3> out(targets.size());
  parallel_for(targets.size(), threads, [&](std::size_t t) {
    Mat3 g{};
    for (std::size_t i = 0; i < centers.size(); ++i) g += stokeslet_gradient(values[i], targets[t] - centers[i], n);
    out[t] = g;
  });
  return out;
}

}  // namespace sblab
