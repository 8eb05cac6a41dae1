#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <vector>

#include "sblab/core/errors.hpp"
#include "sblab/core/random.hpp"
#include "sblab/core/statistics.hpp"
#include "sblab/sampling/sampler.hpp"

namespace sblab {

struct A1Diagnostics {
  // sup of the one-particle position marginal (Gaussian KDE, Scott bandwidth)
  double c1_hat = 0.0;
  double c1_stderr = 0.0;
  double c1_bandwidth = 0.0;
  // E[(1 + |v|^2)^(k0/2)] under the one-particle marginal
  double c2_hat = 0.0;
  double c2_stderr = 0.0;
  double k0 = 5.0;
  // sup over binned position pairs of the |v_1|-weighted pair density
  double c3_hat = 0.0;
  double c3_stderr = 0.0;
  double c3_bin_width = 0.0;
  std::size_t configurations = 0;
};

/// Draws `reps` configurations from Pi^N[f] and estimates the constants of
/// the regularity assumptions on the laws F^N. Estimates of sups are biased
/// (finite-sample noise pushes them up, smoothing pushes them down); all are
/// reported with their smoothing scale.
inline A1Diagnostics assumption_A1_diagnostics(const PhaseDensity& f, std::size_t n, std::size_t reps,
                                               std::uint64_t seed, double k0 = 5.0,
                                               std::uint64_t max_attempts = 100000) {
  if (reps < 100) throw SaturationError("assumption_A1_diagnostics: need >= 100 accepted configurations", reps);
  if (n < 2) throw ParameterError("assumption_A1_diagnostics: need n >= 2 for pair statistics");
  std::vector<Vec3> xs;
  std::vector<double> moment_samples;
  struct PairSample {
    Vec3 x1, x2;
    double speed1;
  };
  std::vector<PairSample> pairs;
  xs.reserve(reps * n);
  for (std::size_t r = 0; r < reps; ++r) {
    auto [c, rep] = sample_conditioned(f, n, derive_seed(seed, 0xA1, r), max_attempts);
    for (std::size_t i = 0; i < n; ++i) {
      xs.push_back(c.positions[i]);
      moment_samples.push_back(std::pow(1.0 + norm2(c.velocities[i]), k0 / 2.0));
    }
    for (std::size_t i = 0; i + 1 < n; i += 2) pairs.push_back({c.positions[i], c.positions[i + 1], norm(c.velocities[i])});
  }
  A1Diagnostics d;
  d.configurations = reps;
  d.k0 = k0;

  // C1: Gaussian KDE of the pooled positions, maximised over interior nodes.
  {
    const double m = static_cast<double>(xs.size());
    Vec3 mean{}, var{};
    for (const Vec3& x : xs) mean += x / m;
    for (const Vec3& x : xs) {
      const Vec3 dx = x - mean;
      var += Vec3{dx.x * dx.x, dx.y * dx.y, dx.z * dx.z} / m;
    }
    const double sd = std::sqrt((var.x + var.y + var.z) / 3.0);
    const double h = sd * std::pow(m, -1.0 / 7.0);
    d.c1_bandwidth = h;
    const Box& b = f.support;
    const CellList cells(xs, 4.0 * h);
    const double norm_c = 1.0 / (m * std::pow(2.0 * pi * h * h, 1.5));
    constexpr int grid = 5;
    for (int a = 0; a < grid; ++a)
      for (int bb = 0; bb < grid; ++bb)
        for (int c = 0; c < grid; ++c) {
          const Vec3 lo = b.lo + Vec3{2 * h, 2 * h, 2 * h};
          const Vec3 hi = b.hi - Vec3{2 * h, 2 * h, 2 * h};
          const auto t = [&](int k, double l, double u) { return l + (u - l) * (k + 0.5) / grid; };
          const Vec3 q{t(a, lo.x, hi.x), t(bb, lo.y, hi.y), t(c, lo.z, hi.z)};
          double s = 0.0;
          cells.for_each_near(xs, q, 4.0 * h, [&](std::size_t, double dist) { s += std::exp(-0.5 * dist * dist / (h * h)); });
          const double est = s * norm_c;
          if (est > d.c1_hat) {
            d.c1_hat = est;
            // pointwise KDE standard deviation sqrt(f R(K) / (m h^3)), R(K) = (4 pi)^(-3/2)
            d.c1_stderr = std::sqrt(est / (m * h * h * h * std::pow(4.0 * pi, 1.5)));
          }
        }
  }

  const MeanEstimate c2 = mean_and_stderr(moment_samples);
  d.c2_hat = c2.mean;
  d.c2_stderr = c2.std_error;

  // C3: |v_1|-weighted density of (x_1, x_2) on a 3x3x3 grid per particle.
  {
    constexpr int bins = 3;
    const Box& b = f.support;
    const Vec3 ext = b.extent();
    d.c3_bin_width = std::max({ext.x, ext.y, ext.z}) / bins;
    const double cell_vol = (ext.x / bins) * (ext.y / bins) * (ext.z / bins);
    auto bin = [&](const Vec3& x) {
      auto one = [&](double v, double lo, double e) {
        return std::clamp(static_cast<int>(std::floor((v - lo) / e * bins)), 0, bins - 1);
      };
      return one(x.x, b.lo.x, ext.x) + bins * (one(x.y, b.lo.y, ext.y) + bins * one(x.z, b.lo.z, ext.z));
    };
    std::map<std::pair<int, int>, std::pair<double, double>> acc;  // sum, sum of squares
    for (const auto& p : pairs) {
      auto& s = acc[{bin(p.x1), bin(p.x2)}];
      s.first += p.speed1;
      s.second += p.speed1 * p.speed1;
    }
    const double total = static_cast<double>(pairs.size());
    const double scale = 1.0 / (total * cell_vol * cell_vol);
    for (const auto& [key, s] : acc) {
      const double est = s.first * scale;
      if (est >= d.c3_hat) {
        d.c3_hat = est;
        d.c3_stderr = std::sqrt(s.second) * scale;
      }
    }
  }
  return d;
}

}  // namespace sblab
