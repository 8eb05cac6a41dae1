#pragma once

#include <cstdint>
#include <random>

#include "sblab/core/vec3.hpp"

namespace sblab {

/// SplitMix64 finalizer; bijective on 64-bit words.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Counter-based seed derivation: replica r of a stream keyed by master.
/// Independent of evaluation order.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream, std::uint64_t r = 0) {
  return splitmix64(splitmix64(splitmix64(master) ^ (stream * 0xd6e8feb86659fd93ULL)) + r);
}

using Engine = std::mt19937_64;

/// Uniform double in [0,1) built from 53 random bits. Used instead of
/// std::uniform_real_distribution so streams are identical across standard libraries.
inline double uniform01(Engine& g) { return static_cast<double>(g() >> 11) * 0x1.0p-53; }

/// Standard normal draw (Marsaglia polar method), portable across libraries.
inline double standard_normal(Engine& g) {
  for (;;) {
    const double u = 2.0 * uniform01(g) - 1.0;
    const double v = 2.0 * uniform01(g) - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

inline Vec3 uniform_in_box(Engine& g, const Box& b) {
  const Vec3 e = b.extent();
  const double ux = uniform01(g);
  const double uy = uniform01(g);
  const double uz = uniform01(g);
  return {b.lo.x + ux * e.x, b.lo.y + uy * e.y, b.lo.z + uz * e.z};
}

/// Uniform point on the unit sphere.
inline Vec3 uniform_on_sphere(Engine& g) {
  const double zc = 2.0 * uniform01(g) - 1.0;
  const double phi = 2.0 * pi * uniform01(g);
  const double s = std::sqrt(std::fmax(0.0, 1.0 - zc * zc));
  return {s * std::cos(phi), s * std::sin(phi), zc};
}

}  // namespace sblab
