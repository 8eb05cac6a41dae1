#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "sblab/core/errors.hpp"
#include "sblab/core/random.hpp"
#include "sblab/core/statistics.hpp"
#include "sblab/geometry/configuration.hpp"
#include "sblab/sampling/phase_density.hpp"

namespace sblab {

struct SamplerReport {
  double acceptance_rate = 0.0;
  std::uint64_t attempts = 0;
  std::uint64_t accepted = 0;
  double partition_estimate = 0.0;
  double partition_stderr = 0.0;
  std::uint64_t seed = 0;
};

/// n independent draws from f; deterministic given the seed.
inline std::vector<PhasePoint> sample_iid(const PhaseDensity& f, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw ParameterError("sample_iid: n must be >= 1");
  Engine g(seed);
  std::vector<PhasePoint> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(f.sample(g));
  return out;
}

inline ParticleConfiguration to_configuration(const std::vector<PhasePoint>& pts, const Box& region) {
  ParticleConfiguration c;
  c.region = region;
  c.positions.reserve(pts.size());
  c.velocities.reserve(pts.size());
  for (const auto& p : pts) {
    c.positions.push_back(p.x);
    c.velocities.push_back(p.v);
  }
  return c;
}

namespace detail {

/// True iff all centers are pairwise farther apart than 2/n.
inline bool pairwise_admissible(const std::vector<Vec3>& x) {
  if (x.size() < 2) return true;
  const double contact = 2.0 / static_cast<double>(x.size());
  bool ok = true;
  const CellList cells(x, contact);
  cells.for_each_pair_within(x, contact, [&](std::size_t, std::size_t, double d) {
    if (d <= contact) ok = false;
  });
  return ok;
}

}  // namespace detail

/// Exact draw from the conditioned law Pi^N[f]: i.i.d. tuples from f are
/// rejected until one lands in the admissible set.
inline std::pair<ParticleConfiguration, SamplerReport> sample_conditioned(const PhaseDensity& f, std::size_t n,
                                                                          std::uint64_t seed,
                                                                          std::uint64_t max_attempts = 100000) {
  if (n == 0) throw ParameterError("sample_conditioned: n must be >= 1");
  if (n >= 2 && f.single_site())
    throw ParameterError("sample_conditioned: a single-site position law admits no configuration with n >= 2");
  Engine g(seed);
  SamplerReport rep;
  rep.seed = seed;
  std::vector<Vec3> x(n), v(n);
  for (rep.attempts = 1; rep.attempts <= max_attempts; ++rep.attempts) {
    for (std::size_t i = 0; i < n; ++i) {
      const PhasePoint p = f.sample(g);
      x[i] = p.x;
      v[i] = p.v;
    }
    if (detail::pairwise_admissible(x)) {
      rep.accepted = 1;
      rep.acceptance_rate = 1.0 / static_cast<double>(rep.attempts);
      rep.partition_estimate = rep.acceptance_rate;
      return {ParticleConfiguration(std::move(x), std::move(v), f.support), rep};
    }
  }
  throw SaturationError("sample_conditioned: no admissible configuration within max_attempts", max_attempts);
}

struct PartitionEstimate {
  double estimate = 0.0;  // fraction of i.i.d. tuples in the admissible set
  double std_error = 0.0;
  std::size_t trials = 0;
  double lower_bound = 0.0;  // (1 - 8 c0 n^-2 |rho|_inf)^n
  bool bound_consistent = false;  // estimate >= lower_bound - 3 SE
};

/// Monte-Carlo estimate of the partition function W_N(f).
inline PartitionEstimate estimate_partition(const PhaseDensity& f, std::size_t n, std::size_t trials,
                                            std::uint64_t seed) {
  if (trials < 100) throw ParameterError("estimate_partition: need >= 100 trials");
  if (n == 0) throw ParameterError("estimate_partition: n must be >= 1");
  Engine g(seed);
  std::size_t hits = 0;
  std::vector<Vec3> x(n);
  for (std::size_t t = 0; t < trials; ++t) {
    for (auto& xi : x) xi = f.sample(g).x;
    if (detail::pairwise_admissible(x)) ++hits;
  }
  PartitionEstimate e;
  e.trials = trials;
  e.estimate = static_cast<double>(hits) / static_cast<double>(trials);
  e.std_error = std::sqrt(e.estimate * (1.0 - e.estimate) / static_cast<double>(trials));
  const double c0 = 4.0 * pi / 3.0;
  const double nn = static_cast<double>(n);
  const double base = 1.0 - 8.0 * c0 * f.rho_sup() / (nn * nn);
  e.lower_bound = base > 0.0 ? std::pow(base, nn) : 0.0;
  e.bound_consistent = e.estimate >= e.lower_bound - 3.0 * e.std_error;
  return e;
}

}  // namespace sblab
