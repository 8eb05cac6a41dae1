#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "sblab/geometry/concentration.hpp"
#include "sblab/geometry/config_io.hpp"
#include "sblab/geometry/configuration.hpp"
#include "sblab/geometry/covering.hpp"
#include "sblab/sampling/sampler.hpp"

using namespace sblab;

namespace {

ParticleConfiguration make(std::vector<Vec3> x, Box b = Box{{-10, -10, -10}, {10, 10, 10}}) {
  std::vector<Vec3> v(x.size(), Vec3{});
  return ParticleConfiguration(std::move(x), std::move(v), b);
}

std::vector<Vec3> uniform_points(std::size_t n, std::uint64_t seed) {
  Engine g(seed);
  std::vector<Vec3> x(n);
  for (auto& p : x) p = uniform_in_box(g, Box{});
  return x;
}

}  // namespace

TEST(Validate, TwoSpheres) {
  EXPECT_TRUE(validate_configuration(make({{0, 0, 0}, {1.5, 0, 0}})).ok());
  const auto bad = validate_configuration(make({{0, 0, 0}, {0.9, 0, 0}}));
  ASSERT_EQ(bad.overlapping_pairs.size(), 1u);
  EXPECT_EQ(bad.overlapping_pairs[0], std::make_pair(std::size_t{0}, std::size_t{1}));
}

TEST(Validate, CubicLatticeMatchesExhaustiveScan) {
  const std::size_t n = 125;
  const double s = 3.0 / n;
  std::vector<Vec3> x;
  for (int i = 0; i < 5; ++i)
    for (int j = 0; j < 5; ++j)
      for (int k = 0; k < 5; ++k) x.push_back({0.2 + s * i, 0.2 + s * j, 0.2 + s * k});
  const auto c = make(x, Box{});
  bool oracle = true;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (distance(x[i], x[j]) <= 2.0 / n) oracle = false;
  EXPECT_TRUE(oracle);
  EXPECT_TRUE(validate_configuration(c).ok());
}

TEST(Validate, OutsideRegion) {
  const auto r = validate_configuration(make({{0.5, 0.5, 0.5}, {1.5, 0.5, 0.5}}, Box{}));
  ASSERT_EQ(r.outside_region.size(), 1u);
  EXPECT_EQ(r.outside_region[0], 1u);
}

TEST(Validate, PermutationInvariant) {
  auto x = uniform_points(300, 3);
  const auto c1 = make(x, Box{});
  std::mt19937 g(1);
  std::shuffle(x.begin(), x.end(), g);
  const auto c2 = make(x, Box{});
  EXPECT_EQ(validate_configuration(c1).ok(), validate_configuration(c2).ok());
  EXPECT_EQ(validate_configuration(c1).overlapping_pairs.size(), validate_configuration(c2).overlapping_pairs.size());
  EXPECT_EQ(min_pair_distance(c1), min_pair_distance(c2));
}

TEST(MinPairDistance, Examples) {
  EXPECT_DOUBLE_EQ(min_pair_distance(std::vector<Vec3>{{0, 0, 0}, {1.5, 0, 0}}), 1.5);
  EXPECT_NEAR(min_pair_distance(std::vector<Vec3>{{0, 0, 0}, {1, 0, 0}, {1.2, 0, 0}, {3, 0, 0}}), 0.2, 1e-15);
  EXPECT_THROW(min_pair_distance(std::vector<Vec3>{{0, 0, 0}}), DomainError);
}

TEST(MinPairDistance, BucketedEqualsBruteForce) {
  for (std::uint64_t s = 0; s < 20; ++s) {
    const auto x = uniform_points(500, 100 + s);
    EXPECT_EQ(min_pair_distance(x), min_pair_distance_bruteforce(x));
  }
  // clustered input: all but one point in a tiny ball
  auto x = uniform_points(200, 7);
  for (auto& p : x) p = 1e-4 * p;
  x.push_back({5, 5, 5});
  EXPECT_EQ(min_pair_distance(x), min_pair_distance_bruteforce(x));
  std::vector<Vec3> same(5, Vec3{0.3, 0.3, 0.3});
  EXPECT_EQ(min_pair_distance(same), 0.0);
}

TEST(ConcentrationParameters, Examples) {
  const auto p = concentration_parameters(1000, 0.8, 0.4, 0.1);
  EXPECT_NEAR(p.cell_count, std::pow(1000.0, 0.4), 1e-12);
  EXPECT_NEAR(p.cell_count, 15.849, 1e-3);
  EXPECT_NEAR(p.cell_width, std::cbrt(0.1 * std::pow(1000.0, 0.4) / 1000.0), 1e-15);
  EXPECT_NEAR(p.cell_width, 0.11665, 1e-4);
  const auto one = concentration_parameters(1, 0.8, 0.3, 1.0);
  EXPECT_DOUBLE_EQ(one.cell_count, 1.0);
  EXPECT_DOUBLE_EQ(one.cell_width, 1.0);
  EXPECT_NEAR(concentration_parameters_theorem_mode(1000, 0.8, 1.0).cell_count, 2.291, 1e-3);
  EXPECT_THROW(concentration_parameters(10, 0.5, 0.3, 1.0), ParameterError);
  EXPECT_THROW(concentration_parameters(10, 0.8, 0.6, 1.0), ParameterError);
  EXPECT_THROW(concentration_parameters(10, 0.8, 0.3, 0.0), ParameterError);
}

TEST(Covering, SingleParticleAndPair) {
  const auto one = build_covering(make({{0.5, 0.5, 0.5}}, Box{}), 2.0, 4.0);
  EXPECT_EQ(one.occupancy.size(), 1u);
  EXPECT_EQ(one.max_occupancy(), 1u);
  const auto two = build_covering(make({{0.1, 0.1, 0.1}, {0.12, 0.1, 0.1}}, Box{}), 0.5, 4.0, 1);
  ASSERT_EQ(two.occupancy.size(), 1u);
  EXPECT_EQ(two.occupancy.begin()->second.size(), 2u);
  EXPECT_THROW(build_covering(make({{0.5, 0.5, 0.5}}, Box{}), 0.0, 4.0), ParameterError);
  EXPECT_THROW(build_covering(make({{0.5, 0.5, 0.5}}, Box{}), 1.0, 0.5), ParameterError);
}

TEST(Covering, CorridorBoundOnUniformCloud) {
  auto c = make(uniform_points(1000, 11), Box{});
  Engine g(5);
  for (auto& v : c.velocities) v = Vec3{standard_normal(g), standard_normal(g), standard_normal(g)};
  const auto cov = build_covering(c, 0.2, 4.0, 1000);
  // independent exhaustive scan on the same 10^3 offsets
  double best = 1e300;
  for (int a = 0; a < 10; ++a)
    for (int b = 0; b < 10; ++b)
      for (int d = 0; d < 10; ++d) {
        const Vec3 off{0.02 * a, 0.02 * b, 0.02 * d};
        double m = 0;
        for (std::size_t i = 0; i < c.n(); ++i) {
          double dist = 1e300;
          for (int ax = 0; ax < 3; ++ax) {
            const double t = std::fmod(c.positions[i][ax] - off[ax] + 10.0 * 0.2, 0.2);
            dist = std::min({dist, t, 0.2 - t});
          }
          if (dist < 0.05) m += (1 + norm2(c.velocities[i])) / 1000.0;
        }
        best = std::min(best, m);
      }
  EXPECT_NEAR(cov.corridor_mass, best, 1e-9);
  EXPECT_LE(cov.corridor_mass, 3.0 * cov.total_mass);
  EXPECT_TRUE(cov.bound_satisfied);
  std::size_t total = 0;
  for (const auto& [k, v] : cov.occupancy) total += v.size();
  EXPECT_EQ(total, c.n());
}

TEST(Concentration, Classify) {
  const auto r = classify_concentration(make({{0, 0, 0}, {1.5, 0, 0}}), 0.8, 0.3, 1.0);
  EXPECT_FALSE(r.in_O_alpha);
  auto x = uniform_points(100, 4);
  x[1] = x[0] + Vec3{1e-3, 0, 0};
  const auto c = make(x, Box{});
  EXPECT_TRUE(classify_concentration(c, 0.8, 0.4, 0.1).in_O_alpha);
  // all 100 particles in one cell of width lambda_N
  const auto p = concentration_parameters(100, 0.8, 0.4, 1.0);
  std::vector<Vec3> packed;
  for (int i = 0; i < 100; ++i) packed.push_back({0.1 + 0.1 * p.cell_width * (i % 5), 0.1 + 0.1 * p.cell_width * ((i / 5) % 5), 0.1 + 0.1 * p.cell_width * (i / 25)});
  const auto rep = classify_concentration(make(packed, Box{}), 0.8, 0.4, 1.0);
  EXPECT_TRUE(rep.in_O_lambda_M);
  EXPECT_GE(rep.max_cell_count, 1u);
}

TEST(Concentration, MonotoneInAlphaAndMatchesCovering) {
  for (std::uint64_t s = 0; s < 50; ++s) {
    const auto c = make(uniform_points(200, 900 + s), Box{});
    const auto a1 = classify_concentration(c, 0.7, 0.3, 0.5);
    const auto a2 = classify_concentration(c, 0.95, 0.3, 0.5);
    if (a2.in_O_alpha) EXPECT_TRUE(a1.in_O_alpha);
    const auto cov = detail::covering_at(c, a1.thresholds.cell_width, 4.0, Vec3{});
    EXPECT_EQ(cov.max_occupancy(), a1.canonical_cell_count);
  }
}

TEST(NeighborCounts, Examples) {
  EXPECT_EQ(neighbor_counts(make({{0, 0, 0}, {5, 0, 0}})), (std::vector<int>{1, 1}));
  EXPECT_EQ(neighbor_counts(make({{0, 0, 0}, {1.25, 0, 0}})), (std::vector<int>{2, 2}));
  EXPECT_THROW(neighbor_counts(make({{0, 0, 0}, {0.5, 0, 0}})), ValidationError);
}

TEST(NeighborCounts, AtMost64OnRandomValidClouds) {
  const auto f = PhaseDensity::uniform_point_mass(Vec3{});
  int worst = 0;
  for (std::uint64_t r = 0; r < 200; ++r) {
    const auto [c, rep] = sample_conditioned(f, 200, derive_seed(42, 1, r));
    const auto counts = neighbor_counts(c);
    worst = std::max(worst, *std::max_element(counts.begin(), counts.end()));
  }
  EXPECT_LE(worst, 64);
}

TEST(ConfigIO, RoundTripAndRejection) {
  const auto c = make({{0.1, 0.2, 0.3}, {0.9, 0.8, 0.7}}, Box{});
  const auto j = configuration_to_json(c);
  const auto back = configuration_from_json(j);
  EXPECT_EQ(back.positions, c.positions);
  EXPECT_EQ(back.velocities, c.velocities);
  auto bad = j;
  bad["positions"][1] = {0.1, 0.2, 0.35};
  EXPECT_THROW(configuration_from_json(bad), ValidationError);
  EXPECT_NO_THROW(configuration_from_json(bad, true));
  bad["radius"] = 0.3;
  EXPECT_THROW(configuration_from_json(bad, true), ConfigError);
  EXPECT_THROW(configuration_from_json(json{{"n", 1}}), ConfigError);
}
