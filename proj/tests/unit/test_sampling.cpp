#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "sblab/core/statistics.hpp"
#include "sblab/sampling/diagnostics.hpp"
#include "sblab/sampling/phase_density.hpp"
#include "sblab/sampling/sampler.hpp"

using namespace sblab;

namespace {

// Independent MC oracle for P(|X1 - X2| <= r), X uniform on the unit cube.
double close_pair_probability(double r, int draws) {
  std::mt19937_64 g(12345);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int hits = 0;
  for (int i = 0; i < draws; ++i) {
    const double dx = u(g) - u(g), dy = u(g) - u(g), dz = u(g) - u(g);
    if (dx * dx + dy * dy + dz * dz <= r * r) ++hits;
  }
  return static_cast<double>(hits) / draws;
}

}  // namespace

TEST(PhaseDensity, DensityAndMoments) {
  for (const auto& f : {PhaseDensity::uniform_point_mass({1, 0, 0}), PhaseDensity::uniform_gaussian(1.0),
                        PhaseDensity::uniform_shear(1.0)}) {
    // rho integrates to 1 (midpoint rule is exact for a box indicator aligned with cells)
    double s = 0;
    const int m = 20;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        for (int k = 0; k < m; ++k) s += f.rho({(i + 0.5) / m, (j + 0.5) / m, (k + 0.5) / m}) / (m * m * m);
    EXPECT_NEAR(s, 1.0, 1e-6);
    EXPECT_GE(f.moment(1), 1.0);
    EXPECT_LE(f.moment(1), f.moment(2));
    EXPECT_LE(f.moment(2), f.moment(5));
    Engine g(3);
    for (int i = 0; i < 1000; ++i) EXPECT_LE(f.rho(uniform_in_box(g, Box{{-0.5, -0.5, -0.5}, {1.5, 1.5, 1.5}})), f.rho_sup());
  }
  // shear moment: M_2 = 1 + E[y^2] = 4/3
  EXPECT_NEAR(PhaseDensity::uniform_shear(1.0).moment(2), 4.0 / 3.0, 1e-12);
  // gaussian: M_2 = 1 + 3 sigma^2
  EXPECT_NEAR(PhaseDensity::uniform_gaussian(0.5).moment(2), 1.75, 1e-9);
}

TEST(PhaseDensity, JsonRoundTrip) {
  const auto f = phase_density_from_json(nlohmann::json::parse(R"({"type":"gaussian_velocity","sigma":0.3})"));
  EXPECT_EQ(f.model, VelocityModel::gaussian);
  EXPECT_DOUBLE_EQ(f.sigma, 0.3);
  const auto g = phase_density_from_json(phase_density_to_json(f));
  EXPECT_EQ(g.model, f.model);
  EXPECT_EQ(g.sigma, f.sigma);
  EXPECT_THROW(phase_density_from_json(nlohmann::json::parse(R"({"type":"nope"})")), ConfigError);
  EXPECT_THROW(phase_density_from_json(nlohmann::json::parse(R"({"type":"shear","box":{"lo":[1,0,0],"hi":[0,1,1]}})")),
               ConfigError);
}

TEST(SampleIid, PointMassVelocitiesAndDeterminism) {
  const auto f = PhaseDensity::uniform_point_mass({0.5, -1, 2});
  for (const auto& p : sample_iid(f, 3, 9)) EXPECT_EQ(p.v, (Vec3{0.5, -1, 2}));
  const auto a = sample_iid(PhaseDensity::uniform_gaussian(1.0), 50, 77);
  const auto b = sample_iid(PhaseDensity::uniform_gaussian(1.0), 50, 77);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].x, b[i].x);
    EXPECT_EQ(a[i].v, b[i].v);
  }
}

TEST(SampleIid, MeanPositionClt) {
  const auto pts = sample_iid(PhaseDensity::uniform_point_mass({}), 100000, 5);
  std::vector<double> xs, ys, zs;
  for (const auto& p : pts) {
    xs.push_back(p.x.x);
    ys.push_back(p.x.y);
    zs.push_back(p.x.z);
  }
  for (const auto* v : {&xs, &ys, &zs}) {
    const auto m = mean_and_stderr(*v);
    EXPECT_LE(std::abs(m.mean - 0.5), 3 * m.std_error);
  }
}

TEST(SampleConditioned, SingleParticleAlwaysAccepted) {
  const auto [c, rep] = sample_conditioned(PhaseDensity::uniform_point_mass({}), 1, 1);
  EXPECT_EQ(rep.attempts, 1u);
  EXPECT_DOUBLE_EQ(rep.acceptance_rate, 1.0);
  EXPECT_EQ(c.n(), 1u);
}

TEST(SampleConditioned, SingleSiteLawRejectedForPairs) {
  const auto f = PhaseDensity::uniform_point_mass({}, Box{{0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}});
  EXPECT_THROW(sample_conditioned(f, 2, 1), ParameterError);
  EXPECT_NO_THROW(sample_conditioned(f, 1, 1));
}

TEST(SampleConditioned, TwoParticleAcceptanceMatchesOverlapOracle) {
  const auto f = PhaseDensity::uniform_point_mass({});
  std::uint64_t attempts = 0, accepted = 0;
  for (std::uint64_t r = 0; r < 20000; ++r) {
    const auto [c, rep] = sample_conditioned(f, 2, derive_seed(8, 0, r));
    attempts += rep.attempts;
    accepted += rep.accepted;
    EXPECT_TRUE(validate_configuration(c).ok());
  }
  const double rate = static_cast<double>(accepted) / static_cast<double>(attempts);
  const double oracle = 1.0 - close_pair_probability(1.0, 2000000);
  const double se = std::sqrt(rate * (1 - rate) / static_cast<double>(attempts));
  EXPECT_NEAR(rate, oracle, 4 * se + 1e-3);
}

TEST(SampleConditioned, LargeNAcceptance) {
  const auto f = PhaseDensity::uniform_point_mass({});
  std::uint64_t attempts = 0;
  for (std::uint64_t r = 0; r < 50; ++r) attempts += sample_conditioned(f, 500, derive_seed(9, 0, r)).second.attempts;
  EXPECT_GE(50.0 / static_cast<double>(attempts), 0.5);
}

TEST(SampleConditioned, SaturationCarriesAttempts) {
  // 30 spheres of radius 1/30 in a box of width 0.05: impossible
  const auto f = PhaseDensity::uniform_point_mass({}, Box{{0, 0, 0}, {0.05, 0.05, 0.05}});
  try {
    sample_conditioned(f, 30, 1, 25);
    FAIL();
  } catch (const SaturationError& e) {
    EXPECT_EQ(e.attempts, 25u);
  }
}

TEST(SampleConditioned, ExchangeableMarginals) {
  // chi-square homogeneity of the x-coordinate histogram of index 0 vs index n-1
  const auto f = PhaseDensity::uniform_point_mass({});
  constexpr int bins = 8;
  std::vector<double> h0(bins), h1(bins);
  const int reps = 4000;
  for (int r = 0; r < reps; ++r) {
    const auto [c, rep] = sample_conditioned(f, 20, derive_seed(10, 0, r));
    h0[std::min(bins - 1, static_cast<int>(c.positions.front().x * bins))] += 1;
    h1[std::min(bins - 1, static_cast<int>(c.positions.back().x * bins))] += 1;
  }
  double chi2 = 0;
  for (int b = 0; b < bins; ++b) {
    const double e = 0.5 * (h0[b] + h1[b]);
    chi2 += (h0[b] - e) * (h0[b] - e) / e + (h1[b] - e) * (h1[b] - e) / e;
  }
  EXPECT_LT(chi2, 18.48);  // chi-square 99% quantile, 7 dof
}

TEST(Partition, Examples) {
  const auto f = PhaseDensity::uniform_point_mass({});
  EXPECT_DOUBLE_EQ(estimate_partition(f, 1, 100, 1).estimate, 1.0);
  const auto w2 = estimate_partition(f, 2, 200000, 2);
  EXPECT_NEAR(w2.estimate, 1.0 - close_pair_probability(1.0, 2000000), 3 * w2.std_error + 1e-3);
  EXPECT_THROW(estimate_partition(f, 2, 10, 2), ParameterError);
  const auto a = estimate_partition(f, 100, 3000, 3);
  const auto b = estimate_partition(f, 200, 3000, 4);
  const auto c = estimate_partition(f, 400, 3000, 5);
  EXPECT_LT(a.estimate, b.estimate);
  EXPECT_LT(b.estimate, c.estimate);
  for (const auto& w : {a, b, c}) EXPECT_TRUE(w.bound_consistent);
  // nested monotone consequence: W_n <= W_{n-m} within 3 SE
  const auto d = estimate_partition(f, 95, 3000, 6);
  EXPECT_LE(a.estimate, d.estimate + 3 * std::hypot(a.std_error, d.std_error));
}

TEST(Diagnostics, UniformDensityAndZeroVelocities) {
  const auto d = assumption_A1_diagnostics(PhaseDensity::uniform_point_mass({}), 100, 1000, 21);
  EXPECT_NEAR(d.c1_hat, 1.0, 0.15);
  EXPECT_GT(d.c1_bandwidth, 0.0);
  EXPECT_EQ(d.c3_hat, 0.0);
  EXPECT_DOUBLE_EQ(d.c2_hat, 1.0);
  EXPECT_THROW(assumption_A1_diagnostics(PhaseDensity::uniform_point_mass({}), 10, 50, 1), SaturationError);
}

TEST(Diagnostics, GaussianMomentMatchesDirectMc) {
  const auto d = assumption_A1_diagnostics(PhaseDensity::uniform_gaussian(1.0), 50, 400, 22);
  std::mt19937_64 g(99);
  std::normal_distribution<double> z;
  std::vector<double> s(2000000);
  for (auto& v : s) {
    const double a = z(g), b = z(g), c = z(g);
    v = std::pow(1 + a * a + b * b + c * c, 2.5);
  }
  const auto oracle = mean_and_stderr(s);
  EXPECT_NEAR(d.c2_hat, oracle.mean, 3 * std::hypot(d.c2_stderr, oracle.std_error));
  EXPECT_GT(d.c3_hat, 0.0);
}
