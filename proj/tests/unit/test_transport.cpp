#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "sblab/transport/chaos.hpp"
#include "sblab/transport/holder.hpp"
#include "sblab/transport/wasserstein.hpp"

using namespace sblab;

namespace {

std::vector<Vec3> cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<Vec3> x(n);
  for (auto& p : x) p = {u(g), u(g), u(g)};
  return x;
}

std::vector<double> random_weights(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 g(seed);
  std::uniform_real_distribution<double> u(0.1, 1.0);
  std::vector<double> w(n);
  for (auto& x : w) x = u(g);
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (auto& x : w) x /= s;
  return w;
}

EmpiricalMeasure weighted(const std::vector<Vec3>& x, const std::vector<double>& w) {
  EmpiricalMeasure m = EmpiricalMeasure::uniform(x);
  m.weights = w;
  return m;
}

// Successive shortest paths with Bellman-Ford on the residual bipartite
// network; independent of the library's simplex.
double ssp_oracle(const std::vector<double>& a, const std::vector<double>& b, const std::vector<Vec3>& x,
                  const std::vector<Vec3>& y) {
  const std::size_t m = a.size(), k = b.size();
  std::vector<double> sup = a, dem = b;
  std::vector<std::vector<double>> flow(m, std::vector<double>(k, 0.0));
  double total = 0;
  for (;;) {
    // nodes: 0..m-1 rows, m..m+k-1 cols; source feeds rows with sup > 0
    const std::size_t V = m + k;
    std::vector<double> dist(V, std::numeric_limits<double>::infinity());
    std::vector<long> prev(V, -1);
    for (std::size_t i = 0; i < m; ++i)
      if (sup[i] > 1e-15) dist[i] = 0;
    for (std::size_t it = 0; it < V; ++it) {
      bool changed = false;
      for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < k; ++j) {
          const double c = distance(x[i], y[j]);
          if (dist[i] + c < dist[m + j] - 1e-15) {
            dist[m + j] = dist[i] + c;
            prev[m + j] = static_cast<long>(i);
            changed = true;
          }
          if (flow[i][j] > 1e-15 && dist[m + j] - c < dist[i] - 1e-15) {
            dist[i] = dist[m + j] - c;
            prev[i] = static_cast<long>(m + j);
            changed = true;
          }
        }
      if (!changed) break;
    }
    std::size_t sink = V;
    for (std::size_t j = 0; j < k; ++j)
      if (dem[j] > 1e-15 && std::isfinite(dist[m + j]) && (sink == V || dist[m + j] < dist[sink])) sink = m + j;
    if (sink == V) break;
    double push = dem[sink - m];
    std::size_t v = sink;
    while (prev[v] >= 0) {
      const std::size_t p = static_cast<std::size_t>(prev[v]);
      if (v >= m) {
      } else {
        push = std::min(push, flow[v][p - m]);
      }
      v = p;
    }
    push = std::min(push, sup[v]);
    v = sink;
    while (prev[v] >= 0) {
      const std::size_t p = static_cast<std::size_t>(prev[v]);
      if (v >= m)
        flow[p][v - m] += push;
      else
        flow[v][p - m] -= push;
      v = p;
    }
    sup[v] -= push;
    dem[sink - m] -= push;
  }
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < k; ++j) total += flow[i][j] * distance(x[i], y[j]);
  return total;
}

}  // namespace

TEST(W1Discrete, Examples) {
  EXPECT_NEAR(w1_discrete(EmpiricalMeasure::dirac({0, 0, 0}), EmpiricalMeasure::dirac({1, 2, 2})), 3.0, 1e-15);
  // (1/2 d0 + 1/2 d1) vs d_{1/2}: the only coupling moves each half by 1/2
  const auto two = EmpiricalMeasure::uniform({{0, 0, 0}, {1, 0, 0}});
  EXPECT_NEAR(w1_discrete(two, EmpiricalMeasure::dirac({0.5, 0, 0})), 0.5, 1e-15);
  const auto x = EmpiricalMeasure::uniform(cloud(30, 1));
  EXPECT_NEAR(w1_discrete(x, x), 0.0, 1e-15);
  EXPECT_THROW(w1_discrete(x, EmpiricalMeasure{}), DomainError);
  auto half = EmpiricalMeasure::dirac({0, 0, 0}, 0.5);
  EXPECT_THROW(w1_discrete(half, EmpiricalMeasure::dirac({1, 0, 0}), false), MassError);
}

TEST(W1Discrete, AssignmentMatchesPermutationBruteForce) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto a = cloud(7, 10 + s), b = cloud(7, 50 + s);
    std::vector<int> perm(7);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300;
    do {
      double c = 0;
      for (int i = 0; i < 7; ++i) c += distance(a[i], b[perm[i]]);
      best = std::min(best, c);
    } while (std::next_permutation(perm.begin(), perm.end()));
    EXPECT_NEAR(w1_discrete(EmpiricalMeasure::uniform(a), EmpiricalMeasure::uniform(b)), best / 7, 1e-13);
  }
}

TEST(W1Discrete, SimplexMatchesShortestPathOracle) {
  for (std::uint64_t s = 0; s < 15; ++s) {
    const std::size_t m = 3 + s % 9, k = 4 + (s * 7) % 11;
    const auto x = cloud(m, 100 + s), y = cloud(k, 200 + s);
    const auto a = random_weights(m, 300 + s), b = random_weights(k, 400 + s);
    EXPECT_NEAR(w1_discrete(weighted(x, a), weighted(y, b)), ssp_oracle(a, b, x, y), 1e-12);
  }
  // uniform equal-count case: both solvers agree
  const auto x = cloud(60, 7), y = cloud(60, 8);
  const std::vector<double> w(60, 1.0 / 60);
  const double assign = w1_discrete(EmpiricalMeasure::uniform(x), EmpiricalMeasure::uniform(y));
  const double simplex = solve_transport(w, w, [&](std::size_t i, std::size_t j) { return distance(x[i], y[j]); }).cost;
  EXPECT_NEAR(assign, simplex, 1e-12);
}

TEST(W1Discrete, MetricProperties) {
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto a = weighted(cloud(12, s), random_weights(12, s + 1));
    const auto b = weighted(cloud(9, s + 2), random_weights(9, s + 3));
    const auto c = weighted(cloud(15, s + 4), random_weights(15, s + 5));
    const double ab = w1_discrete(a, b), ba = w1_discrete(b, a);
    EXPECT_NEAR(ab, ba, 1e-13);
    EXPECT_LE(w1_discrete(a, c), ab + w1_discrete(b, c) + 1e-9);
    EXPECT_GT(ab, 0.0);
  }
}

TEST(W1Discrete, PositionProjectionContracts) {
  const auto f = PhaseDensity::uniform_gaussian(1.0);
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto c1 = to_configuration(sample_iid(f, 40, s), Box{});
    const auto c2 = to_configuration(sample_iid(f, 40, 100 + s), Box{});
    EXPECT_LE(w1_discrete(EmpiricalMeasure::density(c1), EmpiricalMeasure::density(c2)),
              w1_discrete(EmpiricalMeasure::phase(c1), EmpiricalMeasure::phase(c2)) + 1e-12);
  }
}

TEST(W1VsDensity, DiracAtCenter) {
  const auto draw = [](Engine& g) { return uniform_in_box(g, Box{}); };
  const auto est = w1_empirical_vs_density(EmpiricalMeasure::dirac({0.5, 0.5, 0.5}), draw, 2000, 20, 3);
  std::mt19937_64 g(77);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> d(4000000);
  for (auto& v : d) v = distance(Vec3{u(g), u(g), u(g)}, Vec3{0.5, 0.5, 0.5});
  const auto oracle = mean_and_stderr(d);
  EXPECT_NEAR(oracle.mean, 0.4803, 5e-4);
  EXPECT_NEAR(est.mean, oracle.mean, 4 * std::hypot(est.std_error, oracle.std_error));
  EXPECT_THROW(w1_empirical_vs_density(EmpiricalMeasure::uniform(cloud(10, 1)), draw, 5, 2, 1), ParameterError);
}

TEST(W1VsDensity, SelfDistanceDecreasesWithReference) {
  const auto draw = [](Engine& g) { return uniform_in_box(g, Box{}); };
  const auto mu = EmpiricalMeasure::uniform(cloud(100, 5));
  const auto a = w1_empirical_vs_density(mu, draw, 100, 10, 1);
  const auto b = w1_empirical_vs_density(mu, draw, 400, 10, 1);
  EXPECT_LT(b.mean, a.mean);
}

TEST(Holder, MollifierConstants) {
  const auto k1 = mollifier_constants(1.0);
  EXPECT_GT(k1.a, 0.0);
  EXPECT_LT(k1.a, 1.0);
  EXPECT_GT(k1.b, 1.0);  // |grad zeta|_1 >= 1 for any unit-mass bump supported in the unit ball (isoperimetry)
  EXPECT_GT(mollifier_constants(0.5).a, k1.a);
}

TEST(Holder, IdenticalMeasuresGiveZero) {
  const auto x = EmpiricalMeasure::uniform(cloud(20, 2));
  EXPECT_EQ(holder_dual_upper(x, x, 0.5).bound, 0.0);
  EXPECT_EQ(holder_dual_lower(x, x, 0.5, 32, 1), 0.0);
}

TEST(Holder, TwoDiracs) {
  for (double d : {0.1, 0.5, 1.0, 1.7, 3.0}) {
    const auto a = EmpiricalMeasure::dirac({0, 0, 0}), b = EmpiricalMeasure::dirac({d, 0, 0});
    // true value min(d, 2): attained by phi = clamp(1 - |z|, -1, 1)
    const double truth = std::min(d, 2.0);
    EXPECT_GE(holder_dual_upper(a, b, 1.0).bound, truth - 1e-12);
    EXPECT_LE(holder_dual_lower(a, b, 1.0, 16, 1), truth + 1e-12);
  }
  EXPECT_GE(holder_dual_lower(EmpiricalMeasure::dirac({0, 0, 0}), EmpiricalMeasure::dirac(e1), 1.0, 16, 1), 0.9);
}

TEST(Holder, SandwichRateScalingMonotone) {
  for (std::uint64_t s = 0; s < 100; ++s) {
    const auto a = weighted(cloud(8, 500 + s), random_weights(8, 600 + s));
    const auto b = weighted(cloud(6, 700 + s), random_weights(6, 800 + s));
    const double theta = 0.25 + 0.75 * (s % 4) / 3.0;
    const auto up = holder_dual_upper(a, b, theta);
    const double lo = holder_dual_lower(a, b, theta, 32, s);
    EXPECT_LE(lo, up.bound + 1e-12);
    const double w1 = w1_discrete(a, b);
    EXPECT_NEAR(up.w1, w1, 1e-12);
    EXPECT_LE(up.bound, up.k0 * std::pow(w1, theta / (1 + theta)) + 1e-12);
    if (s < 20) {
      const double c = 3.7;
      auto sa = SignedMeasure::from(a).minus(SignedMeasure::from(b));
      EXPECT_NEAR(holder_dual_upper(sa.scaled(c), theta).bound, c * up.bound, 1e-12 * c * up.bound);
      EXPECT_NEAR(holder_dual_lower(sa.scaled(c), theta, 32, s), c * lo, 1e-12 * c * lo);
      // larger theta, smaller unit ball on scales below 1: the bound does not grow
      if (w1 < 1.0) EXPECT_LE(holder_dual_upper(a, b, 1.0).bound, holder_dual_upper(a, b, 0.3).bound + 1e-12);
    }
  }
}

TEST(FluxDistance, Properties) {
  auto zero = EmpiricalMeasure::uniform(cloud(20, 1));
  zero.payload.assign(20, Vec3{});
  auto zero_ref = EmpiricalMeasure::uniform(cloud(30, 2));
  zero_ref.payload.assign(30, Vec3{});
  const auto z = flux_distance(zero, zero_ref, 0.5);
  EXPECT_EQ(z.upper, 0.0);
  EXPECT_EQ(z.lower, 0.0);
  EXPECT_THROW(flux_distance(EmpiricalMeasure::uniform(cloud(3, 1)), zero_ref, 0.5), DomainError);

  const Vec3 v0{1.0, -0.5, 0.25};
  auto make = [&](std::size_t n, std::uint64_t s) {
    auto m = EmpiricalMeasure::uniform(cloud(n, s));
    m.payload.assign(n, v0);
    return m;
  };
  const auto small = flux_distance(make(100, 3), make(100, 4), 0.5, 32, 1);
  const auto large = flux_distance(make(1000, 5), make(1000, 6), 0.5, 32, 1);
  EXPECT_LT(large.upper, small.upper);
  EXPECT_LE(small.lower, small.upper);
  // componentwise sum equals the three scalar calls
  const auto jn = make(50, 7), jr = make(60, 8);
  double up = 0;
  for (int a = 0; a < 3; ++a)
    up += holder_dual_upper(SignedMeasure::flux_component(jn, a).minus(SignedMeasure::flux_component(jr, a)), 0.5).bound;
  EXPECT_DOUBLE_EQ(flux_distance(jn, jr, 0.5).upper, up);
}

TEST(ChaosStudy, RejectsSingleSiteAndOrdersSlopes) {
  const auto site = PhaseDensity::uniform_point_mass({}, Box{{0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}});
  EXPECT_THROW(chaos_rate_study(site, {1, 2}, 10, 1), ParameterError);
  EXPECT_THROW(chaos_rate_study(PhaseDensity::uniform_gaussian(1.0), {64, 32}, 10, 1), ParameterError);
  const auto s = chaos_rate_study(PhaseDensity::uniform_gaussian(1.0), {32, 64, 128, 256}, 10, 2);
  ASSERT_TRUE(s.has_phase_fit);
  EXPECT_LT(s.position_fit.slope, 0.0);
  EXPECT_GT(s.phase_fit.slope, s.position_fit.slope);
  const std::string csv = chaos_csv(s);
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "n,metric,mean,stderr,reps,seed");
  EXPECT_EQ(csv, chaos_csv(chaos_rate_study(PhaseDensity::uniform_gaussian(1.0), {32, 64, 128, 256}, 10, 2)));
}
