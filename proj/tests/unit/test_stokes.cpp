#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "sblab/core/random.hpp"
#include "sblab/stokes/drag.hpp"
#include "sblab/stokes/rotational_lift.hpp"
#include "sblab/stokes/sphere_quadrature.hpp"
#include "sblab/stokes/stokeslet.hpp"
#include "sblab/stokes/superposition.hpp"

using namespace sblab;

namespace {

double max_diff(const Vec3& a, const Vec3& b) { return max_abs(a - b); }

Vec3 random_vec(Engine& g) { return {standard_normal(g), standard_normal(g), standard_normal(g)}; }

// Mean of x^a y^b z^c over the unit sphere (closed form with double
// factorials, zero when any exponent is odd).
double sphere_moment(int a, int b, int c) {
  if (a % 2 || b % 2 || c % 2) return 0.0;
  auto dfact = [](int k) {
    double r = 1.0;
    for (int i = k; i > 1; i -= 2) r *= i;
    return r;
  };
  return dfact(a - 1) * dfact(b - 1) * dfact(c - 1) / dfact(a + b + c + 1);
}

void check_rule_exactness(const SphereRule& r) {
  double wsum = 0.0;
  for (double w : r.weights) wsum += w;
  EXPECT_NEAR(wsum, 1.0, 1e-14);
  for (int a = 0; a <= r.degree; ++a)
    for (int b = 0; a + b <= r.degree; ++b)
      for (int c = 0; a + b + c <= r.degree; ++c) {
        double s = 0.0;
        for (std::size_t q = 0; q < r.size(); ++q)
          s += r.weights[q] * std::pow(r.nodes[q].x, a) * std::pow(r.nodes[q].y, b) * std::pow(r.nodes[q].z, c);
        EXPECT_NEAR(s, sphere_moment(a, b, c), 1e-14) << a << b << c;
      }
}

}  // namespace

TEST(SphereQuadrature, Lebedev26Exactness) {
  const SphereRule r = lebedev26();
  EXPECT_EQ(r.size(), 26u);
  check_rule_exactness(r);
}

TEST(SphereQuadrature, Lebedev50Exactness) {
  const SphereRule r = lebedev50();
  EXPECT_EQ(r.size(), 50u);
  check_rule_exactness(r);
}

TEST(SphereQuadrature, ProductRuleExactness) { check_rule_exactness(product_gauss_rule(6)); }

TEST(SphereQuadrature, DataFilesMatchTables) {
  for (int order : {26, 50}) {
    const SphereRule file = read_sphere_rule(std::string(SBLAB_DATA_DIR) + "/lebedev" + std::to_string(order) + ".txt");
    const SphereRule table = sphere_rule(order);
    ASSERT_EQ(file.size(), table.size());
    for (std::size_t q = 0; q < file.size(); ++q) {
      EXPECT_LT(max_diff(file.nodes[q], table.nodes[q]), 1e-16);
      EXPECT_NEAR(file.weights[q], table.weights[q], 1e-17);
    }
  }
  EXPECT_THROW(read_sphere_rule("/nonexistent/rule.txt"), IoError);
}

TEST(Stokeslet, BoundaryIdentity) {
  Engine g(1);
  double worst = 0.0;
  for (double n : {1.0, 10.0, 1000.0})
    for (int k = 0; k < 1000; ++k) {
      const Vec3 v = random_vec(g);
      const Vec3 x = (1.0 / n) * uniform_on_sphere(g);
      worst = std::max(worst, max_diff(stokeslet_velocity(v, x, n), v) / std::max(1.0, norm(v)));
    }
  EXPECT_LE(worst, 1e-12);
}

TEST(Stokeslet, SubstitutionExamples) {
  for (double n : {1.0, 7.0, 50.0}) {
    EXPECT_LT(max_diff(stokeslet_velocity(e1, {2.0 / n, 0, 0}, n), 0.6875 * e1), 1e-14);
    EXPECT_LT(max_diff(stokeslet_velocity(e1, {0, 2.0 / n, 0}, n), 0.40625 * e1), 1e-14);
  }
  EXPECT_THROW(stokeslet_velocity(e1, Vec3{}, 3.0), SingularityError);
  EXPECT_THROW(stokeslet_pressure(e1, Vec3{}, 3.0), SingularityError);
}

TEST(Stokeslet, PressureExamples) {
  const double n = 8.0;
  EXPECT_EQ(stokeslet_pressure(e1, {0, 0.3, -0.2}, n), 0.0);
  EXPECT_NEAR(stokeslet_pressure(e1, {1.0 / n, 0, 0}, n), 1.5 * n, 1e-12);
  Engine g(2);
  for (int k = 0; k < 100; ++k) {
    const Vec3 v = random_vec(g), x = random_vec(g);
    EXPECT_DOUBLE_EQ(stokeslet_pressure(v, -1.0 * x, n), -stokeslet_pressure(v, x, n));
  }
}

TEST(Stokeslet, GradientMatchesFiniteDifferences) {
  Engine g(3);
  const double n = 5.0, h = 1e-6;
  for (int k = 0; k < 50; ++k) {
    const Vec3 v = random_vec(g);
    const Vec3 x = ((1.5 + 5.0 * uniform01(g)) / n) * uniform_on_sphere(g);
    const Mat3 a = stokeslet_gradient(v, x, n);
    for (int c = 0; c < 3; ++c) {
      Vec3 p = x, m = x;
      p[c] += h;
      m[c] -= h;
      const Vec3 d = (1.0 / (2 * h)) * (stokeslet_velocity(v, p, n) - stokeslet_velocity(v, m, n));
      for (int i = 0; i < 3; ++i) EXPECT_NEAR(a[i][c], d[i], 1e-6 * n);
    }
  }
}

TEST(Stokeslet, ExteriorStokesResidualAndDivergence) {
  Engine g(4);
  for (double n : {1.0, 10.0}) {
    const double h = 1e-4 / n;
    double worst_mom = 0.0, worst_div = 0.0;
    for (int k = 0; k < 200; ++k) {
      const Vec3 v = random_vec(g);
      const Vec3 x = ((1.5 + 8.5 * uniform01(g)) / n) * uniform_on_sphere(g);
      // -Lap u + grad p, with Lap u_i = sum_k d_k (d_k u_i) from the analytic gradient
      Vec3 res{};
      for (int c = 0; c < 3; ++c) {
        Vec3 p = x, m = x;
        p[c] += h;
        m[c] -= h;
        const Mat3 gp = stokeslet_gradient(v, p, n), gm = stokeslet_gradient(v, m, n);
        for (int i = 0; i < 3; ++i) res[i] -= (gp[i][c] - gm[i][c]) / (2 * h);
        res[c] += (stokeslet_pressure(v, p, n) - stokeslet_pressure(v, m, n)) / (2 * h);
      }
      const Mat3 gx = stokeslet_gradient(v, x, n);
      worst_mom = std::max(worst_mom, norm(res) / (n * n * n * norm(v)));
      worst_div = std::max(worst_div, std::abs(gx[0][0] + gx[1][1] + gx[2][2]) / (n * norm(v)));
    }
    EXPECT_LE(worst_mom, 1e-4);
    EXPECT_LE(worst_div, 1e-8);
  }
}

TEST(Stokeslet, FarFieldDecayBound) {
  Engine g(5);
  const double n = 20.0;
  for (int k = 0; k < 10000; ++k) {
    const Vec3 v = random_vec(g);
    const double r = (1.0 + 200.0 * uniform01(g)) / n;
    const Vec3 x = r * uniform_on_sphere(g);
    const double bound = (1.5 / (n * r) + 0.5 / (n * n * n * r * r * r)) * norm(v);
    EXPECT_LE(norm(stokeslet_velocity(v, x, n)), bound * (1 + 1e-14));
  }
}

TEST(Stokeslet, Linearity) {
  Engine g(6);
  const double n = 3.0;
  for (int k = 0; k < 100; ++k) {
    const Vec3 a = random_vec(g), b = random_vec(g), x = (2.0 / n) * uniform_on_sphere(g);
    const double c = standard_normal(g);
    EXPECT_LT(max_diff(stokeslet_velocity(c * a + b, x, n), c * stokeslet_velocity(a, x, n) + stokeslet_velocity(b, x, n)),
              1e-13);
    EXPECT_NEAR(stokeslet_pressure(c * a + b, x, n), c * stokeslet_pressure(a, x, n) + stokeslet_pressure(b, x, n),
                1e-12 * n);
  }
}

TEST(Stokeslet, TractionUniformOnSphere) {
  Engine g(7);
  const double n = 4.0;
  const Vec3 v{0.3, -1.2, 0.7};
  for (int k = 0; k < 50; ++k) {
    const Vec3 e = uniform_on_sphere(g);
    EXPECT_LT(max_diff(stokeslet_traction(v, (1.0 / n) * e, n, e), -1.5 * n * v), 1e-12);
  }
}

TEST(Drag, StokesLaw) {
  const Vec3 f = drag_integral(e1, 10.0, 26);
  EXPECT_NEAR(f.x, 6.0 * pi / 10.0, 1e-12);
  EXPECT_NEAR(f.x, 1.8850, 1e-4);
  EXPECT_NEAR(f.y, 0.0, 1e-12);
  EXPECT_NEAR(f.z, 0.0, 1e-12);
  EXPECT_EQ(drag_integral(Vec3{}, 10.0), Vec3{});
  Engine g(8);
  for (int k = 0; k < 20; ++k) {
    const Vec3 v = random_vec(g);
    const double n = 1.0 + 100.0 * uniform01(g);
    for (int order : {26, 50, 72}) {
      const Vec3 fv = drag_integral(v, n, order);
      EXPECT_LE(norm(fv - (6.0 * pi / n) * v), 1e-6 * norm((6.0 * pi / n) * v));
      EXPECT_LT(max_diff(drag_integral(2.0 * v, n, order), 2.0 * fv), 1e-12 * norm(fv));
    }
  }
}

TEST(Stokeslet, SingleSphereDirichletEnergy) {
  // |grad u|^2 over |x| > 1/n with r = 1/(n t): dr = -1/(n t^2) dt.
  const double n = 10.0;
  const Vec3 v = e1;
  const SphereRule ang = product_gauss_rule(12);
  const Rule1D gl = gauss_legendre_rule(60);
  double e = 0.0;
  for (int i = 0; i < 60; ++i) {
    const double t = 0.5 * (gl.nodes[i] + 1.0), wt = 0.5 * gl.weights[i];
    const double r = 1.0 / (n * t);
    double shell = 0.0;
    for (std::size_t q = 0; q < ang.size(); ++q) shell += ang.weights[q] * frobenius2(stokeslet_gradient(v, r * ang.nodes[q], n));
    e += wt * 4.0 * pi * r * r * shell / (n * t * t);
  }
  EXPECT_NEAR(e, 6.0 * pi / n, 0.005 * 6.0 * pi / n);
}

TEST(Superposition, SingleCentreEqualsKernel) {
  Engine g(9);
  const double n = 6.0;
  const std::vector<Vec3> c{{0.1, 0.2, 0.3}}, b{{1.0, -0.5, 2.0}};
  std::vector<Vec3> t;
  for (int k = 0; k < 20; ++k) t.push_back(c[0] + ((1.0 + uniform01(g)) / n) * uniform_on_sphere(g));
  const auto w = superposition_field(c, b, n, t);
  for (std::size_t k = 0; k < t.size(); ++k) EXPECT_EQ(w[k], stokeslet_velocity(b[0], t[k] - c[0], n));
}

TEST(Superposition, TwoFarCentresCorrectionBound) {
  const double n = 50.0;
  const std::vector<Vec3> c{{0, 0, 0}, {0.6, 0, 0}}, b{{1, 0, 0}, {0.3, 1.0, -0.4}};
  Engine g(10);
  for (int k = 0; k < 100; ++k) {
    const Vec3 x = (1.0 / n) * uniform_on_sphere(g);
    const Vec3 w = superposition_field(c, b, n, std::vector<Vec3>{x})[0];
    const double dist = distance(x, c[1]);
    const double bound = (1.5 / (n * dist) + 0.5 / (n * n * n * dist * dist * dist)) * norm(b[1]);
    EXPECT_LE(norm(w - b[0]), bound + 1e-12);
  }
}

TEST(Superposition, ZeroValuesGiveZeroAndErrors) {
  const std::vector<Vec3> c{{0, 0, 0}, {1, 0, 0}}, b(2, Vec3{});
  const std::vector<Vec3> t{{0.5, 0.5, 0.5}, {2, 2, 2}};
  for (const Vec3& w : superposition_field(c, b, 3.0, t)) EXPECT_EQ(w, Vec3{});
  EXPECT_THROW(superposition_field(c, b, 3.0, std::vector<Vec3>{{1, 0, 0}}), SingularityError);
  EXPECT_THROW(superposition_field(c, std::vector<Vec3>{e1, e2}, 3.0, std::vector<Vec3>{{1, 0, 0}}), SingularityError);
  EXPECT_THROW(superposition_field_blocked(c, b, 3.0, std::vector<Vec3>{{0, 0, 0}}, 0.2), SingularityError);
  EXPECT_THROW(superposition_field(c, std::vector<Vec3>{e1}, 3.0, t), DomainError);
}

TEST(Superposition, BlockedPathAgreesWithDirect) {
  Engine g(11);
  const std::size_t m = 800;
  const double n = static_cast<double>(m);
  std::vector<Vec3> c, b, t;
  for (std::size_t i = 0; i < m; ++i) {
    c.push_back({uniform01(g), uniform01(g), uniform01(g)});
    b.push_back(random_vec(g));
  }
  for (int k = 0; k < 300; ++k) t.push_back({uniform01(g) * 1.4 - 0.2, uniform01(g), uniform01(g)});
  const auto direct = superposition_field(c, b, n, t);
  const auto blocked = superposition_field_blocked(c, b, n, t, 0.1, 2);
  for (std::size_t k = 0; k < t.size(); ++k) EXPECT_LE(norm(direct[k] - blocked[k]), 1e-10 * norm(direct[k]));
}

TEST(Superposition, GradientIsSumOfKernelGradients) {
  const double n = 4.0;
  const std::vector<Vec3> c{{0, 0, 0}, {1, 0, 0}}, b{e1, e3};
  const Vec3 x{0.4, 0.5, -0.3};
  const Mat3 gsum = superposition_gradient(c, b, n, std::vector<Vec3>{x})[0];
  const Mat3 g0 = stokeslet_gradient(e1, x, n), g1 = stokeslet_gradient(e3, x - c[1], n);
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(gsum[i][k], g0[i][k] + g1[i][k], 1e-14);
}

TEST(RotationalLift, PlateausAndSupport) {
  const Vec3 V{0.5, -1.0, 2.0}, X{0.3, 0.1, -0.2};
  const double n = 10.0;
  const auto w = rotational_lift(V, X, n, 0.4);
  EXPECT_EQ(w(X), V);
  EXPECT_EQ(w(X + (0.99 / n) * e2), V);
  EXPECT_EQ(w(X + (2.0 / n) * e1), Vec3{});
  EXPECT_EQ(w(X + (1.41 / n) * e3), Vec3{});
  EXPECT_THROW(rotational_lift(V, X, n, 0.0), ParameterError);
  EXPECT_THROW(rotational_lift(V, X, n, 0.5), ParameterError);
}

TEST(RotationalLift, DivergenceFreeInTransitionShell) {
  Engine g(12);
  const Vec3 V{0.5, -1.0, 2.0}, X{0.3, 0.1, -0.2};
  for (double n : {1.0, 10.0, 100.0}) {
    const double h0 = 0.4;
    const auto w = rotational_lift(V, X, n, h0);
    double worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const double r = (1.0 + h0 * uniform01(g)) / n;
      worst = std::max(worst, std::abs(w.divergence(X + r * uniform_on_sphere(g), 1e-5 / n)));
    }
    EXPECT_LE(worst, 1e-6 * n * norm(V));
  }
}

TEST(RotationalLift, CurlIdentity) {
  // Compare with the curl of A = (V x y) chi0(n|y|) / 2 computed by central differences.
  const Vec3 V{0.2, 0.9, -0.4};
  const double n = 3.0, h0 = 0.3, h = 1e-6;
  const auto w = rotational_lift(V, Vec3{}, n, h0);
  auto A = [&](const Vec3& y) { return (0.5 * w.chi0(n * norm(y))) * cross(V, y); };
  Engine g(13);
  for (int k = 0; k < 200; ++k) {
    const Vec3 y = ((1.0 + h0 * uniform01(g)) / n) * uniform_on_sphere(g);
    Mat3 d{};
    for (int c = 0; c < 3; ++c) {
      Vec3 p = y, m = y;
      p[c] += h;
      m[c] -= h;
      const Vec3 dd = (1.0 / (2 * h)) * (A(p) - A(m));
      for (int i = 0; i < 3; ++i) d[i][c] = dd[i];
    }
    const Vec3 curl{d[2][1] - d[1][2], d[0][2] - d[2][0], d[1][0] - d[0][1]};
    EXPECT_LT(max_diff(curl, w(y)), 1e-6);
  }
}
