#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "capmass/error.hpp"
#include "capmass/quadrature.hpp"
#include "capmass/regions.hpp"

using namespace capmass;

TEST(GaussLegendre, WeightsSumToTwo) {
  for (int n : {1, 2, 5, 16, 64}) {
    const GaussRule& g = gauss_legendre(n);
    ASSERT_EQ(static_cast<int>(g.nodes.size()), n);
    double s = 0.0;
    for (double w : g.weights) s += w;
    EXPECT_NEAR(s, 2.0, 1e-14) << n;
  }
}

// Property: an n-point rule integrates every monomial of degree <= 2n - 1 exactly.
TEST(GaussLegendre, ExactThroughDegree2nMinus1) {
  for (int n : {2, 3, 8, 20}) {
    for (int k = 0; k <= 2 * n - 1; ++k) {
      const double exact = (k % 2 == 0) ? 2.0 / (k + 1) : 0.0;
      const double got = integrate_gl([k](double x) { return std::pow(x, k); }, -1.0, 1.0, n);
      EXPECT_NEAR(got, exact, 1e-13) << "n=" << n << " k=" << k;
    }
  }
}

TEST(GaussLegendre, RejectsNonPositiveOrder) { EXPECT_THROW(gauss_legendre(0), Error); }

TEST(Integrate, GradedHandlesEndpointPeak) {
  const double got = integrate_graded([](double s) { return 1.0 / (s * s); }, 1.0, 1e4, 32);
  EXPECT_NEAR(got, 1.0 - 1e-4, 1e-12);
}

TEST(Integrate, ToInfinityOfInverseSquare) {
  for (double a : {0.5, 3.0, 1e3}) {
    EXPECT_NEAR(integrate_to_infinity([](double s) { return 1.0 / (s * s); }, a, 16), 1.0 / a, 1e-13 / a);
  }
}

TEST(Integrate, PanelsMatchSingleIntervalOnSmoothIntegrand) {
  const double breaks[] = {0.0, 0.3, 1.1, 2.0};
  const double got = integrate_panels([](double x) { return std::exp(x); }, breaks, 12);
  EXPECT_NEAR(got, std::exp(2.0) - 1.0, 1e-13);
}

TEST(SphereRule, IntegratesConstantToFourPi) {
  const SphereRule r = sphere_rule(8, 16);
  double s = 0.0;
  for (double w : r.weight) s += w;
  EXPECT_NEAR(s, 4.0 * std::numbers::pi, 1e-13);
}

// Property: degree-l harmonics are orthonormal under a rule of sufficient order.
TEST(SphereRule, HarmonicsAreOrthonormal) {
  const SphereRule r = sphere_rule(16, 32);
  const int terms[][2] = {{0, 0}, {1, -1}, {1, 0}, {2, 0}, {2, 2}, {3, -2}, {4, 1}};
  for (const auto& a : terms) {
    for (const auto& b : terms) {
      double s = 0.0;
      for (std::size_t i = 0; i < r.size(); ++i)
        s += r.weight[i] * real_spherical_harmonic(a[0], a[1], r.theta[i], r.phi[i]) *
             real_spherical_harmonic(b[0], b[1], r.theta[i], r.phi[i]);
      const double expect = (a[0] == b[0] && a[1] == b[1]) ? 1.0 : 0.0;
      EXPECT_NEAR(s, expect, 1e-12) << a[0] << "," << a[1] << " vs " << b[0] << "," << b[1];
    }
  }
}

TEST(QuadratureOptions, HalvedKeepsFloors) {
  QuadratureOptions q;
  q.angular_theta = 3;
  q.angular_phi = 4;
  q.radial_points = 2;
  const QuadratureOptions h = q.halved();
  EXPECT_GE(h.angular_theta, 1);
  EXPECT_GE(h.radial_points, 1);
  EXPECT_LE(h.angular_phi, q.angular_phi);
}
