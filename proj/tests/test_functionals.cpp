#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "capmass/error.hpp"
#include "capmass/functionals.hpp"

using namespace capmass;
constexpr double kPi = std::numbers::pi;

namespace {

// 4 pi int_{m/2}^{r} s^2 (1 + m / 2s)^6 ds from the binomial expansion.
double schwarzschild_ball_volume(double m, double r) {
  const double h = m / 2.0;
  auto F = [&](double s) {
    double acc = 0.0, binom = 1.0;
    for (int k = 0; k <= 6; ++k) {
      const double c = binom * std::pow(h, k);
      if (k == 3)
        acc += c * std::log(s);
      else
        acc += c * std::pow(s, 3 - k) / (3 - k);
      binom = binom * (6 - k) / (k + 1);
    }
    return acc;
  };
  return 4.0 * kPi * (F(r) - F(h));
}

// Midpoint sum of U^6 over the cube cells inside K and outside the excised balls.
double brute_force_volume(const Region& K, const MetricModel& model, double half, double h) {
  const int n = static_cast<int>(std::lround(2.0 * half / h));
  double sum = 0.0;
  const auto ex = model.excised_balls();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const Vec3 x{-half + (i + 0.5) * h, -half + (j + 0.5) * h, -half + (k + 0.5) * h};
        if (!K.contains(x)) continue;
        bool excised = false;
        for (const auto& b : ex) excised = excised || norm(x - b.center) < b.radius;
        if (excised) continue;
        sum += std::pow(model.conformal_factor(x), 6);
      }
  return sum * h * h * h;
}

}  // namespace

TEST(Constants, SphereAndBall) {
  EXPECT_NEAR(unit_sphere_area(3), 4.0 * kPi, 1e-14);
  EXPECT_NEAR(unit_sphere_area(4), 2.0 * kPi * kPi, 1e-13);
  EXPECT_NEAR(unit_ball_volume(3), 4.0 * kPi / 3.0, 1e-14);
  EXPECT_NEAR(unit_ball_volume(4), kPi * kPi / 2.0, 1e-13);
  EXPECT_NEAR(volume_radius(4.0 * kPi / 3.0 * 27.0), 3.0, 1e-13);
  EXPECT_NEAR(area_radius(4.0 * kPi * 4.0), 2.0, 1e-13);
  EXPECT_NEAR(volume_radius(kPi * kPi / 2.0 * 16.0, 4), 2.0, 1e-13);
}

TEST(Schwarzschild, BallVolumeMatchesAntiderivative) {
  for (double m : {0.5, 1.0, 2.0}) {
    for (double r : {1.5, 5.0, 50.0}) {
      const MetricModel s = MetricModel::schwarzschild(m);
      const Measured V = riemannian_volume(Region::ball({}, r), s);
      const double exact = schwarzschild_ball_volume(m, r);
      EXPECT_NEAR(V.value, exact, 1e-11 * exact) << m << " " << r;
      EXPECT_LE(V.error, 1e-9 * exact);
    }
  }
}

TEST(Schwarzschild, AreaWillmoreBeta) {
  const double m = 1.0, r = 3.0;
  const MetricModel s = MetricModel::schwarzschild(m);
  const double U = 1.0 + m / (2.0 * r), dU = -m / (2.0 * r * r);
  EXPECT_NEAR(riemannian_area(Region::ball({}, r), s).value, 4.0 * kPi * r * r * std::pow(U, 4), 1e-10);
  const double H = 2.0 / (r * U * U) + 4.0 * dU / (U * U * U);
  EXPECT_NEAR(sphere_mean_curvature(r, s), H, 1e-13);
  EXPECT_NEAR(willmore_energy(r, s).value, H * H * 4.0 * kPi * r * r * std::pow(U, 4), 1e-9);
  EXPECT_NEAR(beta(r, s).value, r * r * (std::pow(U, 4) - 1.0), 1e-12);
  EXPECT_NEAR(beta(r, MetricModel::euclidean(3)).value, 0.0, 1e-15);
}

TEST(Schwarzschild, HorizonIsMinimal) {
  EXPECT_NEAR(sphere_mean_curvature(0.5, MetricModel::schwarzschild(1.0)), 0.0, 1e-14);
}

TEST(Schwarzschild, RegionMustContainHorizon) {
  try {
    riemannian_volume(Region::ball({5.0, 0.0, 0.0}, 1.0), MetricModel::schwarzschild(1.0));
    FAIL() << "expected a domain error";
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Domain);
  }
}

TEST(Schwarzschild, OffCenterBallAgainstBruteForce) {
  const MetricModel s = MetricModel::schwarzschild(1.0);
  const Region K = Region::ball({1.0, 0.5, 0.0}, 4.0);
  const double oracle = brute_force_volume(K, s, 5.6, 0.04);
  EXPECT_NEAR(riemannian_volume(K, s).value, oracle, 1e-3 * oracle);
}

TEST(MultiCenter, BallVolumeAgainstBruteForce) {
  const MetricModel two = MetricModel::multi_center({{{-1.0, 0.0, 0.0}, 0.5}, {{1.0, 0.0, 0.0}, 0.5}});
  const Region K = Region::ball({}, 6.0);
  const double oracle = brute_force_volume(K, two, 6.0, 0.04);
  const Measured V = riemannian_volume(K, two);
  EXPECT_NEAR(V.value, oracle, 1e-3 * oracle);
  EXPECT_NEAR(V.value, 1921.3304, 1e-3);  // frozen
}

TEST(MultiCenter, SinglePoleReducesToSchwarzschild) {
  const MetricModel one = MetricModel::multi_center({{{0.0, 0.0, 0.0}, 1.0}});
  const Region K = Region::ball({}, 7.0);
  const double exact = schwarzschild_ball_volume(1.0, 7.0);
  EXPECT_NEAR(riemannian_volume(K, one).value, exact, 1e-8 * exact);
}

TEST(Euclidean, MeanCurvatureOfEllipsoidPoles) {
  const MetricModel flat = MetricModel::euclidean(3);
  const Region E = Region::ellipsoid({}, 3.0, 2.0, 1.0);
  // Parametric pole theta = pi/2, phi = 0 is (a, 0, 0): H = a/b^2 + a/c^2.
  EXPECT_NEAR(mean_curvature(E, flat, kPi / 2.0, 0.0), 3.0 / 4.0 + 3.0, 1e-6);
  EXPECT_NEAR(mean_curvature(Region::ball({1.0, 2.0, 3.0}, 2.0), flat, 0.7, 1.9), 1.0, 1e-9);
}

TEST(Euclidean, WillmoreOfSpheresAndEllipsoids) {
  const MetricModel flat = MetricModel::euclidean(3);
  EXPECT_NEAR(willmore_energy(Region::ball({}, 2.5), flat).value, 16.0 * kPi, 1e-9);
  EXPECT_GT(willmore_energy(Region::ellipsoid({}, 2.0, 1.0, 1.0), flat).value, 16.0 * kPi);
}

TEST(Euclidean, ScaledMetricVolumeAndArea) {
  const MetricModel m = MetricModel::euclidean(3).scaled(4.0);
  const Region E = Region::ellipsoid({}, 2.0, 1.0, 1.0);
  EXPECT_NEAR(riemannian_volume(E, m).value, 8.0 * euclidean_volume(E), 1e-10);
  EXPECT_NEAR(riemannian_area(E, m).value, 4.0 * euclidean_perimeter(E), 1e-9);
}

TEST(SphereFunctionals, Consistent) {
  const MetricModel s = MetricModel::schwarzschild(2.0);
  const SphereFunctionals f = sphere_functionals(10.0, s);
  EXPECT_NEAR(f.V.value, schwarzschild_ball_volume(2.0, 10.0), 1e-8);
  EXPECT_NEAR(f.A.value, riemannian_area(Region::ball({}, 10.0), s).value, 1e-9);
  ASSERT_FALSE(f.H_samples.empty());
  for (double h : f.H_samples) EXPECT_NEAR(h, sphere_mean_curvature(10.0, s), 1e-12);
}

TEST(HigherDim, SchwarzschildN4Volume) {
  const MetricModel s = MetricModel::schwarzschild(2.0, 4);
  // 2 pi^2 int_1^r s^3 (1 + 1/s^2)^4 ds
  auto F = [](double x) { return x * x * x * x / 4.0 + 2.0 * x * x + 6.0 * std::log(x) - 2.0 / (x * x) - 0.25 / std::pow(x, 4); };
  const double exact = 2.0 * kPi * kPi * (F(5.0) - F(1.0));
  EXPECT_NEAR(riemannian_volume(Region::ball({}, 5.0), s).value, exact, 1e-10 * exact);
  EXPECT_NEAR(riemannian_area(Region::ball({}, 5.0), s).value, 2.0 * kPi * kPi * 125.0 * std::pow(1.04, 3), 1e-9);
}
