#include <gtest/gtest.h>

#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <numbers>

#include "capmass/capacity.hpp"
#include "capmass/error.hpp"

using namespace capmass;
constexpr double kPi = std::numbers::pi;

namespace {

// 2 / int_0^inf dt / sqrt((a^2+t)(b^2+t)(c^2+t)) with t = c^2 tan^2(u), midpoint in u.
double ellipsoid_capacity_oracle(double a, double b, double c) {
  const int n = 200000;
  const double du = 0.5 * kPi / n;
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = (i + 0.5) * du;
    const double tn = std::tan(u), sc = 1.0 / std::cos(u);
    const double t = c * c * tn * tn;
    s += 2.0 * c * c * tn * sc * sc / std::sqrt((a * a + t) * (b * b + t) * (c * c + t)) * du;
  }
  return 2.0 / s;
}

GridOptions small_grid() {
  GridOptions g;
  g.n = 48;
  return g;
}

}  // namespace

TEST(Radial, EuclideanBallsAnyDimension) {
  for (double R : {0.5, 1.0, 10.0}) {
    EXPECT_NEAR(capacity_radial(MetricModel::euclidean(3), R).value, R, 1e-10 * R);
    EXPECT_NEAR(capacity_radial(MetricModel::euclidean(4), R).value, R * R, 1e-10 * R * R);
  }
}

TEST(Radial, SchwarzschildClosedForms) {
  for (double m : {0.5, 1.0, 2.0})
    for (double k : {2.0, 10.0, 100.0}) {
      const double r = k * m;
      const CapacityEstimate e = capacity_radial(MetricModel::schwarzschild(m), r);
      EXPECT_NEAR(e.value, r + m / 2.0, 1e-8 * (r + m / 2.0));
      EXPECT_LE(e.error_estimate, 1e-8 * e.value);
      EXPECT_EQ(e.method, CapacityMethod::RadialQuadrature);
    }
  for (double r : {2.0, 5.0, 20.0})
    EXPECT_NEAR(capacity_radial(MetricModel::schwarzschild(2.0, 4), r).value, r * r + 1.0, 1e-8 * r * r);
}

TEST(Radial, HorizonCapacityAndDomain) {
  EXPECT_NEAR(capacity_radial(MetricModel::schwarzschild(2.0), 1.000001).value, 2.000001, 1e-8);
  EXPECT_THROW(capacity_radial(MetricModel::schwarzschild(2.0), 1.0), Error);
  EXPECT_THROW(capacity_radial(MetricModel::schwarzschild(2.0), 0.9), Error);
}

// Property: cap_{lambda g} = lambda^{1/2} cap_g.
TEST(Radial, MetricScaling) {
  const MetricModel s = MetricModel::schwarzschild(1.0);
  for (double lambda : {0.1, 2.0, 7.5}) {
    const double base = capacity_radial(s, 3.0).value;
    EXPECT_NEAR(capacity_radial(s.scaled(lambda), 3.0).value, std::sqrt(lambda) * base, 1e-10 * base);
  }
}

TEST(ClosedForm, EllipsoidAgainstIntegralOracle) {
  const double axes[][3] = {{2.0, 1.0, 1.0}, {3.0, 2.0, 1.0}, {1.5, 1.5, 0.5}, {1.0, 1.0, 1.0}};
  for (const auto& a : axes)
    EXPECT_NEAR(ellipsoid_capacity(a[0], a[1], a[2]), ellipsoid_capacity_oracle(a[0], a[1], a[2]), 1e-8)
        << a[0] << "," << a[1] << "," << a[2];
  const double prolate = std::sqrt(3.0) / std::acosh(2.0);
  EXPECT_NEAR(ellipsoid_capacity(2.0, 1.0, 1.0), prolate, 1e-13);
  EXPECT_NEAR(prolate, 1.315191, 1e-6);
}

TEST(ClosedForm, DispatchAndLimits) {
  const MetricModel flat = MetricModel::euclidean(3);
  EXPECT_NEAR(capacity_euclidean(flat, Region::ball({1.0, 1.0, 1.0}, 2.0)).value, 2.0, 1e-14);
  EXPECT_NEAR(capacity_euclidean(flat.scaled(4.0), Region::ball({}, 1.0)).value, 2.0, 1e-14);
  EXPECT_THROW(capacity_euclidean(flat, Region::star({}, 1.0, 0.2, AngularProfile::abs_y20())), Error);
  EXPECT_THROW(capacity_euclidean(MetricModel::schwarzschild(1.0), Region::ball({}, 2.0)), Error);
}

TEST(Shift, SchwarzschildOffCenterAndMultiCenter) {
  const MetricModel s = MetricModel::schwarzschild(1.0);
  const CapacityEstimate e = capacity_conformal_shift(s, Region::ball({1.0, 0.5, 0.0}, 4.0));
  EXPECT_NEAR(e.value, 4.5, 1e-12);
  const MetricModel two = MetricModel::multi_center({{{-1.0, 0.0, 0.0}, 0.5}, {{1.0, 0.0, 0.0}, 0.5}});
  EXPECT_NEAR(capacity_conformal_shift(two, Region::ellipsoid({}, 3.0, 2.0, 2.0)).value,
              ellipsoid_capacity(3.0, 2.0, 2.0) + 0.5, 1e-12);
  try {
    capacity_conformal_shift(two, Region::ball({5.0, 0.0, 0.0}, 3.0));
    FAIL() << "expected a domain error";
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::Domain);
  }
}

TEST(Selection, CheapestApplicableBackend) {
  const MetricModel flat = MetricModel::euclidean(3), s = MetricModel::schwarzschild(1.0);
  EXPECT_EQ(select_capacity_method(s, Region::ball({}, 2.0)), CapacityMethod::RadialQuadrature);
  EXPECT_EQ(select_capacity_method(flat, Region::ellipsoid({}, 2.0, 1.0, 1.0)), CapacityMethod::EuclideanClosedForm);
  EXPECT_EQ(select_capacity_method(s, Region::ball({1.0, 0.0, 0.0}, 3.0)), CapacityMethod::ConformalShift);
  EXPECT_EQ(select_capacity_method(flat, Region::star({}, 1.0, 0.3, AngularProfile::abs_y20())),
            CapacityMethod::GridVariational);
  EXPECT_FALSE(capacity_method_applies(CapacityMethod::RadialQuadrature, s, Region::ball({1.0, 0.0, 0.0}, 3.0)));
  EXPECT_EQ(parse_capacity_method("shift"), CapacityMethod::ConformalShift);
  EXPECT_STREQ(to_string(CapacityMethod::GridVariational), "grid-variational");
  EXPECT_THROW(parse_capacity_method("magic"), Error);
  EXPECT_EQ(parse_outer_boundary("dirichlet"), OuterBoundary::Dirichlet);
}

TEST(Grid, EuclideanBallSmallGrid) {
  const GridSolution sol = capacity_grid(MetricModel::euclidean(3), Region::ball({}, 1.0), small_grid());
  EXPECT_NEAR(sol.estimate.value, 1.0, 0.03);
  EXPECT_GE(sol.estimate.error_estimate + 1e-12, 0.0);
  EXPECT_EQ(sol.field.n, 48);
  const ExpansionFit fit = extract_expansion(sol.field, MetricModel::euclidean(3), 1.0);
  EXPECT_NEAR(fit.c, 1.0, 0.05);
  const BernoulliResult b = bernoulli_residual(sol.field, Region::ball({}, 1.0), MetricModel::euclidean(3));
  EXPECT_GT(b.samples, 0);
  EXPECT_LT(b.residual, 0.1);
  // One-sided difference at offset 3h = 0.5 gives (4 phi(1.5) - phi(2)) / 1 = 5/6 exactly for 1 - 1/r.
  EXPECT_NEAR(b.mean, 5.0 / 6.0, 0.02);
}

TEST(Grid, DirichletBoxOverestimates) {
  GridOptions g = small_grid();
  g.outer_bc = OuterBoundary::Dirichlet;
  g.extrapolate = false;
  const double dirichlet = capacity_grid(MetricModel::euclidean(3), Region::ball({}, 1.0), g).estimate.value;
  // Grounded box of half-width 4: the capacity exceeds that of free space.
  EXPECT_GT(dirichlet, 1.0);
  EXPECT_LT(dirichlet, 1.4);
}

TEST(Grid, RejectsUnderResolvedRegions) {
  GridOptions g = small_grid();
  g.outer_radius_factor = 40.0;
  EXPECT_THROW(capacity_grid(MetricModel::euclidean(3), Region::ellipsoid({}, 1.0, 1.0, 0.05), g), Error);
}

TEST(Grid, FieldExportFormats) {
  GridOptions g;
  g.n = 32;
  g.extrapolate = false;
  const GridSolution sol = capacity_grid(MetricModel::euclidean(3), Region::ball({}, 1.0), g);
  const auto dir = std::filesystem::temp_directory_path() / "capmass_field_test";
  std::filesystem::create_directories(dir);
  export_field_binary(sol.field, (dir / "f.bin").string());
  export_field_csv(sol.field, (dir / "f.csv").string());
  std::ifstream bin(dir / "f.bin", std::ios::binary);
  char magic[4];
  bin.read(magic, 4);
  EXPECT_EQ(std::memcmp(magic, "CMPF", 4), 0);
  EXPECT_EQ(std::filesystem::file_size(dir / "f.bin"), 4u + 4u + 4u * 8u + 32u * 32u * 32u * 8u);
  std::ifstream csv(dir / "f.csv");
  std::string header;
  std::getline(csv, header);
  EXPECT_EQ(header, "i,j,k,phi");
  std::filesystem::remove_all(dir);
}
