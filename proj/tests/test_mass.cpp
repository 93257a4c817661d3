#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "capmass/error.hpp"
#include "capmass/mass.hpp"

using namespace capmass;
constexpr double kPi = std::numbers::pi;

namespace {

double schwarzschild_ball_volume(double m, double r) {
  const double h = m / 2.0;
  auto F = [&](double s) {
    double acc = 0.0, binom = 1.0;
    for (int k = 0; k <= 6; ++k) {
      const double c = binom * std::pow(h, k);
      acc += k == 3 ? c * std::log(s) : c * std::pow(s, 3 - k) / (3 - k);
      binom = binom * (6 - k) / (k + 1);
    }
    return acc;
  };
  return 4.0 * kPi * (F(r) - F(h));
}

DeficitOptions fast_options() {
  DeficitOptions o;
  o.asymmetry = false;
  return o;
}

}  // namespace

TEST(Figure, OkRequiresFiniteValue) {
  EXPECT_TRUE((Figure{1.0, 0.0}).ok());
  EXPECT_FALSE((Figure{NAN, 0.0}).ok());
}

TEST(Deficits, SchwarzschildBallAgainstClosedForms) {
  const double m = 1.0, r = 50.0;
  const DeficitRecord d = deficit_record(Region::ball({}, r), MetricModel::schwarzschild(m), fast_options(), 0, r);
  ASSERT_TRUE(d.capacity_ok);
  const double v = std::cbrt(3.0 * schwarzschild_ball_volume(m, r) / (4.0 * kPi));
  const double a = r * std::pow(1.0 + m / (2.0 * r), 2);
  const double c = r + m / 2.0;
  EXPECT_NEAR(d.v_radius.value, v, 1e-11 * v);
  EXPECT_NEAR(d.a_radius.value, a, 1e-11 * a);
  EXPECT_NEAR(d.cv_deficit_radius.value, v - c, 1e-9);
  EXPECT_NEAR(d.iso_deficit_alt.value, 2.0 * (v - a), 1e-9);
  EXPECT_NEAR(d.cv_deficit_radius.value, 1.032167343886, 1e-9);   // frozen
  EXPECT_NEAR(d.iso_deficit_alt.value, 1.054334687771, 1e-9);     // frozen
  ASSERT_TRUE(d.bray_miao_bound.has_value());
  EXPECT_NEAR(d.bray_miao_bound->value, c, 1e-9);
}

TEST(Deficits, EuclideanBallHasZeroDeficits) {
  const DeficitRecord d = deficit_record(Region::ball({1.0, 2.0, 0.0}, 3.0), MetricModel::euclidean(3), fast_options());
  EXPECT_NEAR(d.cv_deficit_radius.value, 0.0, 1e-12);
  EXPECT_NEAR(d.cv_deficit_normalized.value, 0.0, 1e-12);
  EXPECT_NEAR(d.iso_deficit.value, 0.0, 1e-12);
  EXPECT_NEAR(d.iso_deficit_alt.value, 0.0, 1e-12);
}

TEST(Deficits, EllipsoidDeficitIsLinearInScale) {
  const MetricModel flat = MetricModel::euclidean(3);
  const DeficitRecord d1 = deficit_record(Region::ellipsoid({}, 20.0, 10.0, 10.0), flat, DeficitOptions{}, 0, 10.0);
  const DeficitRecord d2 = deficit_record(Region::ellipsoid({}, 40.0, 20.0, 20.0), flat, fast_options(), 1, 20.0);
  const double oracle = 10.0 * (std::cbrt(2.0) - std::sqrt(3.0) / std::acosh(2.0));
  EXPECT_NEAR(d1.cv_deficit_radius.value, oracle, 1e-10);
  EXPECT_NEAR(d2.cv_deficit_radius.value, 2.0 * oracle, 1e-10);
  ASSERT_TRUE(d1.asymmetry.has_value());
  EXPECT_NEAR(d1.asymmetry->value, 0.519079, 1e-5);
}

TEST(Deficits, ForcedInapplicableBackendIsRecorded) {
  DeficitOptions o = fast_options();
  o.method = CapacityMethod::RadialQuadrature;
  const DeficitRecord d = deficit_record(Region::ball({1.0, 0.0, 0.0}, 4.0), MetricModel::schwarzschild(1.0), o);
  EXPECT_FALSE(d.capacity_ok);
  EXPECT_FALSE(d.field_errors.empty());
  EXPECT_FALSE(d.cv_deficit_radius.ok());
  EXPECT_TRUE(d.iso_deficit.ok());
}

// Property: normalized minus radius deficit equals (v-c)^2 (v+2c) / (3c^2).
TEST(Deficits, FormEquivalenceIdentity) {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  for (int i = 0; i < 25; ++i) {
    const double m = 0.2 + 2.0 * U(rng), r = m * (1.0 + 200.0 * U(rng));
    const DeficitRecord d = deficit_record(Region::ball({}, r), MetricModel::schwarzschild(m), fast_options());
    const double v = d.v_radius.value, c = d.capacity.value;
    const double bound = (v - c) * (v - c) * (v + 2.0 * c) / (3.0 * c * c);
    const double diff = d.cv_deficit_normalized.value - d.cv_deficit_radius.value;
    EXPECT_NEAR(diff, bound, 1e-12 * std::max(1.0, v)) << m << " " << r;
  }
}

TEST(BrayMiao, EqualityOnSchwarzschildSpheres) {
  for (double m : {0.5, 2.0}) {
    const MetricModel s = MetricModel::schwarzschild(m);
    for (double r : {m, 5.0 * m, 50.0 * m}) {
      const BrayMiaoCheck c = bray_miao_check(Region::ball({}, r), s, capacity_radial(s, r));
      EXPECT_TRUE(c.ok);
      EXPECT_NEAR(c.margin, 0.0, 1e-9 * c.capacity);
    }
  }
}

TEST(BrayMiao, StrictForEllipsoid) {
  const MetricModel flat = MetricModel::euclidean(3);
  const Region E = Region::ellipsoid({}, 2.0, 1.0, 1.0);
  const BrayMiaoCheck c = bray_miao_check(E, flat, capacity_euclidean(flat, E));
  EXPECT_TRUE(c.ok);
  EXPECT_GT(c.margin, 0.05);
}

TEST(Extrapolate, RecoversExactPowerLaw) {
  const std::vector<double> rho{10, 20, 40, 80};
  std::vector<double> d;
  for (double x : rho) d.push_back(1.3 + 2.0 / x);
  const LimitFit f = mass_extrapolate(rho, d, 1.0);
  EXPECT_NEAR(f.limit, 1.3, 1e-12);
  EXPECT_NEAR(f.slope, 2.0, 1e-10);
  EXPECT_LT(f.residual, 1e-12);
  EXPECT_FALSE(f.tail_warning);
}

TEST(Extrapolate, RecoversLogCorrectedLaw) {
  const std::vector<double> rho{5, 10, 20, 40};
  std::vector<double> d;
  for (double x : rho) d.push_back(2.0 + (1.5 - 0.7 * std::log(x)) / (x * x));
  const LimitFit f = mass_extrapolate(rho, d, 2.0, true);
  EXPECT_TRUE(f.log_term);
  EXPECT_NEAR(f.limit, 2.0, 1e-10);
  EXPECT_NEAR(f.log_slope, -0.7, 1e-8);
}

TEST(Extrapolate, RejectsTooFewPoints) {
  EXPECT_THROW(mass_extrapolate(std::vector<double>{1.0}, std::vector<double>{1.0}), Error);
}

TEST(Report, SchwarzschildRecoversMass) {
  ExhaustionSpec spec;
  spec.base = Region::ball({}, 1.0);
  spec.rho0 = 50.0;
  spec.count = 4;
  ReportOptions opt;
  opt.deficit = fast_options();
  const MassReport rep = build_mass_report(MetricModel::schwarzschild(1.0), spec, opt);
  ASSERT_EQ(rep.records.size(), 4u);
  EXPECT_NEAR(rep.limits.at("cv_def_radius").limit, 1.0, 0.005);
  EXPECT_NEAR(rep.limits.at("iso_def_alt").limit, 1.0, 0.005);
  ASSERT_TRUE(rep.adm_reference.has_value());
  EXPECT_DOUBLE_EQ(*rep.adm_reference, 1.0);
  EXPECT_FALSE(rep.diverges);
  EXPECT_TRUE(rep.all_ok());
  bool saw_cv = false;
  for (const auto& c : rep.checks) saw_cv = saw_cv || c.name == "cv_positive";
  EXPECT_TRUE(saw_cv);
}

TEST(Report, EuclideanLimitIsZeroAndEllipsoidsDiverge) {
  ExhaustionSpec spec;
  spec.base = Region::ball({}, 1.0);
  spec.count = 3;
  ReportOptions opt;
  opt.deficit = fast_options();
  const MassReport balls = build_mass_report(MetricModel::euclidean(3), spec, opt);
  EXPECT_NEAR(balls.limits.at("cv_def_radius").limit, 0.0, 1e-10);
  EXPECT_TRUE(balls.all_ok());

  spec.base = Region::ellipsoid({}, 2.0, 1.0, 1.0);
  spec.count = 4;
  const MassReport ell = build_mass_report(MetricModel::euclidean(3), spec, opt);
  EXPECT_TRUE(ell.diverges);
  EXPECT_TRUE(ell.all_ok());

  opt.checks = {"no_such_check"};
  EXPECT_THROW(build_mass_report(MetricModel::euclidean(3), spec, opt), Error);
}

TEST(Spread, OffsetBallsStayBelowMassPlusSpread) {
  const MetricModel s = MetricModel::schwarzschild(1.0);
  ExhaustionSpec spec;
  spec.base = Region::ball({0.5, 0.0, 0.0}, 1.0);
  spec.rho0 = 50.0;
  spec.rule = ScalingRule::ScaleRadiusFixOffset;
  const Exhaustion ex = generate_exhaustion(spec);
  std::vector<DeficitRecord> recs;
  for (std::size_t j = 0; j < ex.regions.size(); ++j)
    recs.push_back(deficit_record(ex.regions[j], s, fast_options(), static_cast<int>(j), ex.scales[j]));
  const SpreadCheck c = bounded_spread_check(recs, ex.regions, s, 0.0);
  EXPECT_TRUE(c.ok);
  EXPECT_NEAR(c.alpha, 1.0, 1e-6);
  EXPECT_NEAR(c.limit, 1.0, 0.02);
}

TEST(Expansion, ResidualHalvesWithRadius) {
  const MetricModel s = MetricModel::schwarzschild(1.0);
  const double r1 = expansion_check(20.0, s).residual, r2 = expansion_check(40.0, s).residual;
  EXPECT_GT(std::abs(r1 / r2), 1.8);
}

TEST(Isocap, EllipsoidConstantIsPositive) {
  const IsocapCheck c = quantitative_isocap_check(Region::ellipsoid({}, 2.0, 1.0, 1.0));
  EXPECT_FALSE(c.skipped);
  EXPECT_TRUE(c.ok);
  EXPECT_NEAR(c.constant, 0.604240, 1e-4);   // frozen
  EXPECT_TRUE(quantitative_isocap_check(Region::ball({}, 1.0)).skipped);
}

TEST(HigherDim, FourDimensionalLimit) {
  const MetricModel s = MetricModel::schwarzschild(2.0, 4);
  std::vector<HigherDimRecord> recs;
  for (double r : {5.0, 10.0, 20.0}) recs.push_back(higher_dim_deficits(r, s));
  // U = 1 + 1/s^2, horizon at s = 1, capacity r^2 + 1 (stored as the k-th power).
  auto F = [](double s) { return s * s * s * s / 4 + 2 * s * s + 6 * std::log(s) - 2 / (s * s) - 1 / (4 * s * s * s * s); };
  for (const auto& h : recs) {
    const double V = 2 * kPi * kPi * (F(h.r) - F(1.0));
    const double c = h.r * h.r + 1.0;
    EXPECT_NEAR(h.capacity.value, c, 1e-10 * c);
    const double cv = 4.0 / (3.0 * 2 * kPi * kPi * c) * (V - kPi * kPi / 2 * c * c);
    EXPECT_NEAR(h.cv_deficit.value, cv, 1e-8) << h.r;
  }
  EXPECT_NEAR(higher_dim_limit(recs).limit, 2.0, 0.02);
  const HigherDimRecord flat = higher_dim_deficits(3.0, MetricModel::euclidean(4));
  EXPECT_NEAR(flat.cv_deficit.value, 0.0, 1e-12);
  EXPECT_NEAR(flat.iso_deficit.value, 0.0, 1e-12);
}
