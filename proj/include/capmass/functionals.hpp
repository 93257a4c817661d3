#pragma once

#include <vector>

#include "capmass/manifold.hpp"
#include "capmass/quadrature.hpp"
#include "capmass/regions.hpp"

namespace capmass {

// A functional value together with an estimate of its quadrature error.
struct Measured {
  double value = 0.0;
  double error = 0.0;
};

/// omega_{n-1}, the area of the unit sphere in R^n.
double unit_sphere_area(int n);
/// omega_{n-1} / n, the volume of the unit ball in R^n.
double unit_ball_volume(int n);

/// Throws Domain unless K contains every excised ball of the model with room to spare.
void require_region_in_domain(const Region& K, const MetricModel& model);

/// |K|_g, the volume of K minus the model's excised balls. The error is the
/// change against the halved quadrature orders (0 for closed forms).
Measured riemannian_volume(const Region& K, const MetricModel& model, const QuadratureOptions& q = {});

/// |dK|_g.
Measured riemannian_area(const Region& K, const MetricModel& model, const QuadratureOptions& q = {});

/// Mean curvature of dK with respect to g (outward normal, 2/r on round
/// Euclidean spheres) at the boundary point with parameters (theta, phi). n = 3.
double mean_curvature(const Region& K, const MetricModel& model, double theta, double phi);

/// Mean curvature of the coordinate sphere |x| = r at r * direction.
double sphere_mean_curvature(double r, const MetricModel& model, const Vec3& direction = {0.0, 0.0, 1.0});

/// Integral of H^2 dA_g over dK. n = 3.
Measured willmore_energy(const Region& K, const MetricModel& model, const QuadratureOptions& q = {});
Measured willmore_energy(double r, const MetricModel& model, const QuadratureOptions& q = {});

/// beta(r) = (1/8 pi) int_{S_r} h^{ij} sigma_ij dA_g on the coordinate sphere of radius r.
Measured beta(double r, const MetricModel& model, const QuadratureOptions& q = {});

/// (|K| / beta_n)^{1/n} and (|dK| / omega_{n-1})^{1/(n-1)}.
double volume_radius(double volume, int n = 3);
double area_radius(double area, int n = 3);

struct SphereFunctionals {
  double r = 0.0;
  Measured A, V, W, beta;
  std::vector<double> H_samples;   // on the sphere rule of the quadrature options
};

SphereFunctionals sphere_functionals(double r, const MetricModel& model, const QuadratureOptions& q = {});

}  // namespace capmass
