#pragma once

#include <functional>
#include <span>
#include <vector>

namespace capmass {

// Quadrature orders shared by every functional. Keys under `quadrature.*`.
struct QuadratureOptions {
  int angular_theta = 64;      // Gauss-Legendre nodes in cos(theta)
  int angular_phi = 128;       // uniform nodes in phi
  int radial_points = 32;      // Gauss-Legendre nodes per radial panel
  double tail_radius_factor = 1e3;

  QuadratureOptions halved() const;
};

struct GaussRule {
  std::vector<double> nodes;    // on [-1, 1]
  std::vector<double> weights;
};

/// Cached n-point Gauss-Legendre rule. Safe to call concurrently.
const GaussRule& gauss_legendre(int n);

using ScalarFn = std::function<double(double)>;

/// n-point Gauss-Legendre on a single interval.
double integrate_gl(const ScalarFn& f, double a, double b, int n);

/// Composite Gauss-Legendre over consecutive breakpoints.
double integrate_panels(const ScalarFn& f, std::span<const double> breaks, int n);

/// Composite rule on [a, b] with panels growing geometrically by `ratio`
/// away from a (requires a > 0). Suited to integrands varying on the scale
/// of the distance to the origin.
double integrate_graded(const ScalarFn& f, double a, double b, int n, double ratio = 2.0);

/// Integral of f over [a, inf) via the inversion s = a / t, which maps the
/// tail onto (0, 1] with no truncation.
double integrate_to_infinity(const ScalarFn& f, double a, int n);

// Tensor rule on the unit sphere: Gauss-Legendre in cos(theta) times the
// periodic trapezoid rule in phi. Weights integrate d(omega).
struct SphereRule {
  std::vector<double> theta;
  std::vector<double> phi;
  std::vector<double> weight;

  std::size_t size() const { return weight.size(); }
};

SphereRule sphere_rule(int n_theta, int n_phi);

}  // namespace capmass
