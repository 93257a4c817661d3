#include "capmass/quadrature.hpp"

#include <gsl/gsl_integration.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "capmass/error.hpp"

namespace capmass {

QuadratureOptions QuadratureOptions::halved() const {
  QuadratureOptions q = *this;
  q.angular_theta = std::max(2, angular_theta / 2);
  q.angular_phi = std::max(4, angular_phi / 2);
  q.radial_points = std::max(2, radial_points / 2);
  return q;
}

const GaussRule& gauss_legendre(int n) {
  require(n >= 1, "Gauss-Legendre order must be >= 1");
  static std::mutex mu;
  static std::map<int, std::unique_ptr<GaussRule>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[n];
  if (!slot) {
    auto rule = std::make_unique<GaussRule>();
    gsl_integration_glfixed_table* t = gsl_integration_glfixed_table_alloc(static_cast<size_t>(n));
    rule->nodes.resize(n);
    rule->weights.resize(n);
    for (int i = 0; i < n; ++i) {
      double x = 0, w = 0;
      gsl_integration_glfixed_point(-1.0, 1.0, static_cast<size_t>(i), &x, &w, t);
      rule->nodes[i] = x;
      rule->weights[i] = w;
    }
    gsl_integration_glfixed_table_free(t);
    slot = std::move(rule);
  }
  return *slot;
}

double integrate_gl(const ScalarFn& f, double a, double b, int n) {
  const GaussRule& g = gauss_legendre(n);
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) sum += g.weights[i] * f(mid + half * g.nodes[i]);
  return half * sum;
}

double integrate_panels(const ScalarFn& f, std::span<const double> breaks, int n) {
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) {
    if (breaks[i + 1] > breaks[i]) sum += integrate_gl(f, breaks[i], breaks[i + 1], n);
  }
  return sum;
}

double integrate_graded(const ScalarFn& f, double a, double b, int n, double ratio) {
  require(a > 0.0 && b >= a && ratio > 1.0, "integrate_graded needs 0 < a <= b and ratio > 1");
  std::vector<double> breaks{a};
  while (breaks.back() * ratio < b) breaks.push_back(breaks.back() * ratio);
  breaks.push_back(b);
  return integrate_panels(f, breaks, n);
}

double integrate_to_infinity(const ScalarFn& f, double a, int n) {
  require(a > 0.0, "integrate_to_infinity needs a > 0");
  // s = a/t, ds = a/t^2 dt. Graded panels toward t = 0 keep the far tail resolved.
  auto g = [&](double t) { return f(a / t) * a / (t * t); };
  std::vector<double> breaks{1.0};
  while (breaks.back() > 1e-6) breaks.push_back(breaks.back() / 4.0);
  breaks.push_back(0.0);
  double sum = 0.0;
  for (std::size_t i = 0; i + 1 < breaks.size(); ++i) sum += integrate_gl(g, breaks[i + 1], breaks[i], n);
  return sum;
}

SphereRule sphere_rule(int n_theta, int n_phi) {
  require(n_theta >= 1 && n_phi >= 1, "sphere rule orders must be positive");
  const GaussRule& g = gauss_legendre(n_theta);
  SphereRule rule;
  rule.theta.reserve(static_cast<size_t>(n_theta) * n_phi);
  rule.phi.reserve(rule.theta.capacity());
  rule.weight.reserve(rule.theta.capacity());
  const double dphi = 2.0 * std::numbers::pi / n_phi;
  for (int i = 0; i < n_theta; ++i) {
    const double theta = std::acos(g.nodes[i]);
    for (int j = 0; j < n_phi; ++j) {
      rule.theta.push_back(theta);
      rule.phi.push_back((j + 0.5) * dphi);
      rule.weight.push_back(g.weights[i] * dphi);
    }
  }
  return rule;
}

}  // namespace capmass
