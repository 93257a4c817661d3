#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "capmass/manifold.hpp"
#include "capmass/quadrature.hpp"
#include "capmass/regions.hpp"

namespace capmass {

enum class CapacityMethod { RadialQuadrature, ConformalShift, GridVariational, EuclideanClosedForm };

const char* to_string(CapacityMethod method);
CapacityMethod parse_capacity_method(const std::string& s);

struct CapacityEstimate {
  double value = 0.0;
  double error_estimate = 0.0;
  CapacityMethod method = CapacityMethod::RadialQuadrature;
  std::map<std::string, double> diagnostics;
};

enum class OuterBoundary { Robin, Dirichlet };

const char* to_string(OuterBoundary bc);
OuterBoundary parse_outer_boundary(const std::string& s);

struct GridOptions {
  int n = 96;                        // cells per side of the first box
  double outer_radius_factor = 4.0;  // box half-width / region bounding radius
  OuterBoundary outer_bc = OuterBoundary::Robin;
  double tol = 1e-10;                // relative residual
  int max_iter = 20000;
  bool extrapolate = true;           // second solve with a 1.25x larger box
  double exponent = 0.0;             // extrapolation exponent; 0 picks 3 (Robin) or 1 (Dirichlet)
  int threads = 0;                   // 0 = runtime default
};

/// Cell-centred samples of the capacitary potential on a cube.
struct PotentialField {
  int n = 0;
  double h = 0.0;
  Vec3 lower;                 // corner of cell (0,0,0)
  Vec3 center;                // box centre
  double region_radius = 0.0; // bounding radius of K about the centre
  std::vector<double> phi;    // index i + n*(j + n*k)
  std::vector<std::uint8_t> inside;

  std::size_t index(int i, int j, int k) const {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(n) * (j + static_cast<std::size_t>(n) * k);
  }
  Vec3 cell_center(int i, int j, int k) const {
    return lower + Vec3{(i + 0.5) * h, (j + 0.5) * h, (k + 0.5) * h};
  }
  double half_width() const { return 0.5 * n * h; }
  /// Trilinear interpolation of phi; points outside the cell-centre hull are clamped.
  double sample(const Vec3& x) const;
  /// Trilinear interpolation of the centred-difference gradient.
  Vec3 gradient(const Vec3& x) const;
};

struct GridSolution {
  CapacityEstimate estimate;
  PotentialField field;
};

/// Centred coordinate ball B_r in a radial model, any n >= 3. Normalised so
/// that Euclidean B_r has capacity r^{n-2}.
CapacityEstimate capacity_radial(const MetricModel& model, double r, const QuadratureOptions& q = {});

/// 1 / R_F(a^2, b^2, c^2), the Newtonian capacity of an ellipsoid.
double ellipsoid_capacity(double a, double b, double c);

/// Ball or ellipsoid in (scaled) flat space.
CapacityEstimate capacity_euclidean(const MetricModel& model, const Region& K);

/// cap_0(K) + m/2 for harmonically flat models whose poles lie inside K.
CapacityEstimate capacity_conformal_shift(const MetricModel& model, const Region& K, const GridOptions& grid = {});

/// Finite-volume minimisation of the weighted Dirichlet energy on a cube. n = 3.
GridSolution capacity_grid(const MetricModel& model, const Region& K, const GridOptions& grid = {});

/// Cheapest applicable backend.
CapacityMethod select_capacity_method(const MetricModel& model, const Region& K);
bool capacity_method_applies(CapacityMethod method, const MetricModel& model, const Region& K);

CapacityEstimate capacity(const MetricModel& model, const Region& K, CapacityMethod method,
                          const QuadratureOptions& q = {}, const GridOptions& grid = {});

struct ExpansionFit {
  double c = 0.0;
  std::vector<double> shell_radius;
  std::vector<double> shell_residual;   // max |W| |x|^2 / rho on each shell
  double max_residual = 0.0;
  bool stable = true;
};

/// Least-squares fit of phi = 1 - c/|x| over shells in the outer half of the field.
ExpansionFit extract_expansion(const PotentialField& field, const MetricModel& model, double rho);

struct BernoulliResult {
  double residual = 0.0;   // (max - min) / mean of the normal derivative
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
  int samples = 0;
};

BernoulliResult bernoulli_residual(const PotentialField& field, const Region& K, const MetricModel& model);

void export_field_csv(const PotentialField& field, const std::string& path);
void export_field_binary(const PotentialField& field, const std::string& path);

}  // namespace capmass
