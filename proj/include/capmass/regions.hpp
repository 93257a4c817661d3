#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "capmass/quadrature.hpp"
#include "capmass/vec3.hpp"

namespace capmass {

class MetricModel;

struct HarmonicTerm {
  int l = 0;
  int m = 0;
  double coefficient = 0.0;
};

/// Angular profile s(theta, phi) in [0, 1] built from real spherical
/// harmonics. The raw expansion f is normalised by its extrema, either as
/// (f - min)/(max - min) or, with `absolute`, as |f| / max|f|.
class AngularProfile {
 public:
  AngularProfile() = default;
  AngularProfile(std::vector<HarmonicTerm> terms, bool absolute);

  /// |Y_20| normalised to peak 1.
  static AngularProfile abs_y20();

  double operator()(double theta, double phi) const;
  double raw(double theta, double phi) const;
  const std::vector<HarmonicTerm>& terms() const { return terms_; }
  bool absolute() const { return absolute_; }

 private:
  std::vector<HarmonicTerm> terms_;
  bool absolute_ = false;
  double lo_ = 0.0;
  double hi_ = 1.0;
};

/// Real orthonormal spherical harmonic.
double real_spherical_harmonic(int l, int m, double theta, double phi);

struct Ball {
  Vec3 center;
  double radius = 1.0;
};

// Axis-aligned, semi-axes a >= b >= c > 0 along x, y, z.
struct Ellipsoid {
  Vec3 center;
  double a = 1.0, b = 1.0, c = 1.0;
};

// Boundary r(theta, phi) = base_radius + amplitude * s(theta, phi) about center.
struct StarShaped {
  Vec3 center;
  double base_radius = 1.0;
  double amplitude = 0.0;
  AngularProfile profile;
};

struct VoxelSet {
  Vec3 origin;   // corner of cell (0,0,0)
  double spacing = 1.0;
  int nx = 0, ny = 0, nz = 0;
  std::vector<std::uint8_t> occupancy;   // index i + nx*(j + ny*k)

  bool occupied(int i, int j, int k) const {
    if (i < 0 || j < 0 || k < 0 || i >= nx || j >= ny || k >= nz) return false;
    return occupancy[static_cast<std::size_t>(i) + static_cast<std::size_t>(nx) * (j + static_cast<std::size_t>(ny) * k)] != 0;
  }
  Vec3 cell_center(int i, int j, int k) const {
    return origin + Vec3{(i + 0.5) * spacing, (j + 0.5) * spacing, (k + 0.5) * spacing};
  }
  std::size_t count() const;
};

using Shape = std::variant<Ball, Ellipsoid, StarShaped, VoxelSet>;

// Parametrisation x(theta, phi) of a boundary with first and (optionally)
// second partial derivatives.
struct SurfaceFrame {
  Vec3 x, x_t, x_p, x_tt, x_tp, x_pp;
};

/// A compact coordinate region K with nonempty interior. Immutable value.
class Region {
 public:
  static Region ball(const Vec3& center, double radius);
  static Region ellipsoid(const Vec3& center, double a, double b, double c);
  static Region star(const Vec3& center, double base_radius, double amplitude, AngularProfile profile);
  static Region voxels(VoxelSet set);
  /// Voxelisation of `source` at spacing h: a cell is occupied iff its centre is inside.
  static Region voxelize(const Region& source, double h);

  const Shape& shape() const { return shape_; }
  std::string describe() const;

  bool contains(const Vec3& x) const;
  bool is_ball() const { return std::holds_alternative<Ball>(shape_); }
  bool is_voxel() const { return std::holds_alternative<VoxelSet>(shape_); }
  /// Smooth parametric boundary available (everything except VoxelSet).
  bool has_surface() const { return !is_voxel(); }

  /// Centre the boundary is star-shaped about (bounding-box centre for voxels).
  Vec3 center() const;
  /// Distance from center() to the boundary along the unit direction (theta, phi).
  double boundary_radius(double theta, double phi) const;
  SurfaceFrame surface(double theta, double phi, bool second_derivatives = false) const;

  /// max |x - about| over K.
  double bounding_radius(const Vec3& about) const;
  /// min |x - about| over the boundary.
  double boundary_distance(const Vec3& about) const;
  /// Smallest width of the region (diameter for balls, 2c for ellipsoids).
  double thinnest_feature() const;

  /// Homothety x -> about + lambda (x - about).
  Region scaled(double lambda, const Vec3& about) const;

 private:
  explicit Region(Shape s) : shape_(std::move(s)) {}
  Shape shape_;
};

// Exposed face of a boundary voxel. `area` is the face area divided by the
// l1 norm of the local normal estimated from the 3x3x3 neighbourhood.
struct BoundaryFace {
  Vec3 center;
  Vec3 normal;
  double area = 0.0;
};

std::vector<BoundaryFace> voxel_boundary_faces(const VoxelSet& v);

double euclidean_volume(const Region& K, const QuadratureOptions& q = {});
double euclidean_perimeter(const Region& K, const QuadratureOptions& q = {});

struct FraenkelOptions {
  std::uint64_t seed = 20240601;
  int strata = 48;          // stratified samples per spherical coordinate
  double tolerance = 1e-3;  // final step, relative to the ball radius
  int max_iterations = 200;
};

struct FraenkelResult {
  double value = 0.0;
  Vec3 ball_center;
  double ball_radius = 0.0;
  bool converged = true;
  int evaluations = 0;
};

/// Volume of the intersection of K with the ball B(c, rho).
double intersection_volume(const Region& K, const Vec3& c, double rho, const FraenkelOptions& opt = {});

/// inf over centres of |K symmetric-difference B| / |B| with |B| = |K|.
FraenkelResult fraenkel_asymmetry(const Region& K, const FraenkelOptions& opt = {});

/// max - min of |x| over the boundary (radii measured from the origin).
double radial_spread(const Region& K);

/// |dK|_g^{3/2} / (6 sqrt(pi) |K|_g), n = 3.
double isoperimetric_ratio(const Region& K, const MetricModel& model, const QuadratureOptions& q = {});

enum class ScalingRule { ScaleAll, ScaleRadiusFixOffset, FixShapeFixAsymmetry };

const char* to_string(ScalingRule rule);
ScalingRule parse_scaling_rule(const std::string& s);

/// Region j is the template scaled by rho_j = rho0 * gamma^j under `rule`.
struct ExhaustionSpec {
  Region base = Region::ball({}, 1.0);
  double rho0 = 10.0;
  double gamma = 2.0;
  int count = 4;
  ScalingRule rule = ScalingRule::ScaleAll;
};

struct Exhaustion {
  std::vector<double> scales;
  std::vector<Region> regions;
  // K_j inside K_{j+1} by bounding radii, from the first index where it holds on.
  bool nested_tail = false;
  int nested_from = -1;
};

Region apply_scaling(const Region& base, double lambda, ScalingRule rule);
Exhaustion generate_exhaustion(const ExhaustionSpec& spec);

}  // namespace capmass
