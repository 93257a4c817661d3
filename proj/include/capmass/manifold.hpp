#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "capmass/vec3.hpp"

namespace capmass {

enum class MetricKind { Euclidean, RadialConformal, MultiCenterHF };

const char* to_string(MetricKind kind);

struct PointMass {
  Vec3 position;
  double mass = 0.0;
};

// Ball removed from the coordinate chart: a horizon (Schwarzschild), the
// neighbourhood of a Brill-Lindquist pole, or the inner edge of a radial
// profile's domain. Regions must contain every excised ball.
struct ExcisedBall {
  Vec3 center;
  double radius = 0.0;
};

// Radial profile u(s) for g = lambda * u(|x|)^{4/(n-2)} delta. The derivative
// is optional; a centred difference is used when absent.
struct RadialProfile {
  std::function<double(double)> value;
  std::function<double(double)> derivative;
  double inner_radius = 0.0;   // domain is |x| >= inner_radius
  std::string label = "radial";
};

/// A conformally flat asymptotically flat metric g = lambda * U^{4/(n-2)} delta.
/// Immutable; copies share the profile.
class MetricModel {
 public:
  static MetricModel euclidean(int dimension = 3);
  static MetricModel schwarzschild(double mass, int dimension = 3);
  static MetricModel radial(int dimension, RadialProfile profile, double decay_order);
  static MetricModel multi_center(std::vector<PointMass> poles);

  /// The metric lambda * g. Used for scaling and sandwich invariants; the
  /// result is no longer asymptotic to delta when lambda != 1.
  MetricModel scaled(double lambda) const;

  MetricKind kind() const { return kind_; }
  int dimension() const { return dimension_; }
  double decay_order() const { return decay_order_; }
  double metric_scale() const { return scale_; }
  const std::string& label() const { return label_; }
  bool is_schwarzschild() const { return schwarzschild_mass_.has_value(); }
  std::optional<double> schwarzschild_mass() const { return schwarzschild_mass_; }
  const std::vector<PointMass>& poles() const { return poles_; }

  /// True when U is Euclidean-harmonic away from the excised balls
  /// (flat, Schwarzschild, multi-centre). Required by the conformal-shift
  /// capacity and by the Bray-Miao hypotheses.
  bool is_harmonically_flat() const;

  /// Radial models are those whose U depends only on |x|.
  bool is_radial() const { return kind_ != MetricKind::MultiCenterHF; }

  std::vector<ExcisedBall> excised_balls() const;

  /// U(x). Throws Domain inside an excised ball.
  double conformal_factor(const Vec3& x) const;
  /// U as a function of radius for radial models (any dimension).
  double conformal_factor_radial(double s) const;
  double conformal_factor_radial_derivative(double s) const;
  /// Euclidean gradient of U (n = 3).
  Vec3 conformal_gradient(const Vec3& x) const;

  /// Pointwise metric factor w = lambda * U^{4/(n-2)}, so g = w delta.
  double metric_factor(const Vec3& x) const;
  double metric_factor_radial(double s) const;

  /// True if x lies in the chart (outside every excised ball and pole).
  bool in_domain(const Vec3& x) const;

 private:
  MetricModel() = default;
  double radial_u(double s) const;

  MetricKind kind_ = MetricKind::Euclidean;
  int dimension_ = 3;
  double decay_order_ = 1.0;
  double scale_ = 1.0;
  std::string label_ = "euclidean";
  std::optional<double> schwarzschild_mass_;
  std::shared_ptr<const RadialProfile> profile_;
  std::vector<PointMass> poles_;
};

/// U(x) for the model. Euclidean gives 1, radial kinds u(|x|).
double conformal_factor(const MetricModel& model, const Vec3& x);

/// ADM mass from the leading 1/|x|^{n-2} coefficient of U. General radial
/// profiles are probed at R, 2R, 4R with Richardson elimination of the next
/// order; NotConverged if the two eliminations disagree.
double adm_mass(const MetricModel& model);

/// (m/2)^{1/(n-2)} for Schwarzschild, 0 for flat space. Unsupported otherwise.
double horizon_radius(const MetricModel& model);

}  // namespace capmass
