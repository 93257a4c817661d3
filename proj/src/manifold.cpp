#include "capmass/manifold.hpp"

#include <cmath>
#include <sstream>

#include "capmass/error.hpp"

namespace capmass {

const char* to_string(MetricKind kind) {
  switch (kind) {
    case MetricKind::Euclidean: return "euclidean";
    case MetricKind::RadialConformal: return "radial";
    case MetricKind::MultiCenterHF: return "multicenter";
  }
  return "unknown";
}

MetricModel MetricModel::euclidean(int dimension) {
  require(dimension >= 3, "dimension must be >= 3");
  MetricModel m;
  m.kind_ = MetricKind::Euclidean;
  m.dimension_ = dimension;
  m.decay_order_ = dimension - 2;
  m.label_ = "euclidean";
  return m;
}

MetricModel MetricModel::schwarzschild(double mass, int dimension) {
  require(dimension >= 3, "dimension must be >= 3");
  require(mass >= 0.0 && std::isfinite(mass), "Schwarzschild mass must be finite and >= 0");
  if (mass == 0.0) return euclidean(dimension);
  const double k = dimension - 2.0;
  RadialProfile p;
  p.value = [mass, k](double s) { return 1.0 + mass / (2.0 * std::pow(s, k)); };
  p.derivative = [mass, k](double s) { return -k * mass / (2.0 * std::pow(s, k + 1.0)); };
  p.inner_radius = std::pow(mass / 2.0, 1.0 / k);
  p.label = "schwarzschild";
  MetricModel m = radial(dimension, std::move(p), k);
  m.schwarzschild_mass_ = mass;
  std::ostringstream os;
  os << "schwarzschild(n=" << dimension << ",m=" << mass << ")";
  m.label_ = os.str();
  return m;
}

MetricModel MetricModel::radial(int dimension, RadialProfile profile, double decay_order) {
  require(dimension >= 3, "dimension must be >= 3");
  require(static_cast<bool>(profile.value), "radial profile needs a value function");
  require(profile.inner_radius >= 0.0, "inner radius must be >= 0");
  require(decay_order > 0.0, "decay order must be positive");
  MetricModel m;
  m.kind_ = MetricKind::RadialConformal;
  m.dimension_ = dimension;
  m.decay_order_ = decay_order;
  m.label_ = profile.label;
  m.profile_ = std::make_shared<const RadialProfile>(std::move(profile));
  return m;
}

MetricModel MetricModel::multi_center(std::vector<PointMass> poles) {
  require(!poles.empty(), "multi-centre model needs at least one pole");
  for (const auto& p : poles) require(p.mass > 0.0 && std::isfinite(p.mass), "pole masses must be > 0");
  MetricModel m;
  m.kind_ = MetricKind::MultiCenterHF;
  m.dimension_ = 3;
  m.decay_order_ = 1.0;
  m.label_ = "multicenter";
  m.poles_ = std::move(poles);
  return m;
}

MetricModel MetricModel::scaled(double lambda) const {
  require(lambda > 0.0 && std::isfinite(lambda), "metric scale must be > 0");
  MetricModel m = *this;
  m.scale_ *= lambda;
  return m;
}

bool MetricModel::is_harmonically_flat() const {
  switch (kind_) {
    case MetricKind::Euclidean: return true;
    case MetricKind::MultiCenterHF: return true;
    case MetricKind::RadialConformal: return dimension_ == 3 && schwarzschild_mass_.has_value();
  }
  return false;
}

std::vector<ExcisedBall> MetricModel::excised_balls() const {
  std::vector<ExcisedBall> out;
  if (kind_ == MetricKind::RadialConformal && profile_->inner_radius > 0.0) {
    out.push_back({Vec3{}, profile_->inner_radius});
  } else if (kind_ == MetricKind::MultiCenterHF) {
    for (const auto& p : poles_) out.push_back({p.position, p.mass / 2.0});
  }
  return out;
}

double MetricModel::radial_u(double s) const { return profile_->value(s); }

double MetricModel::conformal_factor_radial(double s) const {
  if (kind_ == MetricKind::Euclidean) return 1.0;
  if (kind_ == MetricKind::MultiCenterHF) fail(ErrorCode::Unsupported, "multi-centre model is not radial");
  if (s < profile_->inner_radius || s <= 0.0) {
    std::ostringstream os;
    os << "radius " << s << " is inside the excised ball of radius " << profile_->inner_radius;
    fail(ErrorCode::Domain, os.str());
  }
  return radial_u(s);
}

double MetricModel::conformal_factor_radial_derivative(double s) const {
  if (kind_ == MetricKind::Euclidean) return 0.0;
  if (kind_ == MetricKind::MultiCenterHF) fail(ErrorCode::Unsupported, "multi-centre model is not radial");
  if (profile_->derivative) return profile_->derivative(s);
  const double h = 1e-5 * std::max(1.0, s);
  return (conformal_factor_radial(s + h) - conformal_factor_radial(s - h)) / (2.0 * h);
}

double MetricModel::conformal_factor(const Vec3& x) const {
  switch (kind_) {
    case MetricKind::Euclidean: return 1.0;
    case MetricKind::RadialConformal: return conformal_factor_radial(norm(x));
    case MetricKind::MultiCenterHF: {
      double u = 1.0;
      for (const auto& p : poles_) {
        const double d = norm(x - p.position);
        if (d == 0.0) fail(ErrorCode::Domain, "point coincides with a pole");
        u += p.mass / (2.0 * d);
      }
      return u;
    }
  }
  return 1.0;
}

Vec3 MetricModel::conformal_gradient(const Vec3& x) const {
  switch (kind_) {
    case MetricKind::Euclidean: return {};
    case MetricKind::RadialConformal: {
      const double s = norm(x);
      if (s == 0.0) fail(ErrorCode::Domain, "gradient at the origin");
      return x * (conformal_factor_radial_derivative(s) / s);
    }
    case MetricKind::MultiCenterHF: {
      Vec3 g;
      for (const auto& p : poles_) {
        const Vec3 d = x - p.position;
        const double r = norm(d);
        if (r == 0.0) fail(ErrorCode::Domain, "point coincides with a pole");
        g -= d * (p.mass / (2.0 * r * r * r));
      }
      return g;
    }
  }
  return {};
}

double MetricModel::metric_factor(const Vec3& x) const {
  const double u = conformal_factor(x);
  return scale_ * std::pow(u, 4.0 / (dimension_ - 2.0));
}

double MetricModel::metric_factor_radial(double s) const {
  const double u = conformal_factor_radial(s);
  return scale_ * std::pow(u, 4.0 / (dimension_ - 2.0));
}

bool MetricModel::in_domain(const Vec3& x) const {
  for (const auto& b : excised_balls()) {
    if (norm(x - b.center) < b.radius) return false;
  }
  for (const auto& p : poles_) {
    if (x == p.position) return false;
  }
  return true;
}

double conformal_factor(const MetricModel& model, const Vec3& x) {
  for (const auto& b : model.excised_balls()) {
    if (norm(x - b.center) < b.radius) {
      std::ostringstream os;
      os << "point at distance " << norm(x - b.center) << " from an excised ball of radius " << b.radius;
      fail(ErrorCode::Domain, os.str());
    }
  }
  return model.conformal_factor(x);
}

double adm_mass(const MetricModel& model) {
  if (model.metric_scale() != 1.0) {
    fail(ErrorCode::Unsupported, "scaled metrics are not asymptotic to the flat metric");
  }
  switch (model.kind()) {
    case MetricKind::Euclidean: return 0.0;
    case MetricKind::MultiCenterHF: {
      double m = 0.0;
      for (const auto& p : model.poles()) m += p.mass;
      return m;
    }
    case MetricKind::RadialConformal: break;
  }
  if (auto m = model.schwarzschild_mass()) return *m;

  // a(R) = 2 R^{n-2} (u(R) - 1) -> m, with a(R) = m + b R^{-tau} + ...
  const double k = model.dimension() - 2.0;
  const double tau = model.decay_order();
  auto coefficient = [&](double R) { return 2.0 * std::pow(R, k) * (model.conformal_factor_radial(R) - 1.0); };
  const double f = std::pow(2.0, tau);
  auto richardson = [&](double R) { return (f * coefficient(2.0 * R) - coefficient(R)) / (f - 1.0); };
  const std::vector<ExcisedBall> ex = model.excised_balls();
  const double base = 1e3 * std::max(1.0, ex.empty() ? 1.0 : ex.front().radius);
  const double m1 = richardson(base);
  const double m2 = richardson(2.0 * base);
  const double tol = 1e-6 * std::max(1.0, std::abs(m2));
  if (!std::isfinite(m1) || !std::isfinite(m2) || std::abs(m1 - m2) > tol) {
    std::ostringstream os;
    os << "mass coefficient did not settle: " << m1 << " vs " << m2;
    fail(ErrorCode::NotConverged, os.str());
  }
  return m2;
}

double horizon_radius(const MetricModel& model) {
  if (model.kind() == MetricKind::Euclidean) return 0.0;
  if (auto m = model.schwarzschild_mass()) return std::pow(*m / 2.0, 1.0 / (model.dimension() - 2.0));
  fail(ErrorCode::Unsupported, std::string("no horizon notion for model ") + model.label());
}

}  // namespace capmass
