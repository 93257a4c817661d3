#include "capmass/capacity.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_sf_ellint.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include "capmass/error.hpp"
#include "capmass/functionals.hpp"

namespace capmass {

namespace {

constexpr double kPi = std::numbers::pi;

bool centered_ball(const Region& K, double& r) {
  const auto* b = std::get_if<Ball>(&K.shape());
  if (!b || !(b->center == Vec3{})) return false;
  r = b->radius;
  return true;
}

// Points where U has its singularities, each with the ball that must lie in K.
std::vector<ExcisedBall> harmonic_sources(const MetricModel& model) {
  std::vector<ExcisedBall> out;
  if (model.kind() == MetricKind::MultiCenterHF) {
    for (const auto& p : model.poles()) out.push_back({p.position, p.mass / 2.0});
  } else if (model.is_schwarzschild() && model.dimension() == 3) {
    out.push_back({Vec3{}, horizon_radius(model)});
  }
  return out;
}

double source_mass(const MetricModel& model) {
  if (model.kind() == MetricKind::MultiCenterHF) {
    double m = 0.0;
    for (const auto& p : model.poles()) m += p.mass;
    return m;
  }
  if (auto m = model.schwarzschild_mass()) return *m;
  return 0.0;
}

}  // namespace

const char* to_string(CapacityMethod method) {
  switch (method) {
    case CapacityMethod::RadialQuadrature: return "radial-quadrature";
    case CapacityMethod::ConformalShift: return "conformal-shift";
    case CapacityMethod::GridVariational: return "grid-variational";
    case CapacityMethod::EuclideanClosedForm: return "euclidean-closed-form";
  }
  return "unknown";
}

CapacityMethod parse_capacity_method(const std::string& s) {
  if (s == "radial-quadrature" || s == "radial") return CapacityMethod::RadialQuadrature;
  if (s == "conformal-shift" || s == "shift") return CapacityMethod::ConformalShift;
  if (s == "grid-variational" || s == "grid") return CapacityMethod::GridVariational;
  if (s == "euclidean-closed-form" || s == "closed-form") return CapacityMethod::EuclideanClosedForm;
  fail(ErrorCode::Config, "unknown capacity backend '" + s + "'");
}

const char* to_string(OuterBoundary bc) { return bc == OuterBoundary::Robin ? "robin" : "dirichlet"; }

OuterBoundary parse_outer_boundary(const std::string& s) {
  if (s == "robin") return OuterBoundary::Robin;
  if (s == "dirichlet") return OuterBoundary::Dirichlet;
  fail(ErrorCode::Config, "solver.outer_bc must be robin or dirichlet, got '" + s + "'");
}

CapacityEstimate capacity_radial(const MetricModel& model, double r, const QuadratureOptions& q) {
  if (!model.is_radial()) fail(ErrorCode::Unsupported, "radial capacity needs a radial model");
  const int n = model.dimension();
  const auto ex = model.excised_balls();
  const double inner = ex.empty() ? 0.0 : ex.front().radius;
  if (!(r > inner)) {
    std::ostringstream os;
    os << "ball radius " << r << " must exceed the horizon radius " << inner;
    fail(ErrorCode::Domain, os.str());
  }
  // For radial phi the weighted energy is lambda^{(n-2)/2} omega int s^{n-1} U^2 phi'^2 ds,
  // minimised by s^{n-1} U^2 phi' = const, so cap = lambda^{(n-2)/2} / ((n-2) I).
  auto f = [&](double s) {
    const double u = model.conformal_factor_radial(s);
    return 1.0 / (std::pow(s, n - 1) * u * u);
  };
  auto integral = [&](int points) {
    const double tail = q.tail_radius_factor * std::max(1.0, inner);
    if (tail <= r) return integrate_to_infinity(f, r, points);
    return integrate_graded(f, r, tail, points) + integrate_to_infinity(f, tail, points);
  };
  const double pref = std::pow(model.metric_scale(), 0.5 * (n - 2)) / (n - 2.0);
  CapacityEstimate e;
  e.method = CapacityMethod::RadialQuadrature;
  e.value = pref / integral(q.radial_points);
  const double coarse = pref / integral(std::max(2, q.radial_points / 2));
  e.error_estimate = std::abs(e.value - coarse) + 4.0 * std::numeric_limits<double>::epsilon() * e.value;
  e.diagnostics["radius"] = r;
  e.diagnostics["coarse_value"] = coarse;
  if (!std::isfinite(e.value) || !(e.value > 0.0)) fail(ErrorCode::NotConverged, "radial capacity quadrature failed");
  return e;
}

double ellipsoid_capacity(double a, double b, double c) {
  require(a > 0.0 && b > 0.0 && c > 0.0, "ellipsoid semi-axes must be positive");
  gsl_sf_result res;
  gsl_error_handler_t* old = gsl_set_error_handler_off();
  const int status = gsl_sf_ellint_RF_e(a * a, b * b, c * c, GSL_PREC_DOUBLE, &res);
  gsl_set_error_handler(old);
  if (status != GSL_SUCCESS) fail(ErrorCode::Internal, "Carlson R_F evaluation failed");
  return 1.0 / res.val;
}

CapacityEstimate capacity_euclidean(const MetricModel& model, const Region& K) {
  if (model.kind() != MetricKind::Euclidean || model.dimension() != 3) {
    fail(ErrorCode::Unsupported, "closed-form capacity needs flat 3-space");
  }
  CapacityEstimate e;
  e.method = CapacityMethod::EuclideanClosedForm;
  const double s = std::sqrt(model.metric_scale());
  if (const auto* b = std::get_if<Ball>(&K.shape())) {
    e.value = s * b->radius;
  } else if (const auto* el = std::get_if<Ellipsoid>(&K.shape())) {
    e.value = s * ellipsoid_capacity(el->a, el->b, el->c);
  } else {
    fail(ErrorCode::Unsupported, "closed-form capacity covers balls and ellipsoids only");
  }
  e.error_estimate = 8.0 * std::numeric_limits<double>::epsilon() * e.value;
  return e;
}

CapacityEstimate capacity_conformal_shift(const MetricModel& model, const Region& K, const GridOptions& grid) {
  if (!model.is_harmonically_flat() || model.dimension() != 3) {
    fail(ErrorCode::Unsupported, "conformal shift needs a harmonically flat model in n = 3");
  }
  for (const auto& src : harmonic_sources(model)) {
    const bool inside = K.contains(src.center) && K.boundary_distance(src.center) > src.radius;
    if (!inside) {
      fail(ErrorCode::Domain, "conformal shift refused: a pole of U lies outside the interior of " + K.describe());
    }
  }
  const MetricModel flat = MetricModel::euclidean(3);
  CapacityEstimate base;
  if (std::holds_alternative<Ball>(K.shape()) || std::holds_alternative<Ellipsoid>(K.shape())) {
    base = capacity_euclidean(flat, K);
  } else {
    base = capacity_grid(flat, K, grid).estimate;
  }
  const double s = std::sqrt(model.metric_scale());
  const double m = source_mass(model);
  CapacityEstimate e;
  e.method = CapacityMethod::ConformalShift;
  e.value = s * (base.value + 0.5 * m);
  e.error_estimate = s * base.error_estimate + 8.0 * std::numeric_limits<double>::epsilon() * e.value;
  e.diagnostics["euclidean_capacity"] = base.value;
  e.diagnostics["euclidean_error"] = base.error_estimate;
  e.diagnostics["mass"] = m;
  for (const auto& [k, v] : base.diagnostics) e.diagnostics["base_" + k] = v;
  return e;
}

bool capacity_method_applies(CapacityMethod method, const MetricModel& model, const Region& K) {
  double r = 0.0;
  switch (method) {
    case CapacityMethod::RadialQuadrature:
      return model.is_radial() && centered_ball(K, r);
    case CapacityMethod::EuclideanClosedForm:
      return model.kind() == MetricKind::Euclidean && model.dimension() == 3 &&
             (std::holds_alternative<Ball>(K.shape()) || std::holds_alternative<Ellipsoid>(K.shape()));
    case CapacityMethod::ConformalShift: {
      if (!model.is_harmonically_flat() || model.dimension() != 3) return false;
      for (const auto& src : harmonic_sources(model)) {
        if (!K.contains(src.center) || !(K.boundary_distance(src.center) > src.radius)) return false;
      }
      return true;
    }
    case CapacityMethod::GridVariational:
      return model.dimension() == 3;
  }
  return false;
}

CapacityMethod select_capacity_method(const MetricModel& model, const Region& K) {
  for (CapacityMethod m : {CapacityMethod::RadialQuadrature, CapacityMethod::EuclideanClosedForm}) {
    if (capacity_method_applies(m, model, K)) return m;
  }
  if (model.kind() != MetricKind::Euclidean && capacity_method_applies(CapacityMethod::ConformalShift, model, K)) {
    return CapacityMethod::ConformalShift;
  }
  return CapacityMethod::GridVariational;
}

CapacityEstimate capacity(const MetricModel& model, const Region& K, CapacityMethod method, const QuadratureOptions& q,
                          const GridOptions& grid) {
  switch (method) {
    case CapacityMethod::RadialQuadrature: {
      double r = 0.0;
      if (!centered_ball(K, r)) fail(ErrorCode::Unsupported, "radial quadrature needs a ball centred at the origin");
      return capacity_radial(model, r, q);
    }
    case CapacityMethod::EuclideanClosedForm: return capacity_euclidean(model, K);
    case CapacityMethod::ConformalShift: return capacity_conformal_shift(model, K, grid);
    case CapacityMethod::GridVariational: return capacity_grid(model, K, grid).estimate;
  }
  fail(ErrorCode::Internal, "unhandled capacity backend");
}

ExpansionFit extract_expansion(const PotentialField& field, const MetricModel& model, double rho) {
  (void)model;
  require(rho > 0.0, "expansion scale must be > 0");
  const double L = field.half_width();
  const double r0 = 0.5 * (field.region_radius + L);
  const double r1 = L - 2.0 * field.h;
  if (!(r1 > r0)) fail(ErrorCode::InvalidArgument, "field box too small for an expansion fit");
  const int shells = 8;
  const SphereRule rule = sphere_rule(16, 32);
  std::vector<double> radius(shells), mean(shells);
  for (int s = 0; s < shells; ++s) {
    const double r = r0 + (r1 - r0) * s / (shells - 1);
    double acc = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      acc += rule.weight[i] * field.sample(field.center + unit_direction(rule.theta[i], rule.phi[i]) * r);
    }
    radius[s] = r;
    mean[s] = acc / (4.0 * kPi);
  }
  double num = 0.0, den = 0.0;
  for (int s = 0; s < shells; ++s) {
    num += (1.0 - mean[s]) / radius[s];
    den += 1.0 / (radius[s] * radius[s]);
  }
  ExpansionFit fit;
  fit.c = num / den;
  for (int s = 0; s < shells; ++s) {
    double worst = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const Vec3 x = field.center + unit_direction(rule.theta[i], rule.phi[i]) * radius[s];
      const double W = field.sample(x) - (1.0 - fit.c / radius[s]);
      worst = std::max(worst, std::abs(W) * radius[s] * radius[s] / rho);
    }
    fit.shell_radius.push_back(radius[s]);
    fit.shell_residual.push_back(worst);
    fit.max_residual = std::max(fit.max_residual, worst);
  }
  // Unstable if the normalised residual keeps growing toward the outer shells.
  const double inner = *std::max_element(fit.shell_residual.begin(), fit.shell_residual.begin() + shells / 2);
  const double outer = *std::max_element(fit.shell_residual.begin() + shells / 2, fit.shell_residual.end());
  fit.stable = outer <= 2.0 * inner + 1e-12;
  return fit;
}

BernoulliResult bernoulli_residual(const PotentialField& field, const Region& K, const MetricModel& model) {
  const double s1 = 3.0 * field.h;
  std::vector<std::pair<Vec3, Vec3>> points;   // boundary point, outward unit normal
  if (K.has_surface()) {
    const SphereRule rule = sphere_rule(24, 48);
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const SurfaceFrame f = K.surface(rule.theta[i], rule.phi[i]);
      points.push_back({f.x, normalized(cross(f.x_t, f.x_p))});
    }
  } else {
    for (const auto& f : voxel_boundary_faces(std::get<VoxelSet>(K.shape()))) points.push_back({f.center, f.normal});
  }
  BernoulliResult res;
  res.min = std::numeric_limits<double>::infinity();
  res.max = -res.min;
  double sum = 0.0;
  const double L = field.half_width();
  for (const auto& [x, nu] : points) {
    const Vec3 far = x + nu * (2.0 * s1);
    if (norm(far - field.center) > L - 2.0 * field.h) {
      fail(ErrorCode::InvalidArgument, "boundary sampling leaves the field box");
    }
    const double d = (4.0 * field.sample(x + nu * s1) - field.sample(far)) / (2.0 * s1);
    const double g = d / std::sqrt(model.metric_factor(x));
    res.min = std::min(res.min, g);
    res.max = std::max(res.max, g);
    sum += g;
    ++res.samples;
  }
  if (res.samples == 0) fail(ErrorCode::InvalidArgument, "no boundary samples");
  res.mean = sum / res.samples;
  if (!(res.mean > 0.0)) fail(ErrorCode::InvalidArgument, "boundary sampling failed: mean normal derivative is not positive");
  res.residual = (res.max - res.min) / res.mean;
  return res;
}

void export_field_csv(const PotentialField& field, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::Io, "cannot open " + path);
  out.precision(17);
  out << "i,j,k,phi\n";
  for (int k = 0; k < field.n; ++k)
    for (int j = 0; j < field.n; ++j)
      for (int i = 0; i < field.n; ++i) out << i << ',' << j << ',' << k << ',' << field.phi[field.index(i, j, k)] << '\n';
  if (!out) fail(ErrorCode::Io, "write failed for " + path);
}

void export_field_binary(const PotentialField& field, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot open " + path);
  const char magic[4] = {'C', 'M', 'P', 'F'};
  const std::int32_t n = field.n;
  const double header[4] = {field.h, field.lower.x, field.lower.y, field.lower.z};
  out.write(magic, 4);
  out.write(reinterpret_cast<const char*>(&n), sizeof n);
  out.write(reinterpret_cast<const char*>(header), sizeof header);
  out.write(reinterpret_cast<const char*>(field.phi.data()), static_cast<std::streamsize>(field.phi.size() * sizeof(double)));
  if (!out) fail(ErrorCode::Io, "write failed for " + path);
}

}  // namespace capmass
