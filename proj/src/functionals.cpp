#include "capmass/functionals.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "capmass/error.hpp"

namespace capmass {

namespace {

constexpr double kPi = std::numbers::pi;

bool is_centered_ball(const Region& K, double* radius = nullptr) {
  const auto* b = std::get_if<Ball>(&K.shape());
  if (!b || !(b->center == Vec3{})) return false;
  if (radius) *radius = b->radius;
  return true;
}

double inner_radius(const MetricModel& model) {
  if (model.kind() != MetricKind::RadialConformal) return 0.0;
  const auto ex = model.excised_balls();
  return ex.empty() ? 0.0 : ex.front().radius;
}

void require_three_dimensional(const MetricModel& model, const char* what) {
  if (model.dimension() != 3) {
    fail(ErrorCode::Unsupported, std::string(what) + " is only implemented for n = 3 on non-spherical regions");
  }
}

template <class F>
Measured with_halved(const F& f, const QuadratureOptions& q) {
  const double v = f(q);
  const double v2 = f(q.halved());
  return {v, std::abs(v - v2)};
}

// Exit distance from o (inside K) to dK along the unit direction w.
double ray_exit(const Region& K, const Vec3& o, const Vec3& w) {
  if (const auto* b = std::get_if<Ball>(&K.shape())) {
    const Vec3 d = o - b->center;
    const double p = dot(d, w);
    const double c = dot(d, d) - b->radius * b->radius;
    return -p + std::sqrt(std::max(0.0, p * p - c));
  }
  if (const auto* e = std::get_if<Ellipsoid>(&K.shape())) {
    const Vec3 d = o - e->center;
    const Vec3 ds{d.x / e->a, d.y / e->b, d.z / e->c};
    const Vec3 ws{w.x / e->a, w.y / e->b, w.z / e->c};
    const double A = dot(ws, ws), B = dot(ds, ws), C = dot(ds, ds) - 1.0;
    return (-B + std::sqrt(std::max(0.0, B * B - A * C))) / A;
  }
  if (const auto* s = std::get_if<StarShaped>(&K.shape()); s && o == s->center) {
    const double t = std::acos(std::clamp(w.z, -1.0, 1.0));
    double p = std::atan2(w.y, w.x);
    if (p < 0) p += 2.0 * kPi;
    return K.boundary_radius(t, p);
  }
  double lo = 0.0, hi = K.bounding_radius(o) * (1.0 + 1e-9) + 1e-12;
  for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (K.contains(o + w * mid) ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

// Integral of s^{n-1} w(s)^{n/2} over [a, b] for radial models.
double radial_volume_integral(const MetricModel& model, double a, double b, int points) {
  const int n = model.dimension();
  if (b <= a) return 0.0;
  if (model.kind() == MetricKind::Euclidean) {
    return std::pow(model.metric_scale(), 0.5 * n) * (std::pow(b, n) - std::pow(a, n)) / n;
  }
  auto f = [&](double s) { return std::pow(s, n - 1) * std::pow(model.metric_factor_radial(s), 0.5 * n); };
  if (a > 0.0) return integrate_graded(f, a, b, points);
  const double eps = b / 1024.0;
  return integrate_gl(f, 0.0, eps, points) + integrate_graded(f, eps, b, points);
}

// Smooth cutoff: 1 on [0, 1/2], 0 on [1, inf).
double cutoff(double t) {
  if (t <= 0.5) return 1.0;
  if (t >= 1.0) return 0.0;
  const double x = (1.0 - t) * 2.0;   // 1 at t = 1/2, 0 at t = 1
  const double a = std::exp(-1.0 / x), b = std::exp(-1.0 / (1.0 - x));
  return a / (a + b);
}

struct PoleZone {
  Vec3 center;
  double excised = 0.0;
  double radius = 0.0;
};

std::vector<PoleZone> pole_zones(const Region& K, const MetricModel& model) {
  const auto& poles = model.poles();
  std::vector<PoleZone> zones;
  for (std::size_t i = 0; i < poles.size(); ++i) {
    double z = 0.9 * K.boundary_distance(poles[i].position);
    for (std::size_t j = 0; j < poles.size(); ++j) {
      if (j != i) z = std::min(z, 0.5 * norm(poles[i].position - poles[j].position));
    }
    const double a = poles[i].mass / 2.0;
    if (!(z > 2.0 * a)) {
      fail(ErrorCode::Unsupported, "poles are too close to each other or to the boundary for the volume partition");
    }
    zones.push_back({poles[i].position, a, z});
  }
  return zones;
}

// Volume of K minus the excised pole balls for multi-centre metrics. Each pole
// gets a cutoff zone integrated in spherical coordinates about the pole; the
// remainder is integrated along rays from the centre of K.
double multicenter_volume(const Region& K, const MetricModel& model, const QuadratureOptions& q) {
  const auto zones = pole_zones(K, model);
  const double l32 = std::pow(model.metric_scale(), 1.5);
  const SphereRule rule = sphere_rule(q.angular_theta, q.angular_phi);
  const int n = q.radial_points;

  auto chi_sum = [&](const Vec3& x) {
    double s = 0.0;
    for (const auto& z : zones) s += cutoff(norm(x - z.center) / z.radius);
    return s;
  };

  double near = 0.0;
  for (const auto& z : zones) {
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const Vec3 w = unit_direction(rule.theta[i], rule.phi[i]);
      auto f = [&](double s) {
        const Vec3 x = z.center + w * s;
        const double u = model.conformal_factor(x);
        return s * s * cutoff(s / z.radius) * std::pow(u, 6);
      };
      const double br[] = {z.excised, 0.5 * z.radius, 0.75 * z.radius, z.radius};
      near += rule.weight[i] * integrate_graded(f, br[0], br[1], n) +
              rule.weight[i] * integrate_panels(f, std::span<const double>(br + 1, 3), n);
    }
  }

  const Vec3 o = K.center();
  double far = 0.0;
  std::vector<double> breaks;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const Vec3 w = unit_direction(rule.theta[i], rule.phi[i]);
    const double R = ray_exit(K, o, w);
    breaks.assign({0.0, R});
    for (const auto& z : zones) {
      const double tc = dot(z.center - o, w);
      const double d2 = dot(z.center - o, z.center - o) - tc * tc;
      for (double k = -3.0; k <= 3.0; k += 1.0) breaks.push_back(tc + k * z.radius);
      for (double rr : {z.radius, 0.75 * z.radius, 0.5 * z.radius}) {
        if (d2 < rr * rr) {
          const double h = std::sqrt(rr * rr - d2);
          breaks.push_back(tc - h);
          breaks.push_back(tc + h);
        }
      }
    }
    for (double& b : breaks) b = std::clamp(b, 0.0, R);
    std::sort(breaks.begin(), breaks.end());
    breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());
    auto f = [&](double s) {
      const Vec3 x = o + w * s;
      const double keep = 1.0 - chi_sum(x);
      if (keep <= 0.0) return 0.0;
      return s * s * keep * std::pow(model.conformal_factor(x), 6);
    };
    far += rule.weight[i] * integrate_panels(f, breaks, n);
  }
  return l32 * (near + far);
}

double ray_volume(const Region& K, const MetricModel& model, const QuadratureOptions& q) {
  const SphereRule rule = sphere_rule(q.angular_theta, q.angular_phi);
  const double a = inner_radius(model);
  double v = 0.0;
  if (K.contains(Vec3{})) {
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const Vec3 w = unit_direction(rule.theta[i], rule.phi[i]);
      v += rule.weight[i] * radial_volume_integral(model, a, ray_exit(K, Vec3{}, w), q.radial_points);
    }
    return v;
  }
  const Vec3 o = K.center();
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const Vec3 w = unit_direction(rule.theta[i], rule.phi[i]);
    auto f = [&](double s) { return s * s * std::pow(model.metric_factor(o + w * s), 1.5); };
    const double R = ray_exit(K, o, w);
    const double br[] = {0.0, 0.25 * R, 0.5 * R, 0.75 * R, R};
    v += rule.weight[i] * integrate_panels(f, br, q.radial_points);
  }
  return v;
}

double voxel_volume(const VoxelSet& v, const MetricModel& model, double* boundary_share) {
  const double h3 = v.spacing * v.spacing * v.spacing;
  double sum = 0.0, edge = 0.0;
  for (int k = 0; k < v.nz; ++k)
    for (int j = 0; j < v.ny; ++j)
      for (int i = 0; i < v.nx; ++i) {
        if (!v.occupied(i, j, k)) continue;
        const Vec3 x = v.cell_center(i, j, k);
        if (!model.in_domain(x)) continue;
        const double c = std::pow(model.metric_factor(x), 1.5) * h3;
        sum += c;
        const bool boundary = !v.occupied(i + 1, j, k) || !v.occupied(i - 1, j, k) || !v.occupied(i, j + 1, k) ||
                              !v.occupied(i, j - 1, k) || !v.occupied(i, j, k + 1) || !v.occupied(i, j, k - 1);
        if (boundary) edge += 0.5 * c;
      }
  if (boundary_share) *boundary_share = edge;
  return sum;
}

double parametric_surface_integral(const Region& K, const QuadratureOptions& q,
                                   const std::function<double(const SurfaceFrame&, double, double)>& density) {
  const SphereRule rule = sphere_rule(q.angular_theta, q.angular_phi);
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const SurfaceFrame f = K.surface(rule.theta[i], rule.phi[i], true);
    const double jac = norm(cross(f.x_t, f.x_p)) / std::sin(rule.theta[i]);
    sum += rule.weight[i] * jac * density(f, rule.theta[i], rule.phi[i]);
  }
  return sum;
}

double frame_mean_curvature(const SurfaceFrame& f, const MetricModel& model) {
  const Vec3 c = cross(f.x_t, f.x_p);
  const Vec3 N = c / norm(c);
  const double E = dot(f.x_t, f.x_t), F = dot(f.x_t, f.x_p), G = dot(f.x_p, f.x_p);
  const double e = dot(f.x_tt, N), ff = dot(f.x_tp, N), g = dot(f.x_pp, N);
  const double H0 = -(e * G - 2.0 * ff * F + g * E) / (E * G - F * F);
  if (model.kind() == MetricKind::Euclidean) return H0 / std::sqrt(model.metric_scale());
  const double u = conformal_factor(model, f.x);
  const double du = dot(model.conformal_gradient(f.x), N);
  return (H0 / (u * u) + 4.0 * du / (u * u * u)) / std::sqrt(model.metric_scale());
}

}  // namespace

double unit_sphere_area(int n) {
  require(n >= 1, "dimension must be >= 1");
  return 2.0 * std::pow(kPi, 0.5 * n) / std::tgamma(0.5 * n);
}

double unit_ball_volume(int n) { return unit_sphere_area(n) / n; }

void require_region_in_domain(const Region& K, const MetricModel& model) {
  for (const auto& b : model.excised_balls()) {
    const bool inside = K.contains(b.center) && K.boundary_distance(b.center) >= b.radius * (1.0 - 1e-12);
    if (!inside) {
      std::ostringstream os;
      os << "region " << K.describe() << " does not contain the excised ball of radius " << b.radius << " at ("
         << b.center.x << "," << b.center.y << "," << b.center.z << ")";
      fail(ErrorCode::Domain, os.str());
    }
  }
}

Measured riemannian_volume(const Region& K, const MetricModel& model, const QuadratureOptions& q) {
  require_region_in_domain(K, model);
  const int n = model.dimension();
  double r = 0.0;
  if (is_centered_ball(K, &r) && model.is_radial()) {
    const double c = unit_sphere_area(n);
    return with_halved([&](const QuadratureOptions& qq) {
      return c * radial_volume_integral(model, inner_radius(model), r, qq.radial_points);
    }, q);
  }
  require_three_dimensional(model, "riemannian_volume");
  if (const auto* v = std::get_if<VoxelSet>(&K.shape())) {
    double edge = 0.0;
    const double value = voxel_volume(*v, model, &edge);
    return {value, edge};
  }
  if (model.kind() == MetricKind::Euclidean) {
    const double l32 = std::pow(model.metric_scale(), 1.5);
    if (!std::holds_alternative<StarShaped>(K.shape())) return {l32 * euclidean_volume(K, q), 0.0};
    return with_halved([&](const QuadratureOptions& qq) { return l32 * euclidean_volume(K, qq); }, q);
  }
  if (model.kind() == MetricKind::MultiCenterHF) {
    return with_halved([&](const QuadratureOptions& qq) { return multicenter_volume(K, model, qq); }, q);
  }
  return with_halved([&](const QuadratureOptions& qq) { return ray_volume(K, model, qq); }, q);
}

Measured riemannian_area(const Region& K, const MetricModel& model, const QuadratureOptions& q) {
  require_region_in_domain(K, model);
  const int n = model.dimension();
  double r = 0.0;
  if (is_centered_ball(K, &r) && model.is_radial()) {
    const double w = model.metric_factor_radial(r);
    return {unit_sphere_area(n) * std::pow(r, n - 1) * std::pow(w, 0.5 * (n - 1)), 0.0};
  }
  require_three_dimensional(model, "riemannian_area");
  if (const auto* v = std::get_if<VoxelSet>(&K.shape())) {
    double a = 0.0;
    for (const auto& f : voxel_boundary_faces(*v)) a += model.metric_factor(f.center) * f.area;
    return {a, 0.05 * a};
  }
  if (model.kind() == MetricKind::Euclidean && !std::holds_alternative<StarShaped>(K.shape())) {
    const double p = euclidean_perimeter(K, q);
    return {model.metric_scale() * p, std::holds_alternative<Ellipsoid>(K.shape()) ? 1e-13 * p : 0.0};
  }
  return with_halved([&](const QuadratureOptions& qq) {
    return parametric_surface_integral(K, qq, [&](const SurfaceFrame& f, double, double) {
      return model.metric_factor(f.x);
    });
  }, q);
}

double sphere_mean_curvature(double r, const MetricModel& model, const Vec3& direction) {
  require(r > 0.0, "sphere radius must be > 0");
  require_three_dimensional(model, "mean curvature");
  const Vec3 nu = normalized(direction);
  const Vec3 x = nu * r;
  const double u = conformal_factor(model, x);
  const double du = dot(model.conformal_gradient(x), nu);
  return (2.0 / (r * u * u) + 4.0 * du / (u * u * u)) / std::sqrt(model.metric_scale());
}

double mean_curvature(const Region& K, const MetricModel& model, double theta, double phi) {
  require_three_dimensional(model, "mean curvature");
  if (!K.has_surface()) fail(ErrorCode::Unsupported, "mean curvature needs a parametric boundary");
  return frame_mean_curvature(K.surface(theta, phi, true), model);
}

Measured willmore_energy(double r, const MetricModel& model, const QuadratureOptions& q) {
  return willmore_energy(Region::ball({}, r), model, q);
}

Measured willmore_energy(const Region& K, const MetricModel& model, const QuadratureOptions& q) {
  require_three_dimensional(model, "Willmore energy");
  if (!K.has_surface()) fail(ErrorCode::Unsupported, "Willmore energy needs a parametric boundary");
  require_region_in_domain(K, model);
  double r = 0.0;
  if (is_centered_ball(K, &r) && model.is_radial()) {
    const double H = sphere_mean_curvature(r, model);
    const double A = riemannian_area(K, model, q).value;
    return {H * H * A, 0.0};
  }
  return with_halved([&](const QuadratureOptions& qq) {
    return parametric_surface_integral(K, qq, [&](const SurfaceFrame& f, double, double) {
      const double H = frame_mean_curvature(f, model);
      return H * H * model.metric_factor(f.x);
    });
  }, q);
}

Measured beta(double r, const MetricModel& model, const QuadratureOptions& q) {
  require(r > 0.0, "sphere radius must be > 0");
  require_three_dimensional(model, "beta");
  // For g = w delta the tangential trace h^{ij} sigma_ij is 2 (w - 1) / w and
  // dA_g = w dA_0, so beta = (1/4 pi) int (w - 1) dA_0.
  if (model.is_radial()) {
    return {r * r * (model.metric_factor_radial(r) - 1.0), 0.0};
  }
  return with_halved([&](const QuadratureOptions& qq) {
    const SphereRule rule = sphere_rule(qq.angular_theta, qq.angular_phi);
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
      const Vec3 x = unit_direction(rule.theta[i], rule.phi[i]) * r;
      sum += rule.weight[i] * (model.metric_factor(x) - 1.0);
    }
    return sum * r * r / (4.0 * kPi);
  }, q);
}

double volume_radius(double volume, int n) {
  require(volume >= 0.0, "volume must be >= 0");
  return std::pow(volume / unit_ball_volume(n), 1.0 / n);
}

double area_radius(double area, int n) {
  require(area >= 0.0, "area must be >= 0");
  return std::pow(area / unit_sphere_area(n), 1.0 / (n - 1));
}

SphereFunctionals sphere_functionals(double r, const MetricModel& model, const QuadratureOptions& q) {
  const Region ball = Region::ball({}, r);
  SphereFunctionals s;
  s.r = r;
  s.A = riemannian_area(ball, model, q);
  s.V = riemannian_volume(ball, model, q);
  if (model.dimension() == 3) {
    s.W = willmore_energy(ball, model, q);
    s.beta = beta(r, model, q);
    const SphereRule rule = sphere_rule(q.angular_theta, q.angular_phi);
    s.H_samples.reserve(rule.size());
    for (std::size_t i = 0; i < rule.size(); ++i) {
      s.H_samples.push_back(sphere_mean_curvature(r, model, unit_direction(rule.theta[i], rule.phi[i])));
    }
  }
  return s;
}

double isoperimetric_ratio(const Region& K, const MetricModel& model, const QuadratureOptions& q) {
  require_three_dimensional(model, "isoperimetric ratio");
  const double A = riemannian_area(K, model, q).value;
  const double V = riemannian_volume(K, model, q).value;
  return std::pow(A, 1.5) / (6.0 * std::sqrt(kPi) * V);
}

}  // namespace capmass
