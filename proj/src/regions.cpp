#include "capmass/regions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>

#include "capmass/error.hpp"

namespace capmass {

namespace {

constexpr double kPi = std::numbers::pi;

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

Vec3 d_theta(double t, double p) {
  return {std::cos(t) * std::cos(p), std::cos(t) * std::sin(p), -std::sin(t)};
}
Vec3 d_phi(double t, double p) {
  return {-std::sin(t) * std::sin(p), std::sin(t) * std::cos(p), 0.0};
}
Vec3 d_theta_phi(double t, double p) {
  return {-std::cos(t) * std::sin(p), std::cos(t) * std::cos(p), 0.0};
}
Vec3 d_phi_phi(double t, double p) {
  return {-std::sin(t) * std::cos(p), -std::sin(t) * std::sin(p), 0.0};
}

void direction_angles(const Vec3& d, double r, double& theta, double& phi) {
  theta = std::acos(std::clamp(d.z / r, -1.0, 1.0));
  phi = std::atan2(d.y, d.x);
  if (phi < 0) phi += 2.0 * kPi;
}

Vec3 scale_components(const Vec3& v, double a, double b, double c) { return {a * v.x, b * v.y, c * v.z}; }

struct ExposedFace {
  Vec3 center;
  int axis;     // 0,1,2
  int sign;     // +1 / -1
  int i, j, k;  // owning occupied cell
};

std::vector<ExposedFace> exposed_faces(const VoxelSet& v) {
  std::vector<ExposedFace> faces;
  const int off[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};
  for (int k = 0; k < v.nz; ++k)
    for (int j = 0; j < v.ny; ++j)
      for (int i = 0; i < v.nx; ++i) {
        if (!v.occupied(i, j, k)) continue;
        for (int f = 0; f < 6; ++f) {
          if (v.occupied(i + off[f][0], j + off[f][1], k + off[f][2])) continue;
          const Vec3 c = v.cell_center(i, j, k);
          const Vec3 d{0.5 * v.spacing * off[f][0], 0.5 * v.spacing * off[f][1], 0.5 * v.spacing * off[f][2]};
          faces.push_back({c + d, f / 2, (f % 2 == 0) ? 1 : -1, i, j, k});
        }
      }
  return faces;
}

// Extremum of g(x(theta, phi)) over a parametric boundary: dense uniform scan
// including the poles, then compass refinement of the best sample.
double boundary_extremum(const Region& K, const std::function<double(const Vec3&)>& g, bool maximize) {
  const int nt = 181, np = 360;
  const double sgn = maximize ? 1.0 : -1.0;
  auto eval = [&](double t, double p) { return sgn * g(K.surface(t, p).x); };
  double best = -std::numeric_limits<double>::infinity(), bt = 0, bp = 0;
  for (int i = 0; i < nt; ++i) {
    const double t = kPi * i / (nt - 1);
    for (int j = 0; j < np; ++j) {
      const double p = 2.0 * kPi * j / np;
      const double v = eval(t, p);
      if (v > best) { best = v; bt = t; bp = p; }
    }
  }
  double step = kPi / (nt - 1);
  while (step > 1e-10) {
    bool moved = false;
    const double cand[4][2] = {{step, 0}, {-step, 0}, {0, step}, {0, -step}};
    for (const auto& c : cand) {
      const double t = std::clamp(bt + c[0], 0.0, kPi);
      const double v = eval(t, bp + c[1]);
      if (v > best) { best = v; bt = t; bp += c[1]; moved = true; }
    }
    if (!moved) step *= 0.5;
  }
  return sgn * best;
}

Vec3 centroid(const Region& K) {
  if (const auto* v = std::get_if<VoxelSet>(&K.shape())) {
    Vec3 s;
    std::size_t n = 0;
    for (int k = 0; k < v->nz; ++k)
      for (int j = 0; j < v->ny; ++j)
        for (int i = 0; i < v->nx; ++i)
          if (v->occupied(i, j, k)) { s += v->cell_center(i, j, k); ++n; }
    return n ? s / static_cast<double>(n) : v->origin;
  }
  if (!std::holds_alternative<StarShaped>(K.shape())) return K.center();
  const SphereRule rule = sphere_rule(64, 128);
  Vec3 moment;
  double vol = 0.0;
  for (std::size_t q = 0; q < rule.size(); ++q) {
    const double r = K.boundary_radius(rule.theta[q], rule.phi[q]);
    vol += rule.weight[q] * r * r * r / 3.0;
    moment += unit_direction(rule.theta[q], rule.phi[q]) * (rule.weight[q] * r * r * r * r / 4.0);
  }
  return K.center() + moment / vol;
}

}  // namespace

// ---------------------------------------------------------------------------
// Angular profiles

double real_spherical_harmonic(int l, int m, double theta, double phi) {
  require(l >= 0 && std::abs(m) <= l, "spherical harmonic needs |m| <= l");
  const int am = std::abs(m);
  double fact = 1.0;   // (l-|m|)! / (l+|m|)!
  for (int i = l - am + 1; i <= l + am; ++i) fact /= i;
  const double norm = std::sqrt((2.0 * l + 1.0) / (4.0 * kPi) * fact);
  const double p = std::assoc_legendre(static_cast<unsigned>(l), static_cast<unsigned>(am), std::cos(theta));
  if (m == 0) return norm * p;
  if (m > 0) return std::numbers::sqrt2 * norm * p * std::cos(am * phi);
  return std::numbers::sqrt2 * norm * p * std::sin(am * phi);
}

AngularProfile::AngularProfile(std::vector<HarmonicTerm> terms, bool absolute)
    : terms_(std::move(terms)), absolute_(absolute) {
  for (const auto& t : terms_) {
    require(t.l >= 0 && t.l <= 8 && std::abs(t.m) <= t.l, "harmonic terms need 0 <= l <= 8 and |m| <= l");
  }
  if (terms_.empty()) {
    lo_ = 0.0;
    hi_ = 1.0;
    return;
  }
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  const int nt = 361, np = 720;
  for (int i = 0; i < nt; ++i) {
    const double t = kPi * i / (nt - 1);
    for (int j = 0; j < np; ++j) {
      double f = raw(t, 2.0 * kPi * j / np);
      if (absolute_) f = std::abs(f);
      lo = std::min(lo, f);
      hi = std::max(hi, f);
    }
  }
  if (absolute_) lo = 0.0;
  require(hi > lo, "angular profile is constant; use amplitude 0 instead");
  lo_ = lo;
  hi_ = hi;
}

AngularProfile AngularProfile::abs_y20() { return AngularProfile({{2, 0, 1.0}}, true); }

double AngularProfile::raw(double theta, double phi) const {
  double f = 0.0;
  for (const auto& t : terms_) f += t.coefficient * real_spherical_harmonic(t.l, t.m, theta, phi);
  return f;
}

double AngularProfile::operator()(double theta, double phi) const {
  if (terms_.empty()) return 0.0;
  double f = raw(theta, phi);
  if (absolute_) f = std::abs(f);
  return std::clamp((f - lo_) / (hi_ - lo_), 0.0, 1.0);
}

std::size_t VoxelSet::count() const {
  return static_cast<std::size_t>(std::count_if(occupancy.begin(), occupancy.end(), [](std::uint8_t b) { return b != 0; }));
}

// ---------------------------------------------------------------------------
// Region

Region Region::ball(const Vec3& center, double radius) {
  require(radius > 0.0 && std::isfinite(radius), "ball radius must be > 0");
  return Region(Ball{center, radius});
}

Region Region::ellipsoid(const Vec3& center, double a, double b, double c) {
  require(c > 0.0 && b >= c && a >= b && std::isfinite(a), "ellipsoid semi-axes must satisfy a >= b >= c > 0");
  return Region(Ellipsoid{center, a, b, c});
}

Region Region::star(const Vec3& center, double base_radius, double amplitude, AngularProfile profile) {
  require(base_radius > 0.0 && amplitude >= 0.0, "star-shaped region needs base radius > 0 and amplitude >= 0");
  return Region(StarShaped{center, base_radius, amplitude, std::move(profile)});
}

Region Region::voxels(VoxelSet set) {
  require(set.spacing > 0.0 && set.nx > 0 && set.ny > 0 && set.nz > 0, "voxel grid must be non-empty");
  require(set.occupancy.size() == static_cast<std::size_t>(set.nx) * set.ny * set.nz, "occupancy size mismatch");
  require(set.count() > 0, "voxel set has no occupied cells");
  return Region(std::move(set));
}

Region Region::voxelize(const Region& source, double h) {
  require(h > 0.0, "voxel spacing must be > 0");
  const Vec3 c = source.center();
  const double R = source.bounding_radius(c);
  const int n = static_cast<int>(std::ceil(2.0 * R / h)) + 2;
  VoxelSet v;
  v.spacing = h;
  v.nx = v.ny = v.nz = n;
  v.origin = c - Vec3{0.5 * n * h, 0.5 * n * h, 0.5 * n * h};
  v.occupancy.assign(static_cast<std::size_t>(n) * n * n, 0);
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i)
        if (source.contains(v.cell_center(i, j, k)))
          v.occupancy[static_cast<std::size_t>(i) + static_cast<std::size_t>(n) * (j + static_cast<std::size_t>(n) * k)] = 1;
  return voxels(std::move(v));
}

std::string Region::describe() const {
  std::ostringstream os;
  os.precision(10);
  auto vec = [&](const Vec3& c) { os << "(" << c.x << "," << c.y << "," << c.z << ")"; };
  std::visit(overloaded{
                 [&](const Ball& b) { os << "ball(center="; vec(b.center); os << ",radius=" << b.radius << ")"; },
                 [&](const Ellipsoid& e) {
                   os << "ellipsoid(center="; vec(e.center);
                   os << ",axes=" << e.a << "," << e.b << "," << e.c << ")";
                 },
                 [&](const StarShaped& s) {
                   os << "star(center="; vec(s.center);
                   os << ",rho=" << s.base_radius << ",alpha=" << s.amplitude << ",terms=" << s.profile.terms().size()
                      << (s.profile.absolute() ? ",abs" : "") << ")";
                 },
                 [&](const VoxelSet& v) {
                   os << "voxels(origin="; vec(v.origin);
                   os << ",h=" << v.spacing << ",dims=" << v.nx << "x" << v.ny << "x" << v.nz << ",cells=" << v.count() << ")";
                 },
             },
             shape_);
  return os.str();
}

bool Region::contains(const Vec3& x) const {
  return std::visit(overloaded{
                        [&](const Ball& b) { return norm(x - b.center) <= b.radius; },
                        [&](const Ellipsoid& e) {
                          const Vec3 d = x - e.center;
                          return (d.x / e.a) * (d.x / e.a) + (d.y / e.b) * (d.y / e.b) + (d.z / e.c) * (d.z / e.c) <= 1.0;
                        },
                        [&](const StarShaped& s) {
                          const Vec3 d = x - s.center;
                          const double r = norm(d);
                          if (r == 0.0) return true;
                          if (r <= s.base_radius) return true;
                          if (r > s.base_radius + s.amplitude) return false;
                          double t, p;
                          direction_angles(d, r, t, p);
                          return r <= s.base_radius + s.amplitude * s.profile(t, p);
                        },
                        [&](const VoxelSet& v) {
                          const Vec3 d = (x - v.origin) / v.spacing;
                          return v.occupied(static_cast<int>(std::floor(d.x)), static_cast<int>(std::floor(d.y)),
                                            static_cast<int>(std::floor(d.z)));
                        },
                    },
                    shape_);
}

Vec3 Region::center() const {
  return std::visit(overloaded{
                        [](const Ball& b) { return b.center; },
                        [](const Ellipsoid& e) { return e.center; },
                        [](const StarShaped& s) { return s.center; },
                        [](const VoxelSet& v) {
                          return v.origin + Vec3{0.5 * v.nx * v.spacing, 0.5 * v.ny * v.spacing, 0.5 * v.nz * v.spacing};
                        },
                    },
                    shape_);
}

double Region::boundary_radius(double theta, double phi) const {
  return std::visit(overloaded{
                        [](const Ball& b) { return b.radius; },
                        [&](const Ellipsoid& e) {
                          const Vec3 w = unit_direction(theta, phi);
                          return 1.0 / std::sqrt((w.x / e.a) * (w.x / e.a) + (w.y / e.b) * (w.y / e.b) + (w.z / e.c) * (w.z / e.c));
                        },
                        [&](const StarShaped& s) { return s.base_radius + s.amplitude * s.profile(theta, phi); },
                        [](const VoxelSet&) -> double {
                          fail(ErrorCode::Unsupported, "voxel sets have no parametric boundary");
                        },
                    },
                    shape_);
}

SurfaceFrame Region::surface(double t, double p, bool second) const {
  SurfaceFrame f;
  const Vec3 w = unit_direction(t, p);
  std::visit(overloaded{
                 [&](const Ball& b) {
                   f.x = b.center + w * b.radius;
                   f.x_t = d_theta(t, p) * b.radius;
                   f.x_p = d_phi(t, p) * b.radius;
                   if (second) {
                     f.x_tt = -w * b.radius;
                     f.x_tp = d_theta_phi(t, p) * b.radius;
                     f.x_pp = d_phi_phi(t, p) * b.radius;
                   }
                 },
                 [&](const Ellipsoid& e) {
                   f.x = e.center + scale_components(w, e.a, e.b, e.c);
                   f.x_t = scale_components(d_theta(t, p), e.a, e.b, e.c);
                   f.x_p = scale_components(d_phi(t, p), e.a, e.b, e.c);
                   if (second) {
                     f.x_tt = scale_components(-w, e.a, e.b, e.c);
                     f.x_tp = scale_components(d_theta_phi(t, p), e.a, e.b, e.c);
                     f.x_pp = scale_components(d_phi_phi(t, p), e.a, e.b, e.c);
                   }
                 },
                 [&](const StarShaped& s) {
                   auto R = [&](double tt, double pp) { return s.base_radius + s.amplitude * s.profile(tt, pp); };
                   const double e = 1e-4;
                   const double r0 = R(t, p);
                   const double rt = (R(t + e, p) - R(t - e, p)) / (2 * e);
                   const double rp = (R(t, p + e) - R(t, p - e)) / (2 * e);
                   const Vec3 wt = d_theta(t, p), wp = d_phi(t, p);
                   f.x = s.center + w * r0;
                   f.x_t = w * rt + wt * r0;
                   f.x_p = w * rp + wp * r0;
                   if (second) {
                     const double rtt = (R(t + e, p) - 2 * r0 + R(t - e, p)) / (e * e);
                     const double rpp = (R(t, p + e) - 2 * r0 + R(t, p - e)) / (e * e);
                     const double rtp = (R(t + e, p + e) - R(t + e, p - e) - R(t - e, p + e) + R(t - e, p - e)) / (4 * e * e);
                     f.x_tt = w * rtt + wt * (2 * rt) - w * r0;
                     f.x_tp = w * rtp + wp * rt + wt * rp + d_theta_phi(t, p) * r0;
                     f.x_pp = w * rpp + wp * (2 * rp) + d_phi_phi(t, p) * r0;
                   }
                 },
                 [](const VoxelSet&) { fail(ErrorCode::Unsupported, "voxel sets have no parametric boundary"); },
             },
             shape_);
  return f;
}

double Region::bounding_radius(const Vec3& about) const {
  if (const auto* b = std::get_if<Ball>(&shape_)) return norm(about - b->center) + b->radius;
  if (const auto* e = std::get_if<Ellipsoid>(&shape_); e && about == e->center) return e->a;
  if (const auto* v = std::get_if<VoxelSet>(&shape_)) {
    double best = 0.0;
    for (int k = 0; k < v->nz; ++k)
      for (int j = 0; j < v->ny; ++j)
        for (int i = 0; i < v->nx; ++i) {
          if (!v->occupied(i, j, k)) continue;
          for (int c = 0; c < 8; ++c) {
            const Vec3 corner = v->origin + Vec3{(i + (c & 1)) * v->spacing, (j + ((c >> 1) & 1)) * v->spacing,
                                                 (k + ((c >> 2) & 1)) * v->spacing};
            best = std::max(best, norm(corner - about));
          }
        }
    return best;
  }
  return boundary_extremum(*this, [&](const Vec3& x) { return norm(x - about); }, true);
}

double Region::boundary_distance(const Vec3& about) const {
  if (const auto* b = std::get_if<Ball>(&shape_)) return std::abs(b->radius - norm(about - b->center));
  if (const auto* e = std::get_if<Ellipsoid>(&shape_); e && about == e->center) return e->c;
  if (const auto* v = std::get_if<VoxelSet>(&shape_)) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& f : exposed_faces(*v)) best = std::min(best, norm(f.center - about));
    return best;
  }
  return boundary_extremum(*this, [&](const Vec3& x) { return norm(x - about); }, false);
}

double Region::thinnest_feature() const {
  return std::visit(overloaded{
                        [](const Ball& b) { return 2.0 * b.radius; },
                        [](const Ellipsoid& e) { return 2.0 * e.c; },
                        [](const StarShaped& s) { return 2.0 * s.base_radius; },
                        [](const VoxelSet& v) {
                          int lo[3] = {v.nx, v.ny, v.nz}, hi[3] = {-1, -1, -1};
                          for (int k = 0; k < v.nz; ++k)
                            for (int j = 0; j < v.ny; ++j)
                              for (int i = 0; i < v.nx; ++i)
                                if (v.occupied(i, j, k)) {
                                  const int idx[3] = {i, j, k};
                                  for (int a = 0; a < 3; ++a) {
                                    lo[a] = std::min(lo[a], idx[a]);
                                    hi[a] = std::max(hi[a], idx[a]);
                                  }
                                }
                          int w = std::numeric_limits<int>::max();
                          for (int a = 0; a < 3; ++a) w = std::min(w, hi[a] - lo[a] + 1);
                          return w * v.spacing;
                        },
                    },
                    shape_);
}

Region Region::scaled(double lambda, const Vec3& about) const {
  require(lambda > 0.0, "scale factor must be > 0");
  auto map = [&](const Vec3& x) { return about + (x - about) * lambda; };
  return std::visit(overloaded{
                        [&](const Ball& b) { return Region::ball(map(b.center), lambda * b.radius); },
                        [&](const Ellipsoid& e) { return Region::ellipsoid(map(e.center), lambda * e.a, lambda * e.b, lambda * e.c); },
                        [&](const StarShaped& s) {
                          return Region::star(map(s.center), lambda * s.base_radius, lambda * s.amplitude, s.profile);
                        },
                        [&](const VoxelSet& v) {
                          VoxelSet w = v;
                          w.origin = map(v.origin);
                          w.spacing = lambda * v.spacing;
                          return Region::voxels(std::move(w));
                        },
                    },
                    shape_);
}

// ---------------------------------------------------------------------------
// Euclidean functionals

double euclidean_volume(const Region& K, const QuadratureOptions& q) {
  return std::visit(overloaded{
                        [](const Ball& b) { return 4.0 / 3.0 * kPi * b.radius * b.radius * b.radius; },
                        [](const Ellipsoid& e) { return 4.0 / 3.0 * kPi * e.a * e.b * e.c; },
                        [&](const StarShaped& s) {
                          if (s.amplitude == 0.0) return 4.0 / 3.0 * kPi * std::pow(s.base_radius, 3);
                          const SphereRule rule = sphere_rule(q.angular_theta, q.angular_phi);
                          double v = 0.0;
                          for (std::size_t i = 0; i < rule.size(); ++i) {
                            const double r = K.boundary_radius(rule.theta[i], rule.phi[i]);
                            v += rule.weight[i] * r * r * r / 3.0;
                          }
                          return v;
                        },
                        [](const VoxelSet& v) { return static_cast<double>(v.count()) * std::pow(v.spacing, 3); },
                    },
                    K.shape());
}

namespace {

double parametric_area(const Region& K, int nt, int np) {
  const SphereRule rule = sphere_rule(nt, np);
  double a = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const SurfaceFrame f = K.surface(rule.theta[i], rule.phi[i]);
    a += rule.weight[i] * norm(cross(f.x_t, f.x_p)) / std::sin(rule.theta[i]);
  }
  return a;
}

double voxel_perimeter(const VoxelSet& v) {
  double area = 0.0;
  for (const auto& f : voxel_boundary_faces(v)) area += f.area;
  return area;
}

}  // namespace

// Face counting with a per-voxel normal correction: a patch with unit normal
// n exposes |n|_1 times its true area in axis-aligned faces.
std::vector<BoundaryFace> voxel_boundary_faces(const VoxelSet& v) {
  const auto faces = exposed_faces(v);
  const double h2 = v.spacing * v.spacing;
  std::vector<BoundaryFace> out;
  out.reserve(faces.size());
  for (const auto& f : faces) {
    Vec3 g;
    for (int dk = -1; dk <= 1; ++dk)
      for (int dj = -1; dj <= 1; ++dj)
        for (int di = -1; di <= 1; ++di) {
          if (di == 0 && dj == 0 && dk == 0) continue;
          if (!v.occupied(f.i + di, f.j + dj, f.k + dk)) continue;
          const Vec3 d{static_cast<double>(di), static_cast<double>(dj), static_cast<double>(dk)};
          g += d / dot(d, d);
        }
    Vec3 axis;
    if (f.axis == 0) axis.x = f.sign;
    if (f.axis == 1) axis.y = f.sign;
    if (f.axis == 2) axis.z = f.sign;
    const double gn = norm(g);
    if (gn == 0.0) {
      out.push_back({f.center, axis, h2});
      continue;
    }
    const Vec3 n = -g / gn;
    const double l1 = std::abs(n.x) + std::abs(n.y) + std::abs(n.z);
    out.push_back({f.center, n, h2 / l1});
  }
  return out;
}

double euclidean_perimeter(const Region& K, const QuadratureOptions& q) {
  return std::visit(overloaded{
                        [](const Ball& b) { return 4.0 * kPi * b.radius * b.radius; },
                        [&](const Ellipsoid& e) {
                          if (e.a == e.b && e.b == e.c) return 4.0 * kPi * e.a * e.a;
                          // Refine the product rule until successive orders agree.
                          int nt = 32;
                          double prev = parametric_area(K, nt, 2 * nt);
                          for (nt = 64; nt <= 1024; nt *= 2) {
                            const double cur = parametric_area(K, nt, 2 * nt);
                            if (std::abs(cur - prev) <= 1e-13 * cur) return cur;
                            prev = cur;
                          }
                          return prev;
                        },
                        [&](const StarShaped& s) {
                          if (s.amplitude == 0.0) return 4.0 * kPi * s.base_radius * s.base_radius;
                          return parametric_area(K, q.angular_theta, q.angular_phi);
                        },
                        [](const VoxelSet& v) { return voxel_perimeter(v); },
                    },
                    K.shape());
}

// ---------------------------------------------------------------------------
// Fraenkel asymmetry

double intersection_volume(const Region& K, const Vec3& c, double rho, const FraenkelOptions& opt) {
  require(rho > 0.0, "ball radius must be > 0");
  if (const auto* b = std::get_if<Ball>(&K.shape())) {
    const double d = norm(c - b->center), R1 = b->radius, R2 = rho;
    if (d >= R1 + R2) return 0.0;
    if (d <= std::abs(R1 - R2)) {
      const double r = std::min(R1, R2);
      return 4.0 / 3.0 * kPi * r * r * r;
    }
    const double s = R1 + R2 - d;
    return kPi * s * s * (d * d + 2.0 * d * (R1 + R2) - 3.0 * (R1 - R2) * (R1 - R2)) / (12.0 * d);
  }
  // Stratified sampling of B(c, rho), uniform in (s^3, cos theta, phi). The
  // generator is re-seeded per call so every centre sees the same jitters.
  std::mt19937_64 rng(opt.seed);
  auto uniform = [&] { return static_cast<double>(rng() >> 11) * 0x1.0p-53; };
  const int n = opt.strata;
  std::size_t inside = 0;
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b)
      for (int e = 0; e < n; ++e) {
        const double u = (a + uniform()) / n;
        const double t = -1.0 + 2.0 * (b + uniform()) / n;
        const double p = 2.0 * kPi * (e + uniform()) / n;
        const double s = rho * std::cbrt(u);
        const double st = std::sqrt(std::max(0.0, 1.0 - t * t));
        const Vec3 x = c + Vec3{st * std::cos(p), st * std::sin(p), t} * s;
        if (K.contains(x)) ++inside;
      }
  const double frac = static_cast<double>(inside) / (static_cast<double>(n) * n * n);
  return frac * 4.0 / 3.0 * kPi * rho * rho * rho;
}

FraenkelResult fraenkel_asymmetry(const Region& K, const FraenkelOptions& opt) {
  FraenkelResult res;
  const double vol = euclidean_volume(K);
  res.ball_radius = std::cbrt(3.0 * vol / (4.0 * kPi));
  if (const auto* b = std::get_if<Ball>(&K.shape())) {
    res.ball_center = b->center;
    res.value = 0.0;
    res.evaluations = 0;
    return res;
  }
  const double rho = res.ball_radius;
  auto objective = [&](const Vec3& c) {
    ++res.evaluations;
    return std::max(0.0, 2.0 * (1.0 - intersection_volume(K, c, rho, opt) / vol));
  };
  Vec3 best_c = centroid(K);
  double best = objective(best_c);
  double step = 0.25 * rho;
  int iter = 0;
  for (; iter < opt.max_iterations && step >= opt.tolerance * rho; ++iter) {
    Vec3 cand_best_c = best_c;
    double cand_best = best;
    bool improved = false;
    for (int axis = 0; axis < 3; ++axis)
      for (int sgn = -1; sgn <= 1; sgn += 2) {
        Vec3 c = best_c;
        if (axis == 0) c.x += sgn * step;
        if (axis == 1) c.y += sgn * step;
        if (axis == 2) c.z += sgn * step;
        const double v = objective(c);
        const bool lex_smaller = std::tie(c.x, c.y, c.z) < std::tie(cand_best_c.x, cand_best_c.y, cand_best_c.z);
        if (v < cand_best - 1e-12 || (improved && v <= cand_best + 1e-12 && lex_smaller)) {
          cand_best = v;
          cand_best_c = c;
          improved = true;
        }
      }
    if (improved) {
      best = cand_best;
      best_c = cand_best_c;
    } else {
      step *= 0.5;
    }
  }
  res.converged = step < opt.tolerance * rho;
  res.value = best;
  res.ball_center = best_c;
  return res;
}

double radial_spread(const Region& K) {
  if (const auto* b = std::get_if<Ball>(&K.shape())) {
    const double d = norm(b->center);
    return (d + b->radius) - std::abs(b->radius - d);
  }
  if (const auto* e = std::get_if<Ellipsoid>(&K.shape()); e && e->center == Vec3{}) return e->a - e->c;
  if (const auto* v = std::get_if<VoxelSet>(&K.shape())) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& f : exposed_faces(*v)) {
      const double r = norm(f.center);
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
    return hi - lo;
  }
  auto r = [](const Vec3& x) { return norm(x); };
  return boundary_extremum(K, r, true) - boundary_extremum(K, r, false);
}

// ---------------------------------------------------------------------------
// Exhaustions

const char* to_string(ScalingRule rule) {
  switch (rule) {
    case ScalingRule::ScaleAll: return "scale-all";
    case ScalingRule::ScaleRadiusFixOffset: return "scale-radius-fix-offset";
    case ScalingRule::FixShapeFixAsymmetry: return "fix-shape-fix-asymmetry";
  }
  return "unknown";
}

ScalingRule parse_scaling_rule(const std::string& s) {
  if (s == "scale-all") return ScalingRule::ScaleAll;
  if (s == "scale-radius-fix-offset") return ScalingRule::ScaleRadiusFixOffset;
  if (s == "fix-shape-fix-asymmetry") return ScalingRule::FixShapeFixAsymmetry;
  fail(ErrorCode::Config, "unknown exhaustion rule '" + s + "'");
}

Region apply_scaling(const Region& base, double lambda, ScalingRule rule) {
  switch (rule) {
    case ScalingRule::ScaleAll: return base.scaled(lambda, Vec3{});
    case ScalingRule::FixShapeFixAsymmetry: return base.scaled(lambda, base.center());
    case ScalingRule::ScaleRadiusFixOffset:
      if (const auto* s = std::get_if<StarShaped>(&base.shape())) {
        return Region::star(s->center, lambda * s->base_radius, s->amplitude, s->profile);
      }
      return base.scaled(lambda, base.center());
  }
  return base;
}

Exhaustion generate_exhaustion(const ExhaustionSpec& spec) {
  if (spec.count < 3) fail(ErrorCode::InvalidArgument, "exhaustion needs at least 3 regions for extrapolation");
  require(spec.rho0 > 0.0 && spec.gamma > 1.0, "exhaustion needs rho0 > 0 and gamma > 1");
  Exhaustion ex;
  for (int j = 0; j < spec.count; ++j) {
    const double rho = spec.rho0 * std::pow(spec.gamma, j);
    ex.scales.push_back(rho);
    ex.regions.push_back(apply_scaling(spec.base, rho, spec.rule));
  }
  // Nested once the outer radius of K_j is no larger than the inner radius of K_{j+1}.
  const Vec3 origin{};
  std::vector<bool> ok(spec.count - 1);
  for (int j = 0; j + 1 < spec.count; ++j) {
    const double outer = ex.regions[j].bounding_radius(origin);
    const Region& next = ex.regions[j + 1];
    const double inner = next.contains(origin) ? next.boundary_distance(origin) : 0.0;
    ok[j] = outer <= inner * (1.0 + 1e-12);
  }
  ex.nested_from = -1;
  for (int j = spec.count - 2; j >= 0 && ok[j]; --j) ex.nested_from = j;
  ex.nested_tail = ex.nested_from >= 0;
  return ex;
}

}  // namespace capmass
