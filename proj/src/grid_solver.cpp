#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "capmass/capacity.hpp"
#include "capmass/error.hpp"
#include "capmass/functionals.hpp"

#ifdef CAPMASS_HAVE_OPENMP
#include <omp.h>
#endif

namespace capmass {

namespace {

constexpr double kPi = std::numbers::pi;

int resolve_threads(int requested) {
#ifdef CAPMASS_HAVE_OPENMP
  return requested > 0 ? requested : omp_get_max_threads();
#else
  (void)requested;
  return 1;
#endif
}

// Leading mass of the conformal factor, ignoring any constant metric scale.
double far_field_mass(const MetricModel& model) {
  try {
    return adm_mass(model.scaled(1.0 / model.metric_scale()));
  } catch (const Error&) {
    return 0.0;
  }
}

// Symmetric positive definite system on an n^3 cube of cells. Rows of cells
// inside K are the identity with zero right-hand side.
struct System {
  int n = 0;
  double h = 0.0;
  Vec3 lower;
  std::vector<double> kx, ky, kz;   // conductance to the +x/+y/+z neighbour
  std::vector<double> sink;         // conductance to dK (phi = 0)
  std::vector<double> robin;        // conductance to the far field (phi = 1)
  std::vector<double> diag;
  std::vector<std::uint8_t> inside;

  std::size_t idx(int i, int j, int k) const {
    return static_cast<std::size_t>(i) + static_cast<std::size_t>(n) * (j + static_cast<std::size_t>(n) * k);
  }
  Vec3 center_of(int i, int j, int k) const { return lower + Vec3{(i + 0.5) * h, (j + 0.5) * h, (k + 0.5) * h}; }
};

double boundary_fraction(const Region& K, const Vec3& a, const Vec3& b) {
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 40; ++it) {
    const double mid = 0.5 * (lo + hi);
    (K.contains(a + (b - a) * mid) ? hi : lo) = mid;
  }
  return std::max(0.5 * (lo + hi), 1e-2);
}

System assemble(const MetricModel& model, const Region& K, int n, double h, const Vec3& center, OuterBoundary bc,
                int threads) {
  System s;
  s.n = n;
  s.h = h;
  s.lower = center - Vec3{0.5 * n * h, 0.5 * n * h, 0.5 * n * h};
  const std::size_t total = static_cast<std::size_t>(n) * n * n;
  s.kx.assign(total, 0.0);
  s.ky.assign(total, 0.0);
  s.kz.assign(total, 0.0);
  s.sink.assign(total, 0.0);
  s.robin.assign(total, 0.0);
  s.diag.assign(total, 1.0);
  s.inside.assign(total, 0);
  const double m_far = far_field_mass(model);

#pragma omp parallel for schedule(static) num_threads(threads)
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) s.inside[s.idx(i, j, k)] = K.contains(s.center_of(i, j, k)) ? 1 : 0;

  auto root_w = [&](const Vec3& x) { return std::sqrt(model.metric_factor(x)); };
  const int off[6][3] = {{1, 0, 0}, {-1, 0, 0}, {0, 1, 0}, {0, -1, 0}, {0, 0, 1}, {0, 0, -1}};

#pragma omp parallel for schedule(static) num_threads(threads)
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const std::size_t a = s.idx(i, j, k);
        if (s.inside[a]) continue;
        const Vec3 xa = s.center_of(i, j, k);
        double ksum = 0.0;
        for (int f = 0; f < 6; ++f) {
          const int ii = i + off[f][0], jj = j + off[f][1], kk = k + off[f][2];
          const Vec3 dir{static_cast<double>(off[f][0]), static_cast<double>(off[f][1]), static_cast<double>(off[f][2])};
          if (ii < 0 || jj < 0 || kk < 0 || ii >= n || jj >= n || kk >= n) {
            const Vec3 xf = xa + dir * (0.5 * h);
            double c = 0.0;
            if (bc == OuterBoundary::Dirichlet) {
              c = root_w(xf) * h * h / (0.5 * h);
            } else {
              const Vec3 d = xf - center;
              const double r = norm(d);
              const double beta = dot(d, dir) / (r * (r + 0.5 * m_far));
              c = root_w(xf) * h * h / (0.5 * h + 1.0 / beta);
            }
            s.robin[a] += c;
            ksum += c;
            continue;
          }
          const std::size_t b = s.idx(ii, jj, kk);
          if (s.inside[b]) {
            const Vec3 xb = s.center_of(ii, jj, kk);
            const double theta = boundary_fraction(K, xa, xb);
            const double c = root_w(xa + (xb - xa) * (0.5 * theta)) * h / theta;
            s.sink[a] += c;
            ksum += c;
            continue;
          }
          const double c = root_w(xa + dir * (0.5 * h)) * h;
          ksum += c;
          if (f == 0) s.kx[a] = c;
          if (f == 2) s.ky[a] = c;
          if (f == 4) s.kz[a] = c;
        }
        s.diag[a] = ksum;
      }
  return s;
}

// y = A x with per-slab partial sums for the dot products, so reductions do
// not depend on the thread schedule.
void apply(const System& s, const std::vector<double>& x, std::vector<double>& y, int threads) {
  const int n = s.n;
  const std::size_t sx = 1, sy = static_cast<std::size_t>(n), sz = static_cast<std::size_t>(n) * n;
#pragma omp parallel for schedule(static) num_threads(threads)
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const std::size_t a = s.idx(i, j, k);
        if (s.inside[a]) {
          y[a] = x[a];
          continue;
        }
        double v = s.diag[a] * x[a];
        if (i + 1 < n) v -= s.kx[a] * x[a + sx];
        if (i > 0) v -= s.kx[a - sx] * x[a - sx];
        if (j + 1 < n) v -= s.ky[a] * x[a + sy];
        if (j > 0) v -= s.ky[a - sy] * x[a - sy];
        if (k + 1 < n) v -= s.kz[a] * x[a + sz];
        if (k > 0) v -= s.kz[a - sz] * x[a - sz];
        y[a] = v;
      }
}

double dot_slabs(const System& s, const std::vector<double>& a, const std::vector<double>& b, int threads) {
  const int n = s.n;
  const std::size_t slab = static_cast<std::size_t>(n) * n;
  std::vector<double> part(n, 0.0);
#pragma omp parallel for schedule(static) num_threads(threads)
  for (int k = 0; k < n; ++k) {
    double acc = 0.0;
    const std::size_t base = slab * k;
    for (std::size_t q = 0; q < slab; ++q) acc += a[base + q] * b[base + q];
    part[k] = acc;
  }
  double sum = 0.0;
  for (double p : part) sum += p;
  return sum;
}

struct SolveResult {
  PotentialField field;
  double energy = 0.0;   // capacity from the discrete energy
  double flux = 0.0;     // capacity from the flux through the sampling sphere
  int iterations = 0;
  double residual = 0.0;
};

SolveResult solve(const MetricModel& model, const Region& K, int n, double h, const Vec3& center, double region_radius,
                  double flux_radius, const GridOptions& opt, int threads) {
  const System s = assemble(model, K, n, h, center, opt.outer_bc, threads);
  const std::size_t total = s.diag.size();
  std::vector<double> x(total), r(total), z(total), p(total), q(total), b(total);
  const double c0 = region_radius;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const std::size_t a = s.idx(i, j, k);
        b[a] = s.robin[a];
        if (s.inside[a]) continue;
        const double d = norm(s.center_of(i, j, k) - center);
        x[a] = std::clamp(1.0 - c0 / std::max(d, 1e-300), 0.0, 1.0);
      }
  apply(s, x, q, threads);
  for (std::size_t a = 0; a < total; ++a) {
    r[a] = b[a] - q[a];
    z[a] = r[a] / s.diag[a];
    p[a] = z[a];
  }
  const double bnorm = std::sqrt(dot_slabs(s, b, b, threads));
  double rz = dot_slabs(s, r, z, threads);
  double rnorm = std::sqrt(dot_slabs(s, r, r, threads));
  int it = 0;
  while (rnorm > opt.tol * bnorm && it < opt.max_iter) {
    apply(s, p, q, threads);
    const double alpha = rz / dot_slabs(s, p, q, threads);
#pragma omp parallel for schedule(static) num_threads(threads)
    for (std::size_t a = 0; a < total; ++a) {
      x[a] += alpha * p[a];
      r[a] -= alpha * q[a];
      z[a] = r[a] / s.diag[a];
    }
    const double rz_new = dot_slabs(s, r, z, threads);
    const double beta = rz_new / rz;
    rz = rz_new;
#pragma omp parallel for schedule(static) num_threads(threads)
    for (std::size_t a = 0; a < total; ++a) p[a] = z[a] + beta * p[a];
    rnorm = std::sqrt(dot_slabs(s, r, r, threads));
    ++it;
  }
  if (!(rnorm <= opt.tol * bnorm)) {
    std::ostringstream os;
    os << "grid solve stopped at relative residual " << rnorm / bnorm << " after " << it << " iterations";
    fail(ErrorCode::NotConverged, os.str());
  }

  SolveResult res;
  res.iterations = it;
  res.residual = rnorm / bnorm;

  std::vector<double> part(n, 0.0);
#pragma omp parallel for schedule(static) num_threads(threads)
  for (int k = 0; k < n; ++k) {
    double acc = 0.0;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const std::size_t a = s.idx(i, j, k);
        if (s.inside[a]) continue;
        const double v = x[a];
        acc += s.sink[a] * v * v + s.robin[a] * (1.0 - v) * (1.0 - v);
        if (i + 1 < n) acc += s.kx[a] * (v - x[s.idx(i + 1, j, k)]) * (v - x[s.idx(i + 1, j, k)]);
        if (j + 1 < n) acc += s.ky[a] * (v - x[s.idx(i, j + 1, k)]) * (v - x[s.idx(i, j + 1, k)]);
        if (k + 1 < n) acc += s.kz[a] * (v - x[s.idx(i, j, k + 1)]) * (v - x[s.idx(i, j, k + 1)]);
      }
    part[k] = acc;
  }
  double energy = 0.0;
  for (double v : part) energy += v;
  res.energy = energy / (4.0 * kPi);

  res.field.n = n;
  res.field.h = h;
  res.field.lower = s.lower;
  res.field.center = center;
  res.field.region_radius = region_radius;
  res.field.phi = std::move(x);
  res.field.inside = s.inside;

  const SphereRule rule = sphere_rule(48, 96);
  double flux = 0.0;
  for (std::size_t i = 0; i < rule.size(); ++i) {
    const Vec3 w = unit_direction(rule.theta[i], rule.phi[i]);
    const Vec3 y = center + w * flux_radius;
    flux += rule.weight[i] * std::sqrt(model.metric_factor(y)) * dot(res.field.gradient(y), w);
  }
  res.flux = flux * flux_radius * flux_radius / (4.0 * kPi);
  return res;
}

}  // namespace

double PotentialField::sample(const Vec3& x) const {
  const Vec3 d = (x - lower) / h - Vec3{0.5, 0.5, 0.5};
  const double fx = std::clamp(d.x, 0.0, n - 1.0), fy = std::clamp(d.y, 0.0, n - 1.0), fz = std::clamp(d.z, 0.0, n - 1.0);
  const int i = std::min(static_cast<int>(fx), n - 2), j = std::min(static_cast<int>(fy), n - 2),
            k = std::min(static_cast<int>(fz), n - 2);
  const double tx = fx - i, ty = fy - j, tz = fz - k;
  double v = 0.0;
  for (int c = 0; c < 8; ++c) {
    const int di = c & 1, dj = (c >> 1) & 1, dk = (c >> 2) & 1;
    const double wgt = (di ? tx : 1 - tx) * (dj ? ty : 1 - ty) * (dk ? tz : 1 - tz);
    v += wgt * phi[index(i + di, j + dj, k + dk)];
  }
  return v;
}

Vec3 PotentialField::gradient(const Vec3& x) const {
  const Vec3 d = (x - lower) / h - Vec3{0.5, 0.5, 0.5};
  const double fx = std::clamp(d.x, 1.0, n - 2.0), fy = std::clamp(d.y, 1.0, n - 2.0), fz = std::clamp(d.z, 1.0, n - 2.0);
  const int i = std::min(static_cast<int>(fx), n - 3), j = std::min(static_cast<int>(fy), n - 3),
            k = std::min(static_cast<int>(fz), n - 3);
  const double tx = fx - i, ty = fy - j, tz = fz - k;
  Vec3 g;
  for (int c = 0; c < 8; ++c) {
    const int ii = i + (c & 1), jj = j + ((c >> 1) & 1), kk = k + ((c >> 2) & 1);
    const double wgt = ((c & 1) ? tx : 1 - tx) * (((c >> 1) & 1) ? ty : 1 - ty) * (((c >> 2) & 1) ? tz : 1 - tz);
    const Vec3 gc{(phi[index(ii + 1, jj, kk)] - phi[index(ii - 1, jj, kk)]) / (2 * h),
                  (phi[index(ii, jj + 1, kk)] - phi[index(ii, jj - 1, kk)]) / (2 * h),
                  (phi[index(ii, jj, kk + 1)] - phi[index(ii, jj, kk - 1)]) / (2 * h)};
    g += gc * wgt;
  }
  return g;
}

GridSolution capacity_grid(const MetricModel& model, const Region& K, const GridOptions& opt) {
  if (model.dimension() != 3) fail(ErrorCode::Unsupported, "grid capacity is implemented for n = 3 only");
  require(opt.n >= 16, "solver.grid_n must be >= 16");
  require(opt.outer_radius_factor >= 2.0, "solver.outer_radius_factor must be >= 2");
  require(opt.tol > 0.0 && opt.max_iter > 0, "solver tolerance and iteration cap must be positive");
  require_region_in_domain(K, model);

  const int threads = resolve_threads(opt.threads);
  const Vec3 center = K.center();
  const double Rb = K.bounding_radius(center);
  const double L1 = opt.outer_radius_factor * Rb;
  const int n1 = opt.n;
  const double h = 2.0 * L1 / n1;
  if (K.thinnest_feature() < 8.0 * h) {
    std::ostringstream os;
    os << "voxelization too coarse: " << K.thinnest_feature() / h << " cells across the thinnest feature (need 8)";
    fail(ErrorCode::InvalidArgument, os.str());
  }
  if (euclidean_volume(K) < 8.0 * h * h * h) fail(ErrorCode::InvalidArgument, "region volume below 8 h^3");
  const double flux_radius = 0.5 * (Rb + L1);

  SolveResult first = solve(model, K, n1, h, center, Rb, flux_radius, opt, threads);
  GridSolution out;
  CapacityEstimate& e = out.estimate;
  e.method = CapacityMethod::GridVariational;
  e.diagnostics["grid_n"] = n1;
  e.diagnostics["h"] = h;
  e.diagnostics["outer_radius"] = L1;
  e.diagnostics["flux_radius"] = flux_radius;
  e.diagnostics["threads"] = threads;
  e.diagnostics["iterations"] = first.iterations;
  e.diagnostics["relative_residual"] = first.residual;
  e.diagnostics["energy_1"] = first.energy;
  e.diagnostics["flux_1"] = first.flux;

  double energy = first.energy, flux = first.flux, extrap = 0.0;
  if (opt.extrapolate) {
    const int n2 = n1 + 2 * static_cast<int>(std::lround(0.125 * n1));
    const double L2 = 0.5 * n2 * h;
    SolveResult second = solve(model, K, n2, h, center, Rb, flux_radius, opt, threads);
    const double p = opt.exponent > 0.0 ? opt.exponent : (opt.outer_bc == OuterBoundary::Robin ? 3.0 : 1.0);
    const double w1 = std::pow(L1, p), w2 = std::pow(L2, p);
    energy = (w2 * second.energy - w1 * first.energy) / (w2 - w1);
    flux = (w2 * second.flux - w1 * first.flux) / (w2 - w1);
    extrap = std::abs(flux - second.flux);
    e.diagnostics["outer_radius_2"] = L2;
    e.diagnostics["grid_n_2"] = n2;
    e.diagnostics["iterations_2"] = second.iterations;
    e.diagnostics["energy_2"] = second.energy;
    e.diagnostics["flux_2"] = second.flux;
    e.diagnostics["extrapolation_exponent"] = p;
  }
  // Same box at twice the spacing. The change is used unreduced as the
  // discretisation term since the cut-cell error is not cleanly second order.
  double discretization = 0.0;
  if (n1 / 2 >= 16) {
    SolveResult coarse = solve(model, K, n1 / 2, 2.0 * h, center, Rb, flux_radius, opt, threads);
    discretization = std::abs(first.flux - coarse.flux);
    e.diagnostics["flux_coarse"] = coarse.flux;
  }
  e.diagnostics["discretization"] = discretization;
  e.value = flux;
  e.diagnostics["energy"] = energy;
  e.diagnostics["flux"] = flux;
  e.diagnostics["energy_flux_gap"] = std::abs(energy - flux);
  e.diagnostics["extrapolation_residual"] = extrap;
  e.error_estimate = std::abs(energy - flux) + extrap + discretization;
  if (!(e.value > 0.0) || !std::isfinite(e.value)) fail(ErrorCode::Internal, "grid capacity is not positive");
  out.field = std::move(first.field);
  return out;
}

}  // namespace capmass
