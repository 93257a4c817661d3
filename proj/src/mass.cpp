#include "capmass/mass.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "capmass/error.hpp"

namespace capmass {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Figure missing() { return {kNaN, kNaN}; }

// First-order propagation through f by forward differences at the error size.
template <std::size_t N, class F>
double propagate(const F& f, const std::array<double, N>& x, const std::array<double, N>& e) {
  const double base = f(x);
  double err = 0.0;
  for (std::size_t i = 0; i < N; ++i) {
    if (!(e[i] > 0.0)) continue;
    auto y = x;
    y[i] += e[i];
    err += std::abs(f(y) - base);
  }
  return err;
}

double capacity_slack(const CapacityEstimate& c, const DeficitOptions& opt) {
  if (c.method == CapacityMethod::GridVariational ||
      (c.method == CapacityMethod::ConformalShift && c.diagnostics.count("base_grid_n"))) {
    return opt.slack_grid * c.value;
  }
  return opt.slack_quadrature;
}

}  // namespace

bool Figure::ok() const { return std::isfinite(value); }

DeficitRecord deficit_record(const Region& K, const MetricModel& model, const DeficitOptions& opt, int j, double rho) {
  DeficitRecord rec;
  rec.j = j;
  rec.rho = rho;
  rec.volume = rec.area = rec.v_radius = rec.a_radius = missing();
  rec.cv_deficit_radius = rec.cv_deficit_normalized = rec.iso_deficit = rec.iso_deficit_alt = missing();
  const QuadratureOptions& q = opt.quadrature;
  if (model.dimension() != 3) fail(ErrorCode::Unsupported, "deficit records are defined for n = 3; use higher_dim_deficits");

  try {
    const Measured V = riemannian_volume(K, model, q);
    rec.volume = {V.value, V.error};
    const double v = volume_radius(V.value);
    rec.v_radius = {v, v * V.error / (3.0 * V.value)};
  } catch (const Error& e) {
    rec.field_errors["volume"] = e.what();
  }
  try {
    const Measured A = riemannian_area(K, model, q);
    rec.area = {A.value, A.error};
    const double a = area_radius(A.value);
    rec.a_radius = {a, a * A.error / (2.0 * A.value)};
  } catch (const Error& e) {
    rec.field_errors["area"] = e.what();
  }
  try {
    const CapacityMethod m = opt.method ? *opt.method : select_capacity_method(model, K);
    rec.capacity = capacity(model, K, m, q, opt.grid);
    rec.capacity_ok = true;
  } catch (const Error& e) {
    rec.field_errors["capacity"] = e.what();
  }

  if (rec.volume.ok() && rec.capacity_ok) {
    const double c = rec.capacity.value, ce = rec.capacity.error_estimate;
    rec.cv_deficit_radius = {rec.v_radius.value - c, rec.v_radius.error + ce};
    auto norm_form = [](const std::array<double, 2>& x) {
      return (x[0] - 4.0 * kPi * x[1] * x[1] * x[1] / 3.0) / (4.0 * kPi * x[1] * x[1]);
    };
    const std::array<double, 2> x{rec.volume.value, c}, e{rec.volume.error, ce};
    rec.cv_deficit_normalized = {norm_form(x), propagate(norm_form, x, e)};
    rec.slack = rec.v_radius.error + ce + capacity_slack(rec.capacity, opt);
  }
  if (rec.volume.ok() && rec.area.ok()) {
    auto iso = [](const std::array<double, 2>& x) {
      return (2.0 / x[1]) * (x[0] - std::pow(x[1], 1.5) / (6.0 * std::sqrt(kPi)));
    };
    const std::array<double, 2> x{rec.volume.value, rec.area.value}, e{rec.volume.error, rec.area.error};
    rec.iso_deficit = {iso(x), propagate(iso, x, e)};
    rec.iso_deficit_alt = {2.0 * (rec.v_radius.value - rec.a_radius.value),
                           2.0 * (rec.v_radius.error + rec.a_radius.error)};
  }
  if (K.has_surface()) {
    try {
      rec.bray_miao_bound = bray_miao_bound(K, model, q);
    } catch (const Error& e) {
      rec.field_errors["bray_miao"] = e.what();
    }
  }
  if (opt.asymmetry) {
    try {
      const FraenkelResult f = fraenkel_asymmetry(K, opt.fraenkel);
      const double mc_error = K.is_ball() ? 0.0 : 2.0 / std::pow(static_cast<double>(opt.fraenkel.strata), 1.5);
      rec.asymmetry = Figure{f.value, mc_error};
      if (!f.converged) rec.field_errors["asymmetry"] = "optimizer did not converge";
    } catch (const Error& e) {
      rec.field_errors["asymmetry"] = e.what();
    }
  }
  return rec;
}

Figure bray_miao_bound(const Region& K, const MetricModel& model, const QuadratureOptions& q) {
  if (model.dimension() != 3) fail(ErrorCode::Unsupported, "the Bray-Miao bound is stated for n = 3");
  const Measured A = riemannian_area(K, model, q);
  const Measured W = willmore_energy(K, model, q);
  auto f = [](const std::array<double, 2>& x) {
    return std::sqrt(x[0] / (16.0 * kPi)) * (1.0 + std::sqrt(x[1] / (16.0 * kPi)));
  };
  const std::array<double, 2> x{A.value, W.value}, e{A.error, W.error};
  return {f(x), propagate(f, x, e)};
}

BrayMiaoCheck bray_miao_check(const Region& K, const MetricModel& model, const CapacityEstimate& cap,
                              const QuadratureOptions& q, double slack) {
  const Figure b = bray_miao_bound(K, model, q);
  BrayMiaoCheck c;
  c.bound = b.value;
  c.bound_error = b.error;
  c.capacity = cap.value;
  c.margin = b.value - cap.value;
  c.ok = cap.value <= b.value + b.error + cap.error_estimate + slack;
  return c;
}

namespace {

// Least squares over the basis {1, x, x ln rho}, x = rho^{-p}, on points [from, n).
bool fit_basis(const std::vector<double>& rho, const std::vector<double>& d, double p, bool log_term, std::size_t from,
               double coef[3]) {
  const int k = log_term ? 3 : 2;
  if (rho.size() - from < static_cast<std::size_t>(k)) return false;
  double A[3][4] = {};
  for (std::size_t i = from; i < rho.size(); ++i) {
    const double x = std::pow(rho[i], -p);
    const double basis[3] = {1.0, x, x * std::log(rho[i])};
    for (int r = 0; r < k; ++r) {
      for (int c = 0; c < k; ++c) A[r][c] += basis[r] * basis[c];
      A[r][k] += basis[r] * d[i];
    }
  }
  for (int c = 0; c < k; ++c) {
    int piv = c;
    for (int r = c + 1; r < k; ++r)
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    if (A[piv][c] == 0.0) return false;
    for (int q = 0; q <= k; ++q) std::swap(A[c][q], A[piv][q]);
    for (int r = 0; r < k; ++r) {
      if (r == c) continue;
      const double f = A[r][c] / A[c][c];
      for (int q = c; q <= k; ++q) A[r][q] -= f * A[c][q];
    }
  }
  for (int r = 0; r < 3; ++r) coef[r] = r < k ? A[r][k] / A[r][r] : 0.0;
  return true;
}

}  // namespace

LimitFit mass_extrapolate(const std::vector<double>& rho, const std::vector<double>& d, double p, bool log_term) {
  const std::size_t n = rho.size();
  if (n < 3 || d.size() != n) fail(ErrorCode::InvalidArgument, "extrapolation needs at least 3 records");
  for (std::size_t i = 1; i < n; ++i) require(rho[i] > rho[i - 1], "extrapolation scales must increase");
  require(p > 0.0, "extrapolation exponent must be > 0");
  for (double v : d) require(std::isfinite(v), "extrapolation input contains a missing deficit");
  LimitFit out;
  out.exponent = p;
  out.log_term = log_term;
  double coef[3];
  if (!fit_basis(rho, d, p, log_term, 0, coef)) fail(ErrorCode::InvalidArgument, "degenerate extrapolation data");
  out.limit = coef[0];
  out.slope = coef[1];
  out.log_slope = coef[2];
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = std::pow(rho[i], -p);
    const double mis = d[i] - (coef[0] + coef[1] * x + coef[2] * x * std::log(rho[i]));
    ss += mis * mis;
  }
  out.residual = std::sqrt(ss / n);
  double alt[3];
  if (fit_basis(rho, d, p, log_term, 1, alt)) {
    out.uncertainty = out.residual + std::abs(out.limit - alt[0]);
  } else {
    // Too few points to drop one: compare with the fit without the logarithm.
    fit_basis(rho, d, p, false, 1, alt);
    out.uncertainty = out.residual + std::abs(out.limit - alt[0]);
  }

  const double d1 = d[n - 3], d2 = d[n - 2], d3 = d[n - 1];
  const bool monotone = (d2 - d1) * (d3 - d2) >= 0.0;
  out.tail_warning = !monotone && std::min(std::abs(d2 - d1), std::abs(d3 - d2)) > out.residual;
  const double lo = std::min({d1, d2, d3}) - out.residual, hi = std::max({d1, d2, d3}) + out.residual;
  out.in_tail_range = out.limit >= lo && out.limit <= hi;
  return out;
}

LimitFit mass_extrapolate(const std::vector<DeficitRecord>& records, double p) {
  std::vector<double> rho, d;
  for (const auto& r : records) {
    rho.push_back(r.rho);
    d.push_back(r.cv_deficit_radius.value);
  }
  return mass_extrapolate(rho, d, p);
}

ExpansionResidual expansion_check(double r, const MetricModel& model, const QuadratureOptions& q, const GridOptions& grid) {
  const Region ball = Region::ball({}, r);
  const CapacityEstimate cap = capacity(model, ball, select_capacity_method(model, ball), q, grid);
  const Measured b = beta(r, model, q);
  const double m = adm_mass(model);
  ExpansionResidual out;
  out.capacity = cap.value;
  out.beta_term = b.value / (2.0 * r);
  out.residual = cap.value - (r + out.beta_term - 0.5 * m);
  out.error = cap.error_estimate + b.error / (2.0 * r);
  return out;
}

SpreadCheck bounded_spread_check(const std::vector<DeficitRecord>& records, const std::vector<Region>& regions,
                                 const MetricModel& model, double tolerance, double p) {
  SpreadCheck out;
  for (const auto& K : regions) out.alpha = std::max(out.alpha, radial_spread(K));
  const LimitFit fit = mass_extrapolate(records, p);
  out.limit = fit.limit;
  out.uncertainty = fit.uncertainty;
  out.bound = adm_mass(model) + out.alpha;
  out.margin = out.bound + tolerance - out.limit;
  out.ok = out.margin >= 0.0;
  return out;
}

IsocapCheck quantitative_isocap_check(const Region& K, const DeficitOptions& opt, double asymmetry_floor) {
  const MetricModel flat = MetricModel::euclidean(3);
  IsocapCheck out;
  out.asymmetry = K.is_ball() ? 0.0 : fraenkel_asymmetry(K, opt.fraenkel).value;
  out.volume_radius = volume_radius(euclidean_volume(K, opt.quadrature));
  if (out.asymmetry < asymmetry_floor) {
    out.skipped = true;
    out.ok = true;
    return out;
  }
  out.capacity = capacity(flat, K, select_capacity_method(flat, K), opt.quadrature, opt.grid).value;
  out.constant = (out.capacity / out.volume_radius - 1.0) / std::pow(out.asymmetry, 4);
  out.ok = out.constant > 0.0;
  return out;
}

HigherDimRecord higher_dim_deficits(double r, const MetricModel& model, const QuadratureOptions& q) {
  if (!model.is_radial()) fail(ErrorCode::Unsupported, "higher-dimensional deficits need a radial model");
  const int n = model.dimension();
  const Region ball = Region::ball({}, r);
  HigherDimRecord out;
  out.n = n;
  out.r = r;
  const Measured V = riemannian_volume(ball, model, q);
  const Measured A = riemannian_area(ball, model, q);
  out.volume = {V.value, V.error};
  out.area = {A.value, A.error};
  out.capacity = capacity_radial(model, r, q);
  const double w = unit_sphere_area(n), bn = unit_ball_volume(n);
  auto cv = [&](const std::array<double, 2>& x) {
    const double c = x[1];
    return 2.0 * (n - 2) / ((n - 1) * w * std::pow(c, 2.0 / (n - 2))) * (x[0] - bn * std::pow(c, n / (n - 2.0)));
  };
  auto iso = [&](const std::array<double, 2>& x) {
    const double a = x[1];
    return (2.0 / w) * std::pow(w / a, 2.0 / (n - 1)) * (x[0] - std::pow(a, n / (n - 1.0)) / (n * std::pow(w, 1.0 / (n - 1))));
  };
  const std::array<double, 2> xc{V.value, out.capacity.value}, ec{V.error, out.capacity.error_estimate};
  const std::array<double, 2> xa{V.value, A.value}, ea{V.error, A.error};
  out.cv_deficit = {cv(xc), propagate(cv, xc, ec)};
  out.iso_deficit = {iso(xa), propagate(iso, xa, ea)};
  return out;
}

LimitFit higher_dim_limit(const std::vector<HigherDimRecord>& records) {
  require(!records.empty(), "no records");
  std::vector<double> r, d;
  for (const auto& h : records) {
    r.push_back(h.r);
    d.push_back(h.cv_deficit.value);
  }
  const int n = records.front().n;
  return mass_extrapolate(r, d, n - 2.0, n == 4);
}

const std::vector<std::string>& known_checks() {
  static const std::vector<std::string> names{"pfs", "cv_positive", "form_equivalence", "bray_miao", "bounded_spread"};
  return names;
}

bool MassReport::all_ok() const {
  return std::all_of(checks.begin(), checks.end(), [](const NamedCheck& c) { return c.ok; });
}

MassReport build_mass_report(const MetricModel& model, const ExhaustionSpec& spec, const ReportOptions& opt) {
  for (const auto& c : opt.checks) {
    if (std::find(known_checks().begin(), known_checks().end(), c) == known_checks().end()) {
      fail(ErrorCode::Config, "unknown check '" + c + "'");
    }
  }
  const Exhaustion ex = generate_exhaustion(spec);
  MassReport rep;
  rep.model_label = model.label();
  {
    std::ostringstream os;
    os << spec.base.describe() << " rule=" << to_string(spec.rule) << " rho0=" << spec.rho0 << " gamma=" << spec.gamma
       << " count=" << spec.count;
    rep.description = os.str();
  }
  for (std::size_t j = 0; j < ex.regions.size(); ++j) {
    rep.records.push_back(deficit_record(ex.regions[j], model, opt.deficit, static_cast<int>(j), ex.scales[j]));
  }
  try {
    rep.adm_reference = adm_mass(model);
  } catch (const Error&) {
  }
  try {
    for (const auto& K : ex.regions) rep.max_radial_spread = std::max(rep.max_radial_spread, radial_spread(K));
  } catch (const Error&) {
  }

  auto series = [&](auto member) {
    std::vector<double> d;
    for (const auto& r : rep.records) d.push_back((r.*member).value);
    return d;
  };
  const std::vector<double> rho = ex.scales;
  const std::pair<const char*, Figure DeficitRecord::*> named[] = {
      {"cv_def_radius", &DeficitRecord::cv_deficit_radius},
      {"cv_def_norm", &DeficitRecord::cv_deficit_normalized},
      {"iso_def", &DeficitRecord::iso_deficit},
      {"iso_def_alt", &DeficitRecord::iso_deficit_alt},
  };
  for (const auto& [name, member] : named) {
    const std::vector<double> d = series(member);
    if (std::all_of(d.begin(), d.end(), [](double v) { return std::isfinite(v); })) {
      rep.limits[name] = mass_extrapolate(rho, d, opt.exponent);
    }
  }

  if (rep.limits.count("cv_def_radius")) {
    const std::vector<double> d = series(&DeficitRecord::cv_deficit_radius);
    bool decreasing = true, linear = true;
    std::vector<double> slopes;
    for (std::size_t i = 1; i < d.size(); ++i) {
      decreasing = decreasing && d[i] < d[i - 1];
      slopes.push_back((d[i] - d[i - 1]) / (rho[i] - rho[i - 1]));
    }
    for (std::size_t i = 1; i < slopes.size(); ++i) {
      const double ratio = slopes[i] / slopes[i - 1];
      linear = linear && ratio > 0.5 && ratio < 2.0;
    }
    rep.diverges = decreasing && linear && slopes.back() < 0.0;
  }

  const bool euclidean = model.kind() == MetricKind::Euclidean;
  const bool schwarzschild = model.is_schwarzschild();
  auto wanted = [&](const std::string& name, bool applicable) {
    if (opt.checks.empty()) return applicable;
    return std::find(opt.checks.begin(), opt.checks.end(), name) != opt.checks.end();
  };
  auto per_record = [&](const std::string& name, auto margin_of) {
    NamedCheck c{name, true, std::numeric_limits<double>::infinity(), ""};
    for (const auto& r : rep.records) {
      const double m = margin_of(r);
      if (!std::isfinite(m)) {
        c.ok = false;
        c.detail = "record " + std::to_string(r.j) + " is missing inputs";
        c.margin = kNaN;
        break;
      }
      if (m < c.margin) c.margin = m;
      if (m < 0.0) {
        c.ok = false;
        if (c.detail.empty()) c.detail = "violated at record " + std::to_string(r.j);
      }
    }
    rep.checks.push_back(c);
  };

  if (wanted("pfs", euclidean)) {
    per_record("pfs", [](const DeficitRecord& r) {
      return r.capacity_ok ? r.capacity.value - r.v_radius.value + r.slack : kNaN;
    });
  }
  if (wanted("cv_positive", schwarzschild)) {
    per_record("cv_positive", [](const DeficitRecord& r) { return r.cv_deficit_radius.value + r.slack; });
  }
  if (wanted("form_equivalence", true)) {
    per_record("form_equivalence", [](const DeficitRecord& r) {
      if (!r.cv_deficit_normalized.ok()) return kNaN;
      const double v = r.v_radius.value, c = r.capacity.value, d = v - c;
      const double bound = d * d * (v + 2.0 * c) / (3.0 * c * c);
      const double diff = std::abs(r.cv_deficit_normalized.value - r.cv_deficit_radius.value);
      const double eps = 1e-12 * (1.0 + std::abs(r.cv_deficit_normalized.value) + std::abs(d) + bound) +
                         1e-12 * r.volume.value / (4.0 * kPi * c * c);
      return bound + eps - diff;
    });
  }
  const bool any_bound = std::any_of(rep.records.begin(), rep.records.end(),
                                     [](const DeficitRecord& r) { return r.bray_miao_bound.has_value(); });
  if (wanted("bray_miao", any_bound)) {
    per_record("bray_miao", [](const DeficitRecord& r) {
      if (!r.bray_miao_bound || !r.capacity_ok) return kNaN;
      return r.bray_miao_bound->value + r.bray_miao_bound->error + r.slack - r.capacity.value;
    });
  }
  if (wanted("bounded_spread", rep.adm_reference.has_value() && rep.limits.count("cv_def_radius") > 0)) {
    NamedCheck c{"bounded_spread", false, kNaN, ""};
    if (rep.adm_reference && rep.limits.count("cv_def_radius")) {
      const LimitFit& f = rep.limits.at("cv_def_radius");
      double slack = 0.0;
      for (const auto& r : rep.records) slack = std::max(slack, r.slack);
      const double bound = *rep.adm_reference + rep.max_radial_spread;
      c.margin = bound + f.uncertainty + slack - f.limit;
      c.ok = c.margin >= 0.0;
      std::ostringstream os;
      os << "limit " << f.limit << " vs m + alpha = " << bound;
      c.detail = os.str();
    } else {
      c.detail = "needs an ADM reference and a complete capacity series";
    }
    rep.checks.push_back(c);
  }
  return rep;
}

}  // namespace capmass
