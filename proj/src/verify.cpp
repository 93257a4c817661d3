#include "capmass/verify.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "capmass/functionals.hpp"
#include "capmass/mass.hpp"
#include "capmass/report.hpp"

namespace capmass {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Timer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

std::string fmt(double x) { return format_number(x); }

double rel(double value, double exact) { return std::abs(value - exact) / std::abs(exact); }

// Converts an exception thrown inside a criterion into a failing result.
template <class F>
CriterionResult guarded(int id, const std::string& name, F&& body) {
  CriterionResult r;
  r.id = id;
  r.name = name;
  Timer t;
  try {
    body(r);
  } catch (const std::exception& e) {
    r.pass = false;
    r.measured = NAN;
    r.detail = std::string("error: ") + e.what();
  }
  std::ostringstream os;
  os << (r.detail.empty() ? "" : "; ") << "time " << std::fixed;
  os.precision(1);
  os << t.seconds() << " s";
  r.detail += os.str();
  return r;
}

DeficitOptions deficit_options(const VerifyOptions& opt) {
  DeficitOptions d;
  d.quadrature = opt.quadrature;
  d.grid = opt.grid;
  d.fraenkel.seed = opt.seed;
  d.asymmetry = false;
  return d;
}

// Smallest |a| / |b| compatible with the error bars of both.
double resolved_ratio(const Measured& a, const Measured& b) {
  const double num = std::abs(a.value) - a.error;
  const double den = std::abs(b.value) + b.error;
  return num > 0.0 ? num / den : 0.0;
}

std::vector<double> doubling(double rho0, int count) {
  std::vector<double> out;
  for (int j = 0; j < count; ++j) out.push_back(rho0 * std::pow(2.0, j));
  return out;
}

std::vector<DeficitRecord> ball_records(const MetricModel& model, const std::vector<double>& radii,
                                        const DeficitOptions& d) {
  std::vector<DeficitRecord> out;
  for (std::size_t j = 0; j < radii.size(); ++j)
    out.push_back(deficit_record(Region::ball({}, radii[j]), model, d, static_cast<int>(j), radii[j]));
  return out;
}

void c1(const VerifyOptions& opt, CriterionResult& r) {
  const MetricModel flat = MetricModel::euclidean(3);
  double worst = 0.0;
  for (double R : {0.5, 1.0, 10.0}) worst = std::max(worst, rel(capacity_radial(flat, R, opt.quadrature).value, R));
  r.pass = worst <= 1e-10;
  r.measured = worst;
  r.target = 0.0;
  r.tolerance = 1e-10;
  r.detail = "radial max rel err " + fmt(worst);
  if (opt.fast) {
    r.detail += "; grid skipped (--fast)";
    return;
  }
  GridOptions g = opt.grid;
  g.n = 96;
  g.outer_bc = OuterBoundary::Robin;
  g.extrapolate = true;
  Timer t;
  const CapacityEstimate e = capacity_grid(flat, Region::ball({}, 1.0), g).estimate;
  const double secs = t.seconds();
  const double err = rel(e.value, 1.0);
  r.measured = err;
  r.target = 0.0;
  r.tolerance = 0.015;
  r.pass = r.pass && err <= 0.015 && secs <= 60.0;
  r.detail += "; grid 96^3 cap(B_1)=" + format_measured(e.value, e.error_estimate) + " rel err " + fmt(err) +
              " in " + fmt(std::round(secs * 10.0) / 10.0) + " s (limit 60 s)";
}

void c2(const VerifyOptions& opt, CriterionResult& r) {
  double worst = 0.0;
  for (double m : {0.5, 1.0, 2.0}) {
    const MetricModel s = MetricModel::schwarzschild(m);
    for (double k : {2.0, 10.0, 100.0}) {
      const double rr = k * m;
      worst = std::max(worst, rel(capacity_radial(s, rr, opt.quadrature).value, rr + 0.5 * m));
    }
  }
  r.measured = worst;
  r.target = 0.0;
  r.tolerance = 1e-8;
  r.pass = worst <= 1e-8;
  r.detail = "max rel err of r + m/2 over 9 balls";
}

struct MassSeries {
  double m;
  std::vector<double> rho;
  std::vector<DeficitRecord> records;
};

const MassSeries& schwarzschild_series(const VerifyOptions& opt, double m) {
  static thread_local std::vector<std::pair<const VerifyOptions*, MassSeries>> cache;
  for (const auto& [o, s] : cache)
    if (o == &opt && s.m == m) return s;
  MassSeries s;
  s.m = m;
  s.rho = doubling(50.0 * std::max(m, 1.0), 4);
  s.records = ball_records(MetricModel::schwarzschild(m), s.rho, deficit_options(opt));
  cache.emplace_back(&opt, std::move(s));
  return cache.back().second;
}

void c3(const VerifyOptions& opt, CriterionResult& r) {
  double worst = 0.0, worst_c = 0.0;
  std::ostringstream os;
  for (double m : {0.5, 1.0, 2.0}) {
    const MassSeries& s = schwarzschild_series(opt, m);
    const LimitFit f = mass_extrapolate(s.records, 1.0);
    worst = std::max(worst, rel(f.limit, m));
    std::vector<double> C;
    for (const auto& rec : s.records) C.push_back(std::abs(rec.cv_deficit_radius.value - m) * rec.rho);
    for (std::size_t i = 1; i < C.size(); ++i) worst_c = std::max(worst_c, std::abs(C[i] / C[i - 1] - 1.0));
    os << "m=" << m << " limit " << format_measured(f.limit, f.uncertainty) << " C=";
    for (std::size_t i = 0; i < C.size(); ++i) os << (i ? "," : "") << fmt(C[i]);
    os << "; ";
  }
  r.measured = worst;
  r.target = 0.0;
  r.tolerance = 0.005;
  r.pass = worst <= 0.005 && worst_c <= 0.2;
  os << "max |C_j+1/C_j - 1| " << fmt(worst_c) << " (tol 0.2)";
  r.detail = os.str();
}

void c4(const VerifyOptions& opt, CriterionResult& r) {
  const MassSeries& s = schwarzschild_series(opt, 1.0);
  double min_ratio = kInf, worst_margin = kInf;
  std::vector<Measured> diff;
  for (const auto& rec : s.records) {
    const double v = rec.v_radius.value, c = rec.capacity.value, d = v - c;
    const double bound = d * d * (v + 2.0 * c) / (3.0 * c * c);
    const double dd = std::abs(rec.cv_deficit_normalized.value - rec.cv_deficit_radius.value);
    const double functional_error = rec.cv_deficit_normalized.error + rec.cv_deficit_radius.error;
    worst_margin = std::min(worst_margin, bound + 1e-12 * (1.0 + functional_error + std::abs(bound)) - dd);
    diff.push_back({dd, functional_error});
  }
  for (std::size_t i = 1; i < diff.size(); ++i) min_ratio = std::min(min_ratio, resolved_ratio(diff[i - 1], diff[i]));
  r.measured = min_ratio;
  r.target = 1.8;
  r.tolerance = 0.0;
  r.pass = min_ratio >= 1.8 && worst_margin >= 0.0;
  r.detail = "min resolved decay ratio per doubling " + fmt(min_ratio) + ", bound margin " + fmt(worst_margin);
}

void c5(const VerifyOptions& opt, CriterionResult& r) {
  double worst = 0.0;
  for (double m : {0.5, 1.0, 2.0}) {
    const MetricModel s = MetricModel::schwarzschild(m);
    for (double k : {2.0, 10.0, 100.0}) {
      const double rr = k * m;
      const Region ball = Region::ball({}, rr);
      const CapacityEstimate cap = capacity_radial(s, rr, opt.quadrature);
      const BrayMiaoCheck b = bray_miao_check(ball, s, cap, opt.quadrature);
      worst = std::max(worst, std::abs(b.margin) / cap.value);
    }
  }
  const MetricModel flat = MetricModel::euclidean(3);
  const Region E = Region::ellipsoid({}, 2.0, 1.0, 1.0);
  const CapacityEstimate cap = capacity_euclidean(flat, E);
  const BrayMiaoCheck b = bray_miao_check(E, flat, cap, opt.quadrature);
  const double budget = b.bound_error + cap.error_estimate;
  const bool strict = b.margin > 0.0 && b.margin > 10.0 * budget;
  r.measured = worst;
  r.target = 0.0;
  r.tolerance = 1e-8;
  r.pass = worst <= 1e-8 && strict;
  r.detail = "spheres max rel |bound - cap| " + fmt(worst) + "; ellipsoid (2,1,1) margin " + fmt(b.margin) +
             " vs 10x budget " + fmt(10.0 * budget);
}

void c6(const VerifyOptions& opt, CriterionResult& r) {
  r.target = 0.0;
  r.tolerance = 0.02;
  if (opt.fast) {
    r.skipped = true;
    r.pass = true;
    r.measured = NAN;
    r.detail = "grid criterion skipped (--fast)";
    return;
  }
  GridOptions g = opt.grid;
  double worst = 0.0;
  std::ostringstream os;
  const MetricModel two = MetricModel::multi_center({{{-1.0, 0.0, 0.0}, 0.5}, {{1.0, 0.0, 0.0}, 0.5}});
  for (double rho : {6.0, 10.0}) {
    const CapacityEstimate e = capacity_grid(two, Region::ball({}, rho), g).estimate;
    const double err = rel(e.value, rho + 0.5);
    worst = std::max(worst, err);
    os << "two-center B_" << rho << " " << format_measured(e.value, e.error_estimate) << " vs " << fmt(rho + 0.5)
       << "; ";
  }
  const MetricModel s = MetricModel::schwarzschild(1.0);
  const Region off = Region::ball({1.0, 0.5, 0.0}, 4.0);
  const CapacityEstimate e = capacity_grid(s, off, g).estimate;
  const double exact = 4.0 + 0.5;
  worst = std::max(worst, rel(e.value, exact));
  os << "off-center Schwarzschild ball " << format_measured(e.value, e.error_estimate) << " vs " << fmt(exact);
  r.measured = worst;
  r.pass = worst <= 0.02;
  r.detail = os.str();
}

void c7(const VerifyOptions& opt, CriterionResult& r) {
  const MetricModel s = MetricModel::schwarzschild(1.0);
  double worst = -kInf, min_ratio = kInf;
  std::vector<Measured> res;
  std::ostringstream os;
  for (double rr : {20.0, 40.0, 80.0}) {
    const Measured b = beta(rr, s, opt.quadrature);
    const double dev = std::abs(b.value / (2.0 * rr) - 1.0);
    worst = std::max(worst, dev * rr / 2.0);
    const ExpansionResidual e = expansion_check(rr, s, opt.quadrature, opt.grid);
    res.push_back({e.residual, e.error});
    os << "r=" << rr << " |beta/2r-1|=" << fmt(dev) << " residual " << format_measured(e.residual, e.error) << "; ";
  }
  for (std::size_t i = 1; i < res.size(); ++i) min_ratio = std::min(min_ratio, resolved_ratio(res[i - 1], res[i]));
  r.measured = min_ratio;
  r.target = 1.8;
  r.tolerance = 0.0;
  r.pass = worst <= 1.0 && min_ratio >= 1.8;
  os << "max |beta/2r-1| r/2 = " << fmt(worst) << " (<= 1); measured is the min resolved residual ratio";
  r.detail = os.str();
}

void c8(const VerifyOptions& opt, CriterionResult& r) {
  const MetricModel s = MetricModel::schwarzschild(2.0, 4);
  double worst_cap = 0.0;
  std::vector<HigherDimRecord> recs;
  for (double rr : {5.0, 10.0, 20.0}) {
    recs.push_back(higher_dim_deficits(rr, s, opt.quadrature));
    worst_cap = std::max(worst_cap, rel(recs.back().capacity.value, rr * rr + 1.0));
  }
  const LimitFit f = higher_dim_limit(recs);
  const double err = rel(f.limit, 2.0);
  r.measured = err;
  r.target = 0.0;
  r.tolerance = 0.01;
  r.pass = err <= 0.01 && worst_cap <= 1e-8;
  r.detail = "limit " + format_measured(f.limit, f.uncertainty) + " vs 2; cap(B_r) max rel err " + fmt(worst_cap) +
             " (tol 1e-8)";
}

void c9(const VerifyOptions& opt, CriterionResult& r) {
  const MetricModel flat = MetricModel::euclidean(3);
  const DeficitOptions d = deficit_options(opt);
  std::vector<double> rho, def;
  double found = NAN;
  for (int j = 0; j < 12; ++j) {
    const double s = 10.0 * std::pow(2.0, j);
    const DeficitRecord rec = deficit_record(Region::ellipsoid({}, 2.0 * s, s, s), flat, d, j, s);
    rho.push_back(s);
    def.push_back(rec.cv_deficit_radius.value);
    if (def.back() < -10.0) {
      found = s;
      if (rho.size() >= 3) break;
    }
  }
  bool negative = true, decreasing = true;
  for (std::size_t i = 0; i < def.size(); ++i) {
    negative = negative && def[i] < 0.0;
    if (i) decreasing = decreasing && def[i] < def[i - 1];
  }
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(rho.size());
  for (std::size_t i = 0; i < rho.size(); ++i) {
    sx += rho[i];
    sy += def[i];
    sxx += rho[i] * rho[i];
    sxy += rho[i] * def[i];
  }
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  double worst = 0.0;
  for (std::size_t i = 1; i < rho.size(); ++i)
    worst = std::max(worst, std::abs((def[i] - def[i - 1]) / (rho[i] - rho[i - 1]) / slope - 1.0));
  r.measured = worst;
  r.target = 0.0;
  r.tolerance = 0.2;
  r.pass = negative && decreasing && std::isfinite(found) && worst <= 0.2;
  r.detail = "slope " + fmt(slope) + ", deficit < -10 at rho=" + fmt(found) + (negative ? "" : ", not all negative") +
             (decreasing ? "" : ", not decreasing") + "; measured is max relative deviation of segment slopes";
}

void c10(const VerifyOptions& opt, CriterionResult& r) {
  const MetricModel s = MetricModel::schwarzschild(1.0);
  ExhaustionSpec spec;
  spec.base = Region::ball({0.5, 0.0, 0.0}, 1.0);
  spec.rho0 = 50.0;
  spec.gamma = 2.0;
  spec.count = 4;
  spec.rule = ScalingRule::ScaleRadiusFixOffset;
  const Exhaustion ex = generate_exhaustion(spec);
  const DeficitOptions d = deficit_options(opt);
  std::vector<DeficitRecord> recs;
  for (std::size_t j = 0; j < ex.regions.size(); ++j)
    recs.push_back(deficit_record(ex.regions[j], s, d, static_cast<int>(j), ex.scales[j]));
  const SpreadCheck c = bounded_spread_check(recs, ex.regions, s, 0.0, 1.0);
  const double err = std::abs(c.limit - 1.0);
  r.measured = c.limit;
  r.target = 1.0;
  r.tolerance = 0.02;
  r.pass = err <= 0.02 && c.limit <= c.bound + c.uncertainty;
  r.detail = "limit " + format_measured(c.limit, c.uncertainty) + " <= m + alpha = " + fmt(c.bound);
}

void c11(const VerifyOptions& opt, CriterionResult& r) {
  double worst_limit = 0.0, worst_rec = 0.0;
  std::ostringstream os;
  for (double m : {0.5, 1.0, 2.0}) {
    const MassSeries& s = schwarzschild_series(opt, m);
    std::vector<double> d;
    for (const auto& rec : s.records) {
      d.push_back(rec.iso_deficit_alt.value);
      worst_rec = std::max(worst_rec, std::abs(rec.iso_deficit_alt.value - (m - m * m / (2.0 * rec.rho))));
    }
    const LimitFit f = mass_extrapolate(s.rho, d, 1.0);
    worst_limit = std::max(worst_limit, rel(f.limit, m));
    os << "m=" << m << " limit " << format_measured(f.limit, f.uncertainty) << "; ";
  }
  r.measured = worst_rec;
  r.target = 0.0;
  r.tolerance = 1e-6;
  r.pass = worst_limit <= 0.005 && worst_rec <= 1e-6;
  os << "max rel limit err " << fmt(worst_limit) << " (tol 0.005); measured is max per-record |iso_def_alt - (m - m^2/2r)|";
  r.detail = os.str();
}

void c12(const VerifyOptions& opt, CriterionResult& r) {
  std::mt19937_64 rng(opt.seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  int violations = 0, checks = 0;
  std::ostringstream os;
  const MetricModel flat = MetricModel::euclidean(3);
  auto tally = [&](bool ok, int& bucket) {
    ++checks;
    if (!ok) {
      ++violations;
      ++bucket;
    }
  };

  int mono = 0;
  for (double m : {0.0, 0.5, 1.0, 2.0}) {
    const MetricModel s = m > 0.0 ? MetricModel::schwarzschild(m) : flat;
    double prev = 0.0;
    for (double rr : {1.5, 2.0, 3.0, 5.0, 8.0, 13.0}) {
      const double c = capacity_radial(s, rr * std::max(m, 1.0), opt.quadrature).value;
      tally(c > prev, mono);
      prev = c;
    }
  }
  for (int i = 0; i < 20; ++i) {
    std::array<double, 3> ax{0.3 + 2.7 * U(rng), 0.3 + 2.7 * U(rng), 0.3 + 2.7 * U(rng)};
    std::sort(ax.begin(), ax.end(), std::greater<>());
    const double grow = 1.0 + U(rng);
    const Region inner = Region::ellipsoid({}, ax[0], ax[1], ax[2]);
    const Region outer = Region::ellipsoid({}, ax[0] * grow, ax[1] * grow, ax[2] * grow);
    const Region ball_in = Region::ball({}, ax[2]);
    const Region ball_out = Region::ball({}, ax[0] * grow);
    const double c0 = capacity_euclidean(flat, ball_in).value, c1 = capacity_euclidean(flat, inner).value,
                 c2 = capacity_euclidean(flat, outer).value, c3 = capacity_euclidean(flat, ball_out).value;
    tally(c0 <= c1 && c1 <= c2 && c2 <= c3, mono);
  }

  int scaling = 0;
  double worst_scale = 0.0;
  for (double m : {0.0, 1.0, 2.0}) {
    const MetricModel s = m > 0.0 ? MetricModel::schwarzschild(m) : flat;
    for (double lambda : {0.25, 2.0, 9.0}) {
      for (double rr : {3.0, 10.0}) {
        const double base = capacity_radial(s, rr, opt.quadrature).value;
        const double scaled = capacity_radial(s.scaled(lambda), rr, opt.quadrature).value;
        const double e = rel(scaled, std::sqrt(lambda) * base);
        worst_scale = std::max(worst_scale, e);
        tally(e <= 1e-10, scaling);
      }
    }
  }

  int sandwich = 0;
  for (double m : {0.5, 1.0, 2.0}) {
    const MetricModel s = MetricModel::schwarzschild(m);
    for (double k : {1.0, 2.0, 10.0}) {
      const double rr = k * m;
      const double L3 = std::pow(s.conformal_factor_radial(rr), 6.0);
      const double c = capacity_radial(s, rr, opt.quadrature).value;
      tally(rr / L3 <= c && c <= rr * L3, sandwich);
    }
  }
  for (double lambda : {0.5, 3.0}) {
    const double rr = 2.0;
    const double L3 = std::pow(std::max(lambda, 1.0 / lambda), 1.5);
    const double c = capacity_radial(flat.scaled(lambda), rr, opt.quadrature).value;
    tally(rr / L3 <= c && c <= rr * L3, sandwich);
  }
  {
    const MetricModel two = MetricModel::multi_center({{{-1.0, 0.0, 0.0}, 0.5}, {{1.0, 0.0, 0.0}, 0.5}});
    for (double rr : {3.0, 6.0}) {
      const Region K = Region::ball({}, rr);
      double umax = 1.0;
      const SphereRule rule = sphere_rule(16, 32);
      for (std::size_t i = 0; i < rule.size(); ++i)
        umax = std::max(umax, two.conformal_factor(unit_direction(rule.theta[i], rule.phi[i]) * rr));
      const double L3 = std::pow(umax, 6.0);
      const double c = capacity_conformal_shift(two, K, opt.grid).value;
      tally(rr / L3 <= c && c <= rr * L3, sandwich);
    }
  }

  int pfs = 0;
  double min_margin = kInf;
  for (int i = 0; i < 50; ++i) {
    const Vec3 c{4.0 * U(rng) - 2.0, 4.0 * U(rng) - 2.0, 4.0 * U(rng) - 2.0};
    Region K = Region::ball(c, 0.1 + 5.0 * U(rng));
    if (i % 5 != 0) {
      std::array<double, 3> ax{0.1 + 5.0 * U(rng), 0.1 + 5.0 * U(rng), 0.1 + 5.0 * U(rng)};
      std::sort(ax.begin(), ax.end(), std::greater<>());
      K = Region::ellipsoid(c, ax[0], ax[1], ax[2]);
    }
    const double cap = capacity_euclidean(flat, K).value;
    const double v = volume_radius(euclidean_volume(K, opt.quadrature));
    min_margin = std::min(min_margin, (cap - v) / v);
    tally(cap - v + 1e-12 * v >= 0.0, pfs);
  }
  if (!opt.fast) {
    for (int i = 0; i < 2; ++i) {
      const double amp = 0.2 + 0.5 * U(rng);
      const Region K = Region::star({}, 1.0, amp, AngularProfile::abs_y20());
      const CapacityEstimate cap = capacity_grid(flat, K, opt.grid).estimate;
      const double v = volume_radius(euclidean_volume(K, opt.quadrature));
      tally(cap.value + cap.error_estimate + 0.02 * cap.value >= v, pfs);
    }
  }

  r.measured = violations;
  r.target = 0.0;
  r.tolerance = 0.0;
  r.pass = violations == 0;
  os << checks << " checks: monotonicity " << mono << ", scaling " << scaling << " (max rel " << fmt(worst_scale)
     << "), sandwich " << sandwich << ", pfs " << pfs << " violations (min relative pfs margin " << fmt(min_margin)
     << ")" << (opt.fast ? "; grid star shapes skipped (--fast)" : "");
  r.detail = os.str();
}

}  // namespace

std::vector<CriterionResult> run_acceptance(const VerifyOptions& opt,
                                            const std::function<void(const CriterionResult&)>& on_result) {
  using Body = void (*)(const VerifyOptions&, CriterionResult&);
  const std::pair<const char*, Body> table[] = {
      {"euclidean-capacity", c1},  {"schwarzschild-closed-form", c2}, {"mass-recovery", c3},
      {"form-equivalence", c4},    {"bray-miao-equality", c5},        {"harmonic-shift", c6},
      {"beta-consistency", c7},    {"higher-dimensions", c8},         {"asymmetric-divergence", c9},
      {"bounded-spread", c10},     {"isoperimetric-cross-check", c11}, {"invariant-suite", c12},
  };
  std::vector<CriterionResult> out;
  for (int i = 0; i < 12; ++i) {
    const int id = i + 1;
    if (!opt.only.empty() && std::find(opt.only.begin(), opt.only.end(), id) == opt.only.end()) continue;
    out.push_back(guarded(id, table[i].first, [&](CriterionResult& r) { table[i].second(opt, r); }));
    if (on_result) on_result(out.back());
  }
  return out;
}

std::string format_criterion(const CriterionResult& r) {
  std::ostringstream os;
  os << (r.skipped ? "[SKIP] " : r.pass ? "[PASS] " : "[FAIL] ") << r.id << ' ' << r.name
     << ": measured=" << format_number(r.measured) << " target=" << format_number(r.target)
     << " tol=" << format_number(r.tolerance);
  if (!r.detail.empty()) os << " (" << r.detail << ")";
  return os.str();
}

}  // namespace capmass
