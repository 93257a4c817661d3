#include "capmass/scenario.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace capmass {

namespace {

std::string trim(std::string s) {
  auto ws = [](unsigned char c) { return std::isspace(c) != 0; };
  while (!s.empty() && ws(s.back())) s.pop_back();
  std::size_t i = 0;
  while (i < s.size() && ws(s[i])) ++i;
  return s.substr(i);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep)) {
    cur = trim(cur);
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

const ConfigKey* find_key(const std::string& name) {
  for (const auto& k : Config::keys())
    if (k.name == name) return &k;
  return nullptr;
}

double to_double(const std::string& key, const std::string& v) {
  double x = 0.0;
  auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end || !std::isfinite(x)) fail(ErrorCode::Config, key + ": not a number: '" + v + "'");
  return x;
}

long long to_int(const std::string& key, const std::string& v) {
  long long x = 0;
  auto* end = v.data() + v.size();
  auto [p, ec] = std::from_chars(v.data(), end, x);
  if (ec != std::errc() || p != end) fail(ErrorCode::Config, key + ": not an integer: '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  fail(ErrorCode::Config, key + ": not a boolean: '" + v + "'");
}

std::vector<double> to_doubles(const std::string& key, const std::string& v) {
  std::vector<double> out;
  for (const auto& item : split(v, ',')) out.push_back(to_double(key, item));
  return out;
}

void check_range(const std::string& key, double x, double lo, double hi) {
  if (!(x >= lo && x <= hi)) {
    std::ostringstream os;
    os << key << " = " << x << " outside [" << lo << ", " << hi << "]";
    fail(ErrorCode::Config, os.str());
  }
}

void check_positive(const std::string& key, double x) {
  if (!(x > 0.0)) fail(ErrorCode::Config, key + " must be positive");
}

}  // namespace

const std::vector<ConfigKey>& Config::keys() {
  static const std::vector<ConfigKey> k = {
      {"metric.kind", "euclidean", "euclidean | schwarzschild | multicenter"},
      {"metric.mass", "0", "Schwarzschild mass"},
      {"metric.dimension", "3", "ambient dimension (>3 only for radial models)"},
      {"metric.centers", "", "multicenter pole positions, 'x,y,z; x,y,z'"},
      {"metric.masses", "", "multicenter pole masses, comma separated"},
      {"metric.scale", "1", "constant factor lambda in front of the metric"},
      {"region.shape", "ball", "ball | ellipsoid | star | voxel"},
      {"region.params", "1", "ball: r[,cx,cy,cz]  ellipsoid: a,b,c[,cx,cy,cz]  star: rho,alpha[,cx,cy,cz]  voxel: r,h[,cx,cy,cz]"},
      {"region.harmonics", "2:0:1", "star profile terms 'l:m:coef; ...'"},
      {"region.profile", "abs", "abs (|f|/max|f|) | shift ((f-min)/(max-min))"},
      {"exhaustion.rho0", "10", "first scale"},
      {"exhaustion.gamma", "2", "scale ratio"},
      {"exhaustion.count", "4", "number of regions"},
      {"exhaustion.rule", "scale-all", "scale-all | scale-radius-fix-offset | fix-shape-fix-asymmetry"},
      {"rng.seed", "20240601", "seed for every stochastic estimate"},
      {"quadrature.angular_theta", "64", "Gauss-Legendre nodes in cos(theta)"},
      {"quadrature.angular_phi", "128", "uniform nodes in phi"},
      {"quadrature.radial_points", "32", "Gauss-Legendre nodes per radial panel"},
      {"quadrature.tail_radius_factor", "1000", "start of the inverted radial tail"},
      {"solver.grid_n", "96", "cells per side"},
      {"solver.outer_radius_factor", "4", "box half-width over the region radius"},
      {"solver.outer_bc", "robin", "robin | dirichlet"},
      {"solver.tol", "1e-10", "relative CG residual"},
      {"solver.max_iter", "20000", "CG iteration cap"},
      {"solver.extrapolate", "true", "second solve on a larger box"},
      {"capacity.backends", "auto", "auto | all | comma list of backends"},
      {"extrapolation.exponent", "1", "decay exponent p of the deficit correction"},
      {"mass.slack_quadrature", "1e-6", "absolute slack of quadrature checks"},
      {"mass.slack_grid", "0.02", "relative slack of grid checks"},
      {"fraenkel.samples", "48", "stratified samples per coordinate"},
      {"fraenkel.tolerance", "1e-3", "final search step over the ball radius"},
      {"deficit.asymmetry", "true", "compute the Fraenkel asymmetry"},
      {"checks", "", "comma list of checks; empty runs every applicable check"},
      {"output.dir", "capmass-out", "directory holding run-NNN folders"},
      {"output.name", "report", "basename of report files"},
      {"output.field", "none", "none | csv | binary potential export for grid runs"},
      {"sweep.key", "", "key varied by the sweep command"},
      {"sweep.values", "", "comma-separated values of sweep.key"},
      {"sweep.command", "convergence", "capacity | deficit | convergence"},
  };
  return k;
}

void Config::set(const std::string& key, const std::string& value) {
  const std::string k = trim(key);
  if (!find_key(k)) fail(ErrorCode::Config, "unknown key '" + k + "'");
  values_[k] = trim(value);
}

void Config::set_assignment(const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos) fail(ErrorCode::Config, "expected key=value, got '" + assignment + "'");
  set(assignment.substr(0, eq), assignment.substr(eq + 1));
}

void Config::load_string(const std::string& text, const std::string& source) {
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos)
      fail(ErrorCode::Config, source + ":" + std::to_string(lineno) + ": expected key = value");
    try {
      set(line.substr(0, eq), line.substr(eq + 1));
    } catch (const Error& e) {
      fail(ErrorCode::Config, source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

void Config::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::Config, "cannot read config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  load_string(ss.str(), path);
}

std::string Config::get(const std::string& key) const {
  auto it = values_.find(key);
  if (it != values_.end()) return it->second;
  const ConfigKey* k = find_key(key);
  if (!k) fail(ErrorCode::Config, "unknown key '" + key + "'");
  return k->default_value;
}

std::string Config::canonical() const {
  std::vector<std::string> names;
  for (const auto& k : keys()) names.push_back(k.name);
  std::sort(names.begin(), names.end());
  std::string out;
  for (const auto& n : names) out += n + "=" + get(n) + "\n";
  return out;
}

std::uint64_t fnv1a64(const std::string& text) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t Config::hash() const { return fnv1a64(canonical()); }

Scenario parse_scenario(const Config& cfg) {
  Scenario s;
  s.metric_kind = cfg.get("metric.kind");
  if (s.metric_kind != "euclidean" && s.metric_kind != "schwarzschild" && s.metric_kind != "multicenter")
    fail(ErrorCode::Config, "metric.kind: unknown kind '" + s.metric_kind + "'");
  s.metric_mass = to_double("metric.mass", cfg.get("metric.mass"));
  check_range("metric.mass", s.metric_mass, 0.0, 1e6);
  s.dimension = static_cast<int>(to_int("metric.dimension", cfg.get("metric.dimension")));
  check_range("metric.dimension", s.dimension, 3, 8);
  s.metric_scale = to_double("metric.scale", cfg.get("metric.scale"));
  check_positive("metric.scale", s.metric_scale);

  if (s.metric_kind == "multicenter") {
    auto centers = split(cfg.get("metric.centers"), ';');
    auto masses = to_doubles("metric.masses", cfg.get("metric.masses"));
    if (centers.empty()) fail(ErrorCode::Config, "metric.centers: multicenter needs at least one pole");
    if (centers.size() != masses.size())
      fail(ErrorCode::Config, "metric.centers and metric.masses differ in length");
    if (s.dimension != 3) fail(ErrorCode::Config, "metric.dimension: multicenter models are three-dimensional");
    for (std::size_t i = 0; i < centers.size(); ++i) {
      auto xyz = to_doubles("metric.centers", centers[i]);
      if (xyz.size() != 3) fail(ErrorCode::Config, "metric.centers: expected x,y,z in '" + centers[i] + "'");
      if (!(masses[i] > 0.0)) fail(ErrorCode::Config, "metric.masses must be positive");
      s.poles.push_back({{xyz[0], xyz[1], xyz[2]}, masses[i]});
    }
  }

  s.region_shape = cfg.get("region.shape");
  s.region_params = to_doubles("region.params", cfg.get("region.params"));
  const auto& p = s.region_params;
  auto need = [&](std::size_t base) {
    if (p.size() != base && p.size() != base + 3)
      fail(ErrorCode::Config, "region.params: " + s.region_shape + " takes " + std::to_string(base) + " or " +
                                  std::to_string(base + 3) + " numbers");
  };
  if (s.region_shape == "ball") {
    need(1);
    check_positive("region.params radius", p[0]);
  } else if (s.region_shape == "ellipsoid") {
    need(3);
    if (!(p[0] >= p[1] && p[1] >= p[2] && p[2] > 0.0))
      fail(ErrorCode::Config, "region.params: ellipsoid semi-axes need a >= b >= c > 0");
  } else if (s.region_shape == "star") {
    need(2);
    check_positive("region.params base radius", p[0]);
    if (p[1] < 0.0) fail(ErrorCode::Config, "region.params: star amplitude must be >= 0");
  } else if (s.region_shape == "voxel") {
    need(2);
    check_positive("region.params radius", p[0]);
    check_positive("region.params spacing", p[1]);
    if (p[0] / p[1] > 200.0) fail(ErrorCode::Config, "region.params: voxel grid too fine (r/h > 200)");
  } else {
    fail(ErrorCode::Config, "region.shape: unknown shape '" + s.region_shape + "'");
  }
  for (const auto& term : split(cfg.get("region.harmonics"), ';')) {
    auto parts = split(term, ':');
    if (parts.size() != 3) fail(ErrorCode::Config, "region.harmonics: expected l:m:coef in '" + term + "'");
    HarmonicTerm t;
    t.l = static_cast<int>(to_int("region.harmonics", parts[0]));
    t.m = static_cast<int>(to_int("region.harmonics", parts[1]));
    t.coefficient = to_double("region.harmonics", parts[2]);
    if (t.l < 0 || t.l > 32 || std::abs(t.m) > t.l)
      fail(ErrorCode::Config, "region.harmonics: need 0 <= |m| <= l <= 32 in '" + term + "'");
    s.harmonics.push_back(t);
  }
  const std::string profile = cfg.get("region.profile");
  if (profile != "abs" && profile != "shift") fail(ErrorCode::Config, "region.profile: expected abs or shift");
  s.profile_abs = profile == "abs";

  s.exhaustion.rho0 = to_double("exhaustion.rho0", cfg.get("exhaustion.rho0"));
  check_positive("exhaustion.rho0", s.exhaustion.rho0);
  s.exhaustion.gamma = to_double("exhaustion.gamma", cfg.get("exhaustion.gamma"));
  if (!(s.exhaustion.gamma > 1.0)) fail(ErrorCode::Config, "exhaustion.gamma must exceed 1");
  s.exhaustion.count = static_cast<int>(to_int("exhaustion.count", cfg.get("exhaustion.count")));
  check_range("exhaustion.count", s.exhaustion.count, 3, 64);
  try {
    s.exhaustion.rule = parse_scaling_rule(cfg.get("exhaustion.rule"));
  } catch (const Error& e) {
    fail(ErrorCode::Config, std::string("exhaustion.rule: ") + e.what());
  }

  const long long seed = to_int("rng.seed", cfg.get("rng.seed"));
  if (seed < 0) fail(ErrorCode::Config, "rng.seed must be non-negative");
  s.seed = static_cast<std::uint64_t>(seed);

  auto& q = s.deficit.quadrature;
  q.angular_theta = static_cast<int>(to_int("quadrature.angular_theta", cfg.get("quadrature.angular_theta")));
  q.angular_phi = static_cast<int>(to_int("quadrature.angular_phi", cfg.get("quadrature.angular_phi")));
  q.radial_points = static_cast<int>(to_int("quadrature.radial_points", cfg.get("quadrature.radial_points")));
  q.tail_radius_factor = to_double("quadrature.tail_radius_factor", cfg.get("quadrature.tail_radius_factor"));
  check_range("quadrature.angular_theta", q.angular_theta, 2, 1024);
  check_range("quadrature.angular_phi", q.angular_phi, 2, 2048);
  check_range("quadrature.radial_points", q.radial_points, 2, 256);
  check_range("quadrature.tail_radius_factor", q.tail_radius_factor, 1.0, 1e12);

  auto& g = s.deficit.grid;
  g.n = static_cast<int>(to_int("solver.grid_n", cfg.get("solver.grid_n")));
  check_range("solver.grid_n", g.n, 16, 512);
  g.outer_radius_factor = to_double("solver.outer_radius_factor", cfg.get("solver.outer_radius_factor"));
  check_range("solver.outer_radius_factor", g.outer_radius_factor, 1.5, 64.0);
  try {
    g.outer_bc = parse_outer_boundary(cfg.get("solver.outer_bc"));
  } catch (const Error& e) {
    fail(ErrorCode::Config, std::string("solver.outer_bc: ") + e.what());
  }
  g.tol = to_double("solver.tol", cfg.get("solver.tol"));
  check_range("solver.tol", g.tol, 1e-15, 1e-2);
  g.max_iter = static_cast<int>(to_int("solver.max_iter", cfg.get("solver.max_iter")));
  check_range("solver.max_iter", g.max_iter, 1, 1e7);
  g.extrapolate = to_bool("solver.extrapolate", cfg.get("solver.extrapolate"));

  s.backends = cfg.get("capacity.backends");
  if (s.backends != "auto" && s.backends != "all") {
    for (const auto& b : split(s.backends, ',')) {
      try {
        parse_capacity_method(b);
      } catch (const Error& e) {
        fail(ErrorCode::Config, std::string("capacity.backends: ") + e.what());
      }
    }
  }
  s.exponent = to_double("extrapolation.exponent", cfg.get("extrapolation.exponent"));
  check_range("extrapolation.exponent", s.exponent, 0.1, 10.0);
  s.deficit.slack_quadrature = to_double("mass.slack_quadrature", cfg.get("mass.slack_quadrature"));
  s.deficit.slack_grid = to_double("mass.slack_grid", cfg.get("mass.slack_grid"));
  check_range("mass.slack_quadrature", s.deficit.slack_quadrature, 0.0, 1.0);
  check_range("mass.slack_grid", s.deficit.slack_grid, 0.0, 1.0);
  s.deficit.fraenkel.seed = s.seed;
  s.deficit.fraenkel.strata = static_cast<int>(to_int("fraenkel.samples", cfg.get("fraenkel.samples")));
  check_range("fraenkel.samples", s.deficit.fraenkel.strata, 4, 512);
  s.deficit.fraenkel.tolerance = to_double("fraenkel.tolerance", cfg.get("fraenkel.tolerance"));
  check_range("fraenkel.tolerance", s.deficit.fraenkel.tolerance, 1e-8, 0.5);
  s.deficit.asymmetry = to_bool("deficit.asymmetry", cfg.get("deficit.asymmetry"));

  s.checks = split(cfg.get("checks"), ',');
  const auto& known = known_checks();
  for (const auto& c : s.checks)
    if (std::find(known.begin(), known.end(), c) == known.end())
      fail(ErrorCode::Config, "checks: unknown check '" + c + "'");

  s.output_dir = cfg.get("output.dir");
  s.output_name = cfg.get("output.name");
  if (s.output_dir.empty() || s.output_name.empty()) fail(ErrorCode::Config, "output.dir and output.name must be set");
  if (s.output_name.find('/') != std::string::npos) fail(ErrorCode::Config, "output.name must not contain '/'");
  s.output_field = cfg.get("output.field");
  if (s.output_field != "none" && s.output_field != "csv" && s.output_field != "binary")
    fail(ErrorCode::Config, "output.field: expected none, csv or binary");

  s.sweep_key = cfg.get("sweep.key");
  s.sweep_values = split(cfg.get("sweep.values"), ',');
  s.sweep_command = cfg.get("sweep.command");
  if (s.sweep_command != "capacity" && s.sweep_command != "deficit" && s.sweep_command != "convergence")
    fail(ErrorCode::Config, "sweep.command: expected capacity, deficit or convergence");
  if (!s.sweep_key.empty()) {
    if (!find_key(s.sweep_key)) fail(ErrorCode::Config, "sweep.key: unknown key '" + s.sweep_key + "'");
    if (s.sweep_key.rfind("sweep.", 0) == 0 || s.sweep_key.rfind("output.", 0) == 0)
      fail(ErrorCode::Config, "sweep.key: cannot sweep '" + s.sweep_key + "'");
  }
  return s;
}

MetricModel build_metric(const Scenario& s) {
  MetricModel m = MetricModel::euclidean(s.dimension);
  if (s.metric_kind == "schwarzschild")
    m = MetricModel::schwarzschild(s.metric_mass, s.dimension);
  else if (s.metric_kind == "multicenter")
    m = MetricModel::multi_center(s.poles);
  if (s.metric_scale != 1.0) m = m.scaled(s.metric_scale);
  return m;
}

Region build_region(const Scenario& s) {
  const auto& p = s.region_params;
  auto center_at = [&](std::size_t base) {
    return p.size() == base + 3 ? Vec3{p[base], p[base + 1], p[base + 2]} : Vec3{};
  };
  if (s.region_shape == "ball") return Region::ball(center_at(1), p[0]);
  if (s.region_shape == "ellipsoid") return Region::ellipsoid(center_at(3), p[0], p[1], p[2]);
  if (s.region_shape == "star") {
    if (s.harmonics.empty()) fail(ErrorCode::Config, "region.harmonics: star shapes need at least one term");
    return Region::star(center_at(2), p[0], p[1], AngularProfile(s.harmonics, s.profile_abs));
  }
  return Region::voxelize(Region::ball(center_at(2), p[0]), p[1]);
}

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotConverged:
    case ErrorCode::Internal:
      return kExitSolver;
    default:
      return kExitConfig;
  }
}

}  // namespace capmass
