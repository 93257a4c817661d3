#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "capmass/capacity.hpp"
#include "capmass/functionals.hpp"
#include "capmass/manifold.hpp"
#include "capmass/regions.hpp"

namespace capmass {

struct DeficitOptions {
  QuadratureOptions quadrature;
  GridOptions grid;
  FraenkelOptions fraenkel;
  std::optional<CapacityMethod> method;   // automatic when empty
  bool asymmetry = true;
  double slack_quadrature = 1e-6;          // absolute
  double slack_grid = 0.02;                // relative to the capacity
};

// Value with its propagated error. NaN value when the field could not be computed.
struct Figure {
  double value = 0.0;
  double error = 0.0;
  bool ok() const;
};

struct DeficitRecord {
  int j = 0;
  double rho = 0.0;
  Figure volume, area;
  Figure v_radius, a_radius;
  CapacityEstimate capacity;
  bool capacity_ok = false;
  Figure cv_deficit_radius;        // v - c
  Figure cv_deficit_normalized;    // (|K| - 4 pi c^3 / 3) / (4 pi c^2)
  Figure iso_deficit;              // (2/|dK|) (|K| - |dK|^{3/2} / (6 sqrt pi))
  Figure iso_deficit_alt;          // 2 (v - a)
  std::optional<Figure> bray_miao_bound;
  std::optional<Figure> asymmetry;
  std::map<std::string, std::string> field_errors;

  /// Error budget for checks touching the capacity: constituent errors plus slack.
  double slack = 0.0;
};

/// All per-region deficits. Backend failures are recorded in field_errors.
DeficitRecord deficit_record(const Region& K, const MetricModel& model, const DeficitOptions& opt = {}, int j = 0,
                             double rho = 0.0);

struct BrayMiaoCheck {
  double bound = 0.0;
  double bound_error = 0.0;
  double capacity = 0.0;
  double margin = 0.0;   // bound - capacity
  bool ok = false;
};

/// sqrt(|dK|/16 pi) (1 + sqrt(W/16 pi)) against the capacity. n = 3.
Figure bray_miao_bound(const Region& K, const MetricModel& model, const QuadratureOptions& q = {});
BrayMiaoCheck bray_miao_check(const Region& K, const MetricModel& model, const CapacityEstimate& cap,
                              const QuadratureOptions& q = {}, double slack = 1e-6);

struct LimitFit {
  double limit = 0.0;
  double slope = 0.0;         // coefficient of rho^{-p}
  double log_slope = 0.0;     // coefficient of rho^{-p} ln rho
  double residual = 0.0;      // rms misfit
  double uncertainty = 0.0;   // residual plus the shift of the limit when the first point is dropped
  double exponent = 1.0;
  bool tail_warning = false;  // last three points not within the residual of the model
  bool in_tail_range = false; // limit within [min, max] of the last three values +- residual
  bool log_term = false;
};

/// Least-squares fit d = L + a rho^{-p}, or d = L + (a + b ln rho) rho^{-p}
/// with `log_term`.
LimitFit mass_extrapolate(const std::vector<double>& rho, const std::vector<double>& d, double p = 1.0,
                          bool log_term = false);
LimitFit mass_extrapolate(const std::vector<DeficitRecord>& records, double p = 1.0);

/// cap(B_r) - [r + beta(r)/(2r) - m/2] on the coordinate ball.
struct ExpansionResidual {
  double residual = 0.0;
  double error = 0.0;
  double capacity = 0.0;
  double beta_term = 0.0;
};
ExpansionResidual expansion_check(double r, const MetricModel& model, const QuadratureOptions& q = {},
                                  const GridOptions& grid = {});

struct SpreadCheck {
  double limit = 0.0;
  double uncertainty = 0.0;
  double alpha = 0.0;   // max radial spread over the family
  double bound = 0.0;   // m + alpha
  double margin = 0.0;  // bound + tol - limit
  bool ok = false;
};
SpreadCheck bounded_spread_check(const std::vector<DeficitRecord>& records, const std::vector<Region>& regions,
                                 const MetricModel& model, double tolerance, double p = 1.0);

struct IsocapCheck {
  bool skipped = false;
  double constant = 0.0;     // (cap_0 / v - 1) / A^4
  double asymmetry = 0.0;
  double capacity = 0.0;
  double volume_radius = 0.0;
  bool ok = false;
};
IsocapCheck quantitative_isocap_check(const Region& K, const DeficitOptions& opt = {}, double asymmetry_floor = 1e-3);

struct HigherDimRecord {
  int n = 3;
  double r = 0.0;
  Figure volume, area;
  CapacityEstimate capacity;
  Figure cv_deficit;    // 2(n-2)/((n-1) w c^{2/(n-2)}) (|K| - beta_n c^{n/(n-2)})
  Figure iso_deficit;   // (2/w) (w/|dK|)^{2/(n-1)} (|K| - |dK|^{n/(n-1)} / (n w^{1/(n-1)}))
};
HigherDimRecord higher_dim_deficits(double r, const MetricModel& model, const QuadratureOptions& q = {});

/// Extrapolated n-dimensional cv deficit over centred balls. The correction
/// decays like r^{2-n}, with an extra logarithm for n = 4.
LimitFit higher_dim_limit(const std::vector<HigherDimRecord>& records);

struct NamedCheck {
  std::string name;
  bool ok = false;
  double margin = 0.0;
  std::string detail;
};

struct MassReport {
  std::string description;
  std::string model_label;
  std::vector<DeficitRecord> records;
  std::map<std::string, LimitFit> limits;
  std::optional<double> adm_reference;
  double max_radial_spread = 0.0;
  bool diverges = false;
  std::vector<NamedCheck> checks;
  bool all_ok() const;
};

struct ReportOptions {
  DeficitOptions deficit;
  double exponent = 1.0;
  std::vector<std::string> checks;   // empty selects every applicable check
};

MassReport build_mass_report(const MetricModel& model, const ExhaustionSpec& spec, const ReportOptions& opt = {});

/// Names accepted in ReportOptions::checks.
const std::vector<std::string>& known_checks();

}  // namespace capmass
