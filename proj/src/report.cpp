#include "capmass/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "capmass/error.hpp"

#ifndef CAPMASS_VERSION
#define CAPMASS_VERSION "0.0.0"
#endif

namespace capmass {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

std::string format_number(double x) {
  if (!std::isfinite(x)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", x);
  return buf;
}

std::string format_error(double e) {
  if (!std::isfinite(e)) return "nan";
  if (e == 0.0) return "0";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.0e", std::abs(e));
  std::string s = buf;
  auto pos = s.find('e');
  std::string mant = s.substr(0, pos);
  std::string ex = s.substr(pos + 1);
  bool neg = !ex.empty() && ex[0] == '-';
  if (!ex.empty() && (ex[0] == '-' || ex[0] == '+')) ex.erase(0, 1);
  while (ex.size() > 1 && ex[0] == '0') ex.erase(0, 1);
  return mant + "e" + (neg ? "-" : "") + ex;
}

std::string format_measured(double value, double error, int decimals) {
  char buf[64];
  if (std::isfinite(value))
    std::snprintf(buf, sizeof buf, "%.*f", decimals, value);
  else
    std::snprintf(buf, sizeof buf, "nan");
  return std::string(buf) + " ± " + format_error(error);
}

const char* report_csv_header() {
  return "j,rho,v_radius,a_radius,capacity,cap_err,cv_def_radius,cv_def_norm,iso_def,iso_def_alt,bm_bound,asymmetry";
}

namespace {

const char* kErrorsHeader =
    "j,rho,v_radius_err,a_radius_err,cap_err,cv_def_radius_err,cv_def_norm_err,iso_def_err,iso_def_alt_err,"
    "bm_bound_err,asymmetry_err";

double capacity_value(const DeficitRecord& r) { return r.capacity_ok ? r.capacity.value : NAN; }
double capacity_error(const DeficitRecord& r) { return r.capacity_ok ? r.capacity.error_estimate : NAN; }

ojson number(double x) { return std::isfinite(x) ? ojson(x) : ojson(nullptr); }

ojson figure(const Figure& f) { return ojson{{"value", number(f.value)}, {"error", number(f.error)}}; }

ojson figure(const std::optional<Figure>& f) { return f ? figure(*f) : ojson(nullptr); }

std::string csv_body(const MassReport& rep) {
  std::ostringstream os;
  os << report_csv_header() << "\n";
  for (const auto& r : rep.records) {
    os << r.j << ',' << format_number(r.rho) << ',' << format_number(r.v_radius.value) << ','
       << format_number(r.a_radius.value) << ',' << format_number(capacity_value(r)) << ','
       << format_number(capacity_error(r)) << ',' << format_number(r.cv_deficit_radius.value) << ','
       << format_number(r.cv_deficit_normalized.value) << ',' << format_number(r.iso_deficit.value) << ','
       << format_number(r.iso_deficit_alt.value) << ','
       << format_number(r.bray_miao_bound ? r.bray_miao_bound->value : NAN) << ','
       << format_number(r.asymmetry ? r.asymmetry->value : NAN) << "\n";
  }
  return os.str();
}

std::string errors_body(const MassReport& rep) {
  std::ostringstream os;
  os << kErrorsHeader << "\n";
  for (const auto& r : rep.records) {
    os << r.j << ',' << format_number(r.rho) << ',' << format_number(r.v_radius.error) << ','
       << format_number(r.a_radius.error) << ',' << format_number(capacity_error(r)) << ','
       << format_number(r.cv_deficit_radius.error) << ',' << format_number(r.cv_deficit_normalized.error) << ','
       << format_number(r.iso_deficit.error) << ',' << format_number(r.iso_deficit_alt.error) << ','
       << format_number(r.bray_miao_bound ? r.bray_miao_bound->error : NAN) << ','
       << format_number(r.asymmetry ? r.asymmetry->error : NAN) << "\n";
  }
  return os.str();
}

std::string dat_body(const char* xlabel, const char* ylabel, const std::vector<std::pair<double, Figure>>& pts) {
  std::ostringstream os;
  os << "# " << xlabel << ' ' << ylabel << ' ' << ylabel << "_err\n";
  for (const auto& [x, f] : pts)
    os << format_number(x) << ' ' << format_number(f.value) << ' ' << format_number(f.error) << "\n";
  return os.str();
}

}  // namespace

void write_text_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorCode::Io, "cannot write '" + path.string() + "'");
  out << text;
  if (!out) fail(ErrorCode::Io, "write failed for '" + path.string() + "'");
}

std::string report_json(const MassReport& rep, const std::string& config_canonical) {
  ojson j;
  j["version"] = CAPMASS_VERSION;
  j["description"] = rep.description;
  j["model"] = rep.model_label;
  ojson records = ojson::array();
  for (const auto& r : rep.records) {
    ojson e;
    e["j"] = r.j;
    e["rho"] = number(r.rho);
    e["volume"] = figure(r.volume);
    e["area"] = figure(r.area);
    e["v_radius"] = figure(r.v_radius);
    e["a_radius"] = figure(r.a_radius);
    if (r.capacity_ok) {
      ojson diag = ojson::object();
      for (const auto& [k, v] : r.capacity.diagnostics) diag[k] = number(v);
      e["capacity"] = {{"value", number(r.capacity.value)},
                       {"error", number(r.capacity.error_estimate)},
                       {"method", to_string(r.capacity.method)},
                       {"diagnostics", diag}};
    } else {
      e["capacity"] = nullptr;
    }
    e["cv_def_radius"] = figure(r.cv_deficit_radius);
    e["cv_def_norm"] = figure(r.cv_deficit_normalized);
    e["iso_def"] = figure(r.iso_deficit);
    e["iso_def_alt"] = figure(r.iso_deficit_alt);
    e["bm_bound"] = figure(r.bray_miao_bound);
    e["asymmetry"] = figure(r.asymmetry);
    e["slack"] = number(r.slack);
    ojson errs = ojson::object();
    for (const auto& [k, v] : r.field_errors) errs[k] = v;
    e["field_errors"] = errs;
    records.push_back(e);
  }
  j["records"] = records;
  ojson limits = ojson::object();
  for (const auto& [name, f] : rep.limits) {
    limits[name] = {{"limit", number(f.limit)},
                    {"uncertainty", number(f.uncertainty)},
                    {"residual", number(f.residual)},
                    {"slope", number(f.slope)},
                    {"log_slope", number(f.log_slope)},
                    {"exponent", number(f.exponent)},
                    {"log_term", f.log_term},
                    {"tail_warning", f.tail_warning},
                    {"in_tail_range", f.in_tail_range}};
  }
  j["limits"] = limits;
  j["limits_note"] = "extrapolated over this exhaustion only";
  j["adm_reference"] = rep.adm_reference ? number(*rep.adm_reference) : ojson(nullptr);
  j["max_radial_spread"] = number(rep.max_radial_spread);
  j["diverges"] = rep.diverges;
  ojson checks = ojson::object();
  for (const auto& c : rep.checks)
    checks[c.name] = {{"ok", c.ok}, {"margin", number(c.margin)}, {"detail", c.detail}};
  j["checks"] = checks;
  j["all_ok"] = rep.all_ok();
  j["config"] = config_canonical;
  return j.dump(2) + "\n";
}

void write_report_files(const MassReport& rep, const fs::path& dir, const std::string& name,
                        const std::string& config_canonical) {
  write_text_file(dir / (name + ".csv"), csv_body(rep));
  write_text_file(dir / (name + "_errors.csv"), errors_body(rep));
  write_text_file(dir / (name + ".json"), report_json(rep, config_canonical));

  const std::pair<const char*, Figure DeficitRecord::*> series[] = {
      {"cv_def_radius", &DeficitRecord::cv_deficit_radius},
      {"cv_def_norm", &DeficitRecord::cv_deficit_normalized},
      {"iso_def", &DeficitRecord::iso_deficit},
      {"iso_def_alt", &DeficitRecord::iso_deficit_alt},
  };
  for (const auto& [label, member] : series) {
    std::vector<std::pair<double, Figure>> pts;
    for (const auto& r : rep.records) pts.emplace_back(r.rho, r.*member);
    write_text_file(dir / (name + "_" + label + ".dat"), dat_body("rho", label, pts));
  }
  std::vector<std::pair<double, Figure>> pts;
  for (const auto& r : rep.records)
    if (r.area.ok() && r.area.value > 0.0) pts.emplace_back(1.0 / std::sqrt(r.area.value), r.iso_deficit);
  write_text_file(dir / (name + "_iso_def_vs_inv_sqrt_area.dat"), dat_body("inv_sqrt_area", "iso_def", pts));
}

fs::path allocate_run_dir(const fs::path& out_dir) {
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create '" + out_dir.string() + "': " + ec.message());
  for (int i = 1; i < 100000; ++i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "run-%03d", i);
    fs::path p = out_dir / buf;
    if (fs::create_directory(p, ec)) return p;
    if (ec) fail(ErrorCode::Io, "cannot create '" + p.string() + "': " + ec.message());
  }
  fail(ErrorCode::Io, "no free run directory under '" + out_dir.string() + "'");
}

void append_manifest(const fs::path& out_dir, const fs::path& run_dir, const std::string& command,
                     std::uint64_t config_hash, int exit_code) {
  std::ofstream out(out_dir / "manifest.txt", std::ios::app);
  if (!out) fail(ErrorCode::Io, "cannot append to manifest in '" + out_dir.string() + "'");
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config_hash));
  out << run_dir.filename().string() << " command=" << command << " config_hash=" << hash
      << " version=" << CAPMASS_VERSION << " exit=" << exit_code << "\n";
}

}  // namespace capmass
