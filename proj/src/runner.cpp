#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

#include "capmass/report.hpp"
#include "capmass/scenario.hpp"
#include "capmass/verify.hpp"

namespace capmass {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

struct Outcome {
  int exit = kExitOk;
  double result = NAN;
  double error = NAN;
};

ojson number(double x) { return std::isfinite(x) ? ojson(x) : ojson(nullptr); }

std::string record_line(const DeficitRecord& r) {
  std::ostringstream os;
  os << "j=" << r.j << " rho=" << format_number(r.rho);
  if (r.capacity_ok)
    os << " capacity=" << format_measured(r.capacity.value, r.capacity.error_estimate) << " ("
       << to_string(r.capacity.method) << ")";
  else
    os << " capacity=failed";
  os << " cv_def_radius=" << format_measured(r.cv_deficit_radius.value, r.cv_deficit_radius.error)
     << " iso_def=" << format_measured(r.iso_deficit.value, r.iso_deficit.error);
  return os.str();
}

std::vector<CapacityMethod> requested_backends(const Scenario& s, const MetricModel& model, const Region& K,
                                               const RunFlags& flags) {
  std::vector<CapacityMethod> out;
  if (s.backends == "auto") {
    out.push_back(select_capacity_method(model, K));
  } else if (s.backends == "all") {
    for (CapacityMethod m : {CapacityMethod::RadialQuadrature, CapacityMethod::EuclideanClosedForm,
                             CapacityMethod::ConformalShift, CapacityMethod::GridVariational}) {
      if (m == CapacityMethod::GridVariational && flags.fast) continue;
      if (capacity_method_applies(m, model, K)) out.push_back(m);
    }
    if (out.empty()) fail(ErrorCode::Unsupported, "no capacity backend applies to " + K.describe());
  } else {
    std::istringstream in(s.backends);
    std::string item;
    while (std::getline(in, item, ',')) {
      item.erase(std::remove_if(item.begin(), item.end(), [](unsigned char c) { return std::isspace(c); }), item.end());
      if (item.empty()) continue;
      CapacityMethod m = parse_capacity_method(item);
      if (!capacity_method_applies(m, model, K))
        fail(ErrorCode::Unsupported, std::string("backend ") + to_string(m) + " does not apply to " + K.describe() +
                                         " in " + model.label());
      out.push_back(m);
    }
  }
  return out;
}

Outcome run_capacity(const Scenario& s, const Config& cfg, const RunFlags& flags, const fs::path& dir,
                     const LineSink& out) {
  const MetricModel model = build_metric(s);
  const Region K = build_region(s);
  GridOptions grid = s.deficit.grid;
  grid.threads = flags.threads;
  const auto methods = requested_backends(s, model, K, flags);

  std::vector<CapacityEstimate> est;
  for (CapacityMethod m : methods) {
    if (m == CapacityMethod::GridVariational && s.output_field != "none") {
      GridSolution sol = capacity_grid(model, K, grid);
      if (s.output_field == "csv")
        export_field_csv(sol.field, (dir / (s.output_name + "_field.csv")).string());
      else
        export_field_binary(sol.field, (dir / (s.output_name + "_field.bin")).string());
      est.push_back(sol.estimate);
    } else {
      est.push_back(capacity(model, K, m, s.deficit.quadrature, grid));
    }
    out(format_measured(est.back().value, est.back().error_estimate) + " (" + to_string(est.back().method) + ")");
  }

  auto slack = [&](const CapacityEstimate& e) {
    return e.method == CapacityMethod::GridVariational ? s.deficit.slack_grid * std::abs(e.value)
                                                       : s.deficit.slack_quadrature;
  };
  bool agree = true;
  ojson pairs = ojson::array();
  for (std::size_t a = 0; a < est.size(); ++a) {
    for (std::size_t b = a + 1; b < est.size(); ++b) {
      const double diff = std::abs(est[a].value - est[b].value);
      const double budget = est[a].error_estimate + est[b].error_estimate + slack(est[a]) + slack(est[b]);
      const bool ok = diff <= budget;
      agree = agree && ok;
      pairs.push_back({{"a", to_string(est[a].method)},
                       {"b", to_string(est[b].method)},
                       {"difference", number(diff)},
                       {"budget", number(budget)},
                       {"ok", ok}});
      if (!ok)
        out(std::string("disagree: ") + to_string(est[a].method) + " vs " + to_string(est[b].method) +
            " differ by " + format_number(diff) + " > budget " + format_number(budget));
    }
  }
  if (est.size() > 1 && agree) out("agree: " + std::to_string(est.size()) + " backends within budget");

  ojson j;
  j["region"] = K.describe();
  j["model"] = model.label();
  ojson backends = ojson::array();
  for (const auto& e : est) {
    ojson diag = ojson::object();
    for (const auto& [k, v] : e.diagnostics) diag[k] = number(v);
    backends.push_back({{"method", to_string(e.method)},
                        {"value", number(e.value)},
                        {"error", number(e.error_estimate)},
                        {"slack", number(slack(e))},
                        {"diagnostics", diag}});
  }
  j["backends"] = backends;
  j["comparisons"] = pairs;
  j["agree"] = agree;
  j["config"] = cfg.canonical();
  write_text_file(dir / (s.output_name + "_capacity.json"), j.dump(2) + "\n");

  Outcome o;
  o.exit = agree ? kExitOk : kExitFailed;
  o.result = est.front().value;
  o.error = est.front().error_estimate;
  return o;
}

// Higher-dimensional runs use centred balls of radius rho * r0.
MassReport higher_dim_report(const Scenario& s, const MetricModel& model, const std::vector<double>& radii) {
  if (s.region_shape != "ball" || s.region_params.size() != 1)
    fail(ErrorCode::Unsupported, "dimension > 3 supports centred balls only");
  MassReport rep;
  rep.model_label = model.label();
  rep.description = "centred balls, n=" + std::to_string(model.dimension());
  std::vector<HigherDimRecord> hd;
  std::vector<double> iso;
  for (std::size_t j = 0; j < radii.size(); ++j) {
    hd.push_back(higher_dim_deficits(radii[j], model, s.deficit.quadrature));
    const auto& h = hd.back();
    DeficitRecord r;
    r.j = static_cast<int>(j);
    r.rho = radii[j];
    r.volume = h.volume;
    r.area = h.area;
    const int n = model.dimension();
    r.v_radius = {volume_radius(h.volume.value, n), h.volume.error / (n * unit_ball_volume(n)) *
                                                        std::pow(h.volume.value / unit_ball_volume(n), 1.0 / n - 1.0)};
    r.a_radius = {area_radius(h.area.value, n),
                  h.area.error / ((n - 1) * unit_sphere_area(n)) *
                      std::pow(h.area.value / unit_sphere_area(n), 1.0 / (n - 1) - 1.0)};
    r.capacity = h.capacity;
    r.capacity_ok = true;
    r.cv_deficit_radius = {NAN, NAN};
    r.cv_deficit_normalized = h.cv_deficit;
    r.iso_deficit = h.iso_deficit;
    r.iso_deficit_alt = {NAN, NAN};
    rep.records.push_back(r);
    iso.push_back(h.iso_deficit.value);
  }
  rep.limits["cv_def_norm"] = higher_dim_limit(hd);
  rep.limits["iso_def"] = mass_extrapolate(radii, iso, model.dimension() - 2.0, model.dimension() == 4);
  try {
    rep.adm_reference = adm_mass(model);
  } catch (const Error&) {
  }
  return rep;
}

Outcome run_deficit(const Scenario& s, const Config& cfg, const RunFlags& flags, const fs::path& dir,
                    const LineSink& out) {
  const MetricModel model = build_metric(s);
  MassReport rep;
  if (model.dimension() > 3) {
    rep = higher_dim_report(s, model, {s.region_params[0]});
    rep.limits.clear();
  } else {
    const Region K = build_region(s);
    DeficitOptions opt = s.deficit;
    opt.grid.threads = flags.threads;
    if (s.backends != "auto" && s.backends != "all") opt.method = requested_backends(s, model, K, flags).front();
    rep.description = K.describe();
    rep.model_label = model.label();
    rep.records.push_back(deficit_record(K, model, opt, 0, 1.0));
  }
  const DeficitRecord& r = rep.records.front();
  auto line = [&](const char* name, const Figure& f) {
    if (std::isfinite(f.value)) out(std::string(name) + " = " + format_measured(f.value, f.error, 9));
  };
  line("volume", r.volume);
  line("area", r.area);
  line("v_radius", r.v_radius);
  line("a_radius", r.a_radius);
  if (r.capacity_ok)
    out("capacity = " + format_measured(r.capacity.value, r.capacity.error_estimate, 9) + " (" +
        to_string(r.capacity.method) + ")");
  line("cv_def_radius", r.cv_deficit_radius);
  line("cv_def_norm", r.cv_deficit_normalized);
  line("iso_def", r.iso_deficit);
  line("iso_def_alt", r.iso_deficit_alt);
  if (r.bray_miao_bound) line("bm_bound", *r.bray_miao_bound);
  if (r.asymmetry) line("asymmetry", *r.asymmetry);
  for (const auto& [k, v] : r.field_errors) out("unavailable " + k + ": " + v);
  write_report_files(rep, dir, s.output_name, cfg.canonical());

  Outcome o;
  o.exit = r.field_errors.empty() ? kExitOk : kExitFailed;
  const Figure& head = model.dimension() > 3 ? r.cv_deficit_normalized : r.cv_deficit_radius;
  o.result = head.value;
  o.error = head.error;
  return o;
}

Outcome run_convergence(const Scenario& s, const Config& cfg, const RunFlags& flags, const fs::path& dir,
                        const LineSink& out) {
  const MetricModel model = build_metric(s);
  ExhaustionSpec spec = s.exhaustion;
  MassReport rep;
  std::string headline = "cv_def_radius";
  if (model.dimension() > 3) {
    std::vector<double> radii;
    for (int j = 0; j < spec.count; ++j) radii.push_back(spec.rho0 * std::pow(spec.gamma, j) * s.region_params[0]);
    rep = higher_dim_report(s, model, radii);
    headline = "cv_def_norm";
  } else {
    spec.base = build_region(s);
    ReportOptions opt;
    opt.deficit = s.deficit;
    opt.deficit.grid.threads = flags.threads;
    if (s.backends != "auto" && s.backends != "all") opt.deficit.method = parse_capacity_method(s.backends);
    opt.exponent = s.exponent;
    opt.checks = s.checks;
    rep = build_mass_report(model, spec, opt);
  }
  for (const auto& r : rep.records) {
    if (model.dimension() > 3) {
      out("j=" + std::to_string(r.j) + " r=" + format_number(r.rho) + " capacity=" +
          format_measured(r.capacity.value, r.capacity.error_estimate) + " cv_def_norm=" +
          format_measured(r.cv_deficit_normalized.value, r.cv_deficit_normalized.error));
    } else {
      out(record_line(r));
    }
    for (const auto& [k, v] : r.field_errors) out("  unavailable " + k + ": " + v);
  }
  for (const auto& c : rep.checks)
    out("check " + c.name + ": " + (c.ok ? "ok" : "FAILED") + " margin=" + format_number(c.margin) +
        (c.detail.empty() ? "" : " (" + c.detail + ")"));
  if (rep.diverges) out("diverges: deficit decreases linearly in rho without a finite limit");
  write_report_files(rep, dir, s.output_name, cfg.canonical());

  Outcome o;
  o.exit = rep.all_ok() ? kExitOk : kExitFailed;
  std::string summary = "limit=";
  auto it = rep.limits.find(headline);
  if (it != rep.limits.end()) {
    o.result = it->second.limit;
    o.error = it->second.uncertainty;
    summary += format_number(it->second.limit) + " ± " + format_error(it->second.uncertainty);
    if (it->second.tail_warning) out("warning: last three points are not within the fit residual");
  } else {
    summary += "nan";
    o.exit = kExitFailed;
  }
  summary += " adm=" + (rep.adm_reference ? format_number(*rep.adm_reference) : std::string("n/a"));
  out(summary);
  return o;
}

Outcome dispatch(const std::string& command, const Scenario& s, const Config& cfg, const RunFlags& flags,
                 const fs::path& dir, const LineSink& out);

Outcome run_sweep(const Scenario& s, const Config& cfg, const RunFlags& flags, const fs::path& dir,
                  const LineSink& out) {
  if (s.sweep_key.empty() || s.sweep_values.empty())
    fail(ErrorCode::Config, "sweep needs sweep.key and sweep.values");
  const std::size_t count = s.sweep_values.size();
  struct Variant {
    Outcome outcome;
    std::vector<std::string> lines;
  };
  std::vector<Variant> results(count);
  unsigned workers = flags.threads > 0 ? static_cast<unsigned>(flags.threads) : std::thread::hardware_concurrency();
  workers = std::clamp(workers, 1u, static_cast<unsigned>(count));
  RunFlags inner = flags;
  if (workers > 1) inner.threads = 1;

  std::atomic<std::size_t> next{0};
  auto work = [&]() {
    for (std::size_t i = next++; i < count; i = next++) {
      Variant& v = results[i];
      LineSink sink = [&v](const std::string& l) { v.lines.push_back(l); };
      try {
        Config c = cfg;
        c.set(s.sweep_key, s.sweep_values[i]);
        c.set("sweep.key", "");
        c.set("sweep.values", "");
        const Scenario si = parse_scenario(c);
        char name[32];
        std::snprintf(name, sizeof name, "variant-%03zu", i);
        const fs::path vdir = dir / name;
        fs::create_directories(vdir);
        write_text_file(vdir / "config.txt", c.canonical());
        v.outcome = dispatch(s.sweep_command, si, c, inner, vdir, sink);
      } catch (const Error& e) {
        sink(std::string("error: ") + e.what());
        v.outcome.exit = exit_code_for(e.code());
      } catch (const std::exception& e) {
        sink(std::string("internal error: ") + e.what());
        v.outcome.exit = kExitSolver;
      }
    }
  };
  std::vector<std::thread> pool;
  for (unsigned t = 1; t < workers; ++t) pool.emplace_back(work);
  work();
  for (auto& t : pool) t.join();

  std::ostringstream csv;
  csv << "index,key,value,command,exit,result,result_err\n";
  Outcome total;
  for (std::size_t i = 0; i < count; ++i) {
    const Outcome& o = results[i].outcome;
    out("[" + std::to_string(i) + "] " + s.sweep_key + "=" + s.sweep_values[i] + " exit=" + std::to_string(o.exit) +
        " result=" + format_measured(o.result, o.error));
    for (const auto& l : results[i].lines) out("    " + l);
    csv << i << ',' << s.sweep_key << ',' << s.sweep_values[i] << ',' << s.sweep_command << ',' << o.exit << ','
        << format_number(o.result) << ',' << format_number(o.error) << "\n";
    total.exit = std::max(total.exit, o.exit);
  }
  write_text_file(dir / (s.output_name + "_sweep.csv"), csv.str());
  return total;
}

Outcome dispatch(const std::string& command, const Scenario& s, const Config& cfg, const RunFlags& flags,
                 const fs::path& dir, const LineSink& out) {
  if (command == "capacity") return run_capacity(s, cfg, flags, dir, out);
  if (command == "deficit") return run_deficit(s, cfg, flags, dir, out);
  if (command == "convergence") return run_convergence(s, cfg, flags, dir, out);
  if (command == "sweep") return run_sweep(s, cfg, flags, dir, out);
  fail(ErrorCode::Config, "unknown command '" + command + "'");
}

int run_verify(const Scenario& s, const RunFlags& flags, const LineSink& out) {
  VerifyOptions opt;
  opt.fast = flags.fast;
  opt.quadrature = s.deficit.quadrature;
  opt.grid = s.deficit.grid;
  opt.grid.threads = flags.threads;
  opt.seed = s.seed;
  int failed = 0, skipped = 0, total = 0;
  run_acceptance(opt, [&](const CriterionResult& r) {
    ++total;
    if (r.skipped)
      ++skipped;
    else if (!r.pass)
      ++failed;
    out(format_criterion(r));
  });
  out("verify: " + std::to_string(total - failed - skipped) + " passed, " + std::to_string(failed) + " failed, " +
      std::to_string(skipped) + " skipped");
  return failed == 0 ? kExitOk : kExitFailed;
}

}  // namespace

int run_command(const std::string& command, const Config& cfg, const RunFlags& flags, const LineSink& out) {
  fs::path out_dir, run_dir;
  try {
    const Scenario s = parse_scenario(cfg);
    if (command == "verify") return run_verify(s, flags, out);
    if (command != "capacity" && command != "deficit" && command != "convergence" && command != "sweep")
      fail(ErrorCode::Config, "unknown command '" + command + "'");
    out_dir = s.output_dir;
    run_dir = allocate_run_dir(out_dir);
    write_text_file(run_dir / "config.txt", cfg.canonical());
    const Outcome o = dispatch(command, s, cfg, flags, run_dir, out);
    append_manifest(out_dir, run_dir, command, cfg.hash(), o.exit);
    out("output: " + run_dir.string());
    return o.exit;
  } catch (const Error& e) {
    out(std::string("error: ") + e.what());
    const int code = exit_code_for(e.code());
    if (!run_dir.empty()) {
      try {
        append_manifest(out_dir, run_dir, command, cfg.hash(), code);
      } catch (const Error&) {
      }
    }
    return code;
  } catch (const std::exception& e) {
    out(std::string("internal error: ") + e.what());
    return kExitSolver;
  }
}

}  // namespace capmass
