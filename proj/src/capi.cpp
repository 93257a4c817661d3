#include "capmass/capmass.h"

#include <cmath>
#include <cstring>
#include <string>

#include "capmass/capacity.hpp"
#include "capmass/mass.hpp"
#include "capmass/scenario.hpp"

#ifndef CAPMASS_VERSION
#define CAPMASS_VERSION "0.0.0"
#endif

struct capmass_config {
  capmass::Config cfg;
};
struct capmass_model {
  capmass::MetricModel model;
};
struct capmass_region {
  capmass::Region region;
};

namespace {

thread_local std::string g_last_error;

capmass_status to_status(capmass::ErrorCode code) {
  switch (code) {
    case capmass::ErrorCode::InvalidArgument: return CAPMASS_E_INVALID_ARGUMENT;
    case capmass::ErrorCode::Domain: return CAPMASS_E_DOMAIN;
    case capmass::ErrorCode::Unsupported: return CAPMASS_E_UNSUPPORTED;
    case capmass::ErrorCode::NotConverged: return CAPMASS_E_NOT_CONVERGED;
    case capmass::ErrorCode::Config: return CAPMASS_E_CONFIG;
    case capmass::ErrorCode::Io: return CAPMASS_E_IO;
    case capmass::ErrorCode::Internal: return CAPMASS_E_INTERNAL;
  }
  return CAPMASS_E_INTERNAL;
}

template <class F>
capmass_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return CAPMASS_OK;
  } catch (const capmass::Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return CAPMASS_E_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return CAPMASS_E_INTERNAL;
  }
}

capmass_status null_arg(const char* what) {
  g_last_error = std::string("null argument: ") + what;
  return CAPMASS_E_INVALID_ARGUMENT;
}

capmass::Vec3 vec(const double* x) { return x ? capmass::Vec3{x[0], x[1], x[2]} : capmass::Vec3{}; }

void put(double& v, double& e, const capmass::Figure& f) {
  v = f.value;
  e = f.error;
}

}  // namespace

extern "C" {

const char* capmass_last_error(void) { return g_last_error.c_str(); }

const char* capmass_status_string(capmass_status status) {
  switch (status) {
    case CAPMASS_OK: return "ok";
    case CAPMASS_E_INVALID_ARGUMENT: return "invalid argument";
    case CAPMASS_E_DOMAIN: return "outside the metric domain";
    case CAPMASS_E_UNSUPPORTED: return "unsupported";
    case CAPMASS_E_NOT_CONVERGED: return "not converged";
    case CAPMASS_E_CONFIG: return "configuration error";
    case CAPMASS_E_IO: return "i/o error";
    case CAPMASS_E_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* capmass_version(void) { return CAPMASS_VERSION; }

capmass_config* capmass_config_new(void) {
  try {
    return new capmass_config{};
  } catch (...) {
    g_last_error = "out of memory";
    return nullptr;
  }
}

capmass_config* capmass_config_clone(const capmass_config* cfg) {
  if (!cfg) return nullptr;
  try {
    return new capmass_config{*cfg};
  } catch (...) {
    g_last_error = "out of memory";
    return nullptr;
  }
}

void capmass_config_free(capmass_config* cfg) { delete cfg; }

capmass_status capmass_config_load_file(capmass_config* cfg, const char* path) {
  if (!cfg || !path) return null_arg("cfg/path");
  return guard([&] { cfg->cfg.load_file(path); });
}

capmass_status capmass_config_load_string(capmass_config* cfg, const char* text) {
  if (!cfg || !text) return null_arg("cfg/text");
  return guard([&] { cfg->cfg.load_string(text); });
}

capmass_status capmass_config_set(capmass_config* cfg, const char* key, const char* value) {
  if (!cfg || !key || !value) return null_arg("cfg/key/value");
  return guard([&] { cfg->cfg.set(key, value); });
}

capmass_status capmass_config_set_assignment(capmass_config* cfg, const char* assignment) {
  if (!cfg || !assignment) return null_arg("cfg/assignment");
  return guard([&] { cfg->cfg.set_assignment(assignment); });
}

capmass_status capmass_config_get(const capmass_config* cfg, const char* key, char* buf, size_t len, size_t* needed) {
  if (!cfg || !key) return null_arg("cfg/key");
  return guard([&] {
    const std::string v = cfg->cfg.get(key);
    if (needed) *needed = v.size() + 1;
    if (buf && len > 0) {
      if (len < v.size() + 1) capmass::fail(capmass::ErrorCode::InvalidArgument, "buffer too small");
      std::memcpy(buf, v.c_str(), v.size() + 1);
    }
  });
}

capmass_status capmass_config_validate(const capmass_config* cfg) {
  if (!cfg) return null_arg("cfg");
  return guard([&] { (void)capmass::parse_scenario(cfg->cfg); });
}

uint64_t capmass_config_hash(const capmass_config* cfg) { return cfg ? cfg->cfg.hash() : 0; }

size_t capmass_config_key_count(void) { return capmass::Config::keys().size(); }

const char* capmass_config_key_name(size_t index) {
  const auto& k = capmass::Config::keys();
  return index < k.size() ? k[index].name.c_str() : nullptr;
}

const char* capmass_config_key_default(size_t index) {
  const auto& k = capmass::Config::keys();
  return index < k.size() ? k[index].default_value.c_str() : nullptr;
}

const char* capmass_config_key_help(size_t index) {
  const auto& k = capmass::Config::keys();
  return index < k.size() ? k[index].help.c_str() : nullptr;
}

capmass_status capmass_run(const capmass_config* cfg, const char* command, const capmass_run_flags* flags,
                           capmass_line_fn sink, void* user, int* exit_code) {
  if (!cfg || !command || !exit_code) return null_arg("cfg/command/exit_code");
  return guard([&] {
    capmass::RunFlags f;
    if (flags) {
      f.fast = flags->fast != 0;
      f.threads = flags->threads;
    }
    std::string last;
    *exit_code = capmass::run_command(command, cfg->cfg, f, [&](const std::string& line) {
      if (line.rfind("error: ", 0) == 0) last = line.substr(7);
      if (sink) sink(line.c_str(), user);
    });
    if (*exit_code != 0 && !last.empty()) g_last_error = last;
  });
}

capmass_status capmass_model_euclidean(int dimension, capmass_model** out) {
  if (!out) return null_arg("out");
  return guard([&] { *out = new capmass_model{capmass::MetricModel::euclidean(dimension)}; });
}

capmass_status capmass_model_schwarzschild(double mass, int dimension, capmass_model** out) {
  if (!out) return null_arg("out");
  return guard([&] { *out = new capmass_model{capmass::MetricModel::schwarzschild(mass, dimension)}; });
}

capmass_status capmass_model_multicenter(const double* positions, const double* masses, size_t count,
                                         capmass_model** out) {
  if (!out || !positions || !masses) return null_arg("positions/masses/out");
  return guard([&] {
    std::vector<capmass::PointMass> poles;
    for (size_t i = 0; i < count; ++i) poles.push_back({vec(positions + 3 * i), masses[i]});
    *out = new capmass_model{capmass::MetricModel::multi_center(std::move(poles))};
  });
}

capmass_status capmass_model_from_config(const capmass_config* cfg, capmass_model** out) {
  if (!cfg || !out) return null_arg("cfg/out");
  return guard([&] { *out = new capmass_model{capmass::build_metric(capmass::parse_scenario(cfg->cfg))}; });
}

capmass_status capmass_model_scaled(const capmass_model* model, double lambda, capmass_model** out) {
  if (!model || !out) return null_arg("model/out");
  return guard([&] { *out = new capmass_model{model->model.scaled(lambda)}; });
}

void capmass_model_free(capmass_model* model) { delete model; }

capmass_status capmass_model_adm_mass(const capmass_model* model, double* mass) {
  if (!model || !mass) return null_arg("model/mass");
  return guard([&] { *mass = capmass::adm_mass(model->model); });
}

capmass_status capmass_model_conformal_factor(const capmass_model* model, const double x[3], double* u) {
  if (!model || !x || !u) return null_arg("model/x/u");
  return guard([&] { *u = model->model.conformal_factor(vec(x)); });
}

capmass_status capmass_region_ball(const double center[3], double radius, capmass_region** out) {
  if (!out) return null_arg("out");
  return guard([&] { *out = new capmass_region{capmass::Region::ball(vec(center), radius)}; });
}

capmass_status capmass_region_ellipsoid(const double center[3], double a, double b, double c, capmass_region** out) {
  if (!out) return null_arg("out");
  return guard([&] { *out = new capmass_region{capmass::Region::ellipsoid(vec(center), a, b, c)}; });
}

capmass_status capmass_region_from_config(const capmass_config* cfg, capmass_region** out) {
  if (!cfg || !out) return null_arg("cfg/out");
  return guard([&] { *out = new capmass_region{capmass::build_region(capmass::parse_scenario(cfg->cfg))}; });
}

void capmass_region_free(capmass_region* region) { delete region; }

capmass_status capmass_capacity(const capmass_model* model, const capmass_region* region, const char* method,
                                double* value, double* error, const char** method_out) {
  if (!model || !region || !value) return null_arg("model/region/value");
  return guard([&] {
    const capmass::CapacityMethod m = (!method || std::strcmp(method, "auto") == 0)
                                          ? capmass::select_capacity_method(model->model, region->region)
                                          : capmass::parse_capacity_method(method);
    if (!capmass::capacity_method_applies(m, model->model, region->region))
      capmass::fail(capmass::ErrorCode::Unsupported,
                    std::string("backend ") + capmass::to_string(m) + " does not apply");
    const capmass::CapacityEstimate e = capmass::capacity(model->model, region->region, m);
    *value = e.value;
    if (error) *error = e.error_estimate;
    if (method_out) *method_out = capmass::to_string(e.method);
  });
}

capmass_status capmass_deficits_compute(const capmass_model* model, const capmass_region* region,
                                        capmass_deficits* out) {
  if (!model || !region || !out) return null_arg("model/region/out");
  return guard([&] {
    capmass::DeficitOptions opt;
    opt.asymmetry = false;
    const capmass::DeficitRecord r = capmass::deficit_record(region->region, model->model, opt);
    capmass_deficits d{};
    put(d.volume, d.volume_err, r.volume);
    put(d.area, d.area_err, r.area);
    put(d.v_radius, d.v_radius_err, r.v_radius);
    put(d.a_radius, d.a_radius_err, r.a_radius);
    d.capacity = r.capacity_ok ? r.capacity.value : NAN;
    d.capacity_err = r.capacity_ok ? r.capacity.error_estimate : NAN;
    put(d.cv_def_radius, d.cv_def_radius_err, r.cv_deficit_radius);
    put(d.cv_def_norm, d.cv_def_norm_err, r.cv_deficit_normalized);
    put(d.iso_def, d.iso_def_err, r.iso_deficit);
    put(d.iso_def_alt, d.iso_def_alt_err, r.iso_deficit_alt);
    *out = d;
  });
}

}  // extern "C"
