#ifndef CAPMASS_CAPMASS_H
#define CAPMASS_CAPMASS_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(CAPMASS_BUILDING_LIBRARY)
#define CAPMASS_API __declspec(dllexport)
#else
#define CAPMASS_API __declspec(dllimport)
#endif
#else
#define CAPMASS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum capmass_status {
  CAPMASS_OK = 0,
  CAPMASS_E_INVALID_ARGUMENT = 1,
  CAPMASS_E_DOMAIN = 2,
  CAPMASS_E_UNSUPPORTED = 3,
  CAPMASS_E_NOT_CONVERGED = 4,
  CAPMASS_E_CONFIG = 5,
  CAPMASS_E_IO = 6,
  CAPMASS_E_INTERNAL = 7
} capmass_status;

typedef struct capmass_config capmass_config;
typedef struct capmass_model capmass_model;
typedef struct capmass_region capmass_region;

/* Message of the last failing call on this thread; "" if none. */
CAPMASS_API const char* capmass_last_error(void);
CAPMASS_API const char* capmass_status_string(capmass_status status);
CAPMASS_API const char* capmass_version(void);

/* Configuration: flat key = value store. Unknown keys give CAPMASS_E_CONFIG. */
CAPMASS_API capmass_config* capmass_config_new(void);
CAPMASS_API capmass_config* capmass_config_clone(const capmass_config* cfg);
CAPMASS_API void capmass_config_free(capmass_config* cfg);
CAPMASS_API capmass_status capmass_config_load_file(capmass_config* cfg, const char* path);
CAPMASS_API capmass_status capmass_config_load_string(capmass_config* cfg, const char* text);
CAPMASS_API capmass_status capmass_config_set(capmass_config* cfg, const char* key, const char* value);
/* "key=value" */
CAPMASS_API capmass_status capmass_config_set_assignment(capmass_config* cfg, const char* assignment);
/* Copies the effective value (including its terminator) into buf when it fits;
   *needed receives the required size. */
CAPMASS_API capmass_status capmass_config_get(const capmass_config* cfg, const char* key, char* buf, size_t len,
                                              size_t* needed);
/* Parses every key without running anything. */
CAPMASS_API capmass_status capmass_config_validate(const capmass_config* cfg);
CAPMASS_API uint64_t capmass_config_hash(const capmass_config* cfg);

CAPMASS_API size_t capmass_config_key_count(void);
CAPMASS_API const char* capmass_config_key_name(size_t index);
CAPMASS_API const char* capmass_config_key_default(size_t index);
CAPMASS_API const char* capmass_config_key_help(size_t index);

typedef void (*capmass_line_fn)(const char* line, void* user);

typedef struct capmass_run_flags {
  int fast;     /* nonzero skips grid-solver criteria in verify */
  int threads;  /* 0 = runtime default */
} capmass_run_flags;

/* Runs "capacity", "deficit", "convergence", "sweep" or "verify". Output lines
   go to `sink`; *exit_code receives 0 (ok), 1 (failed checks), 2 (invalid
   input) or 3 (solver failure). Returns CAPMASS_OK whenever the command ran to
   a verdict, including failures reported through the exit code. */
CAPMASS_API capmass_status capmass_run(const capmass_config* cfg, const char* command, const capmass_run_flags* flags,
                                       capmass_line_fn sink, void* user, int* exit_code);

/* Metric models. */
CAPMASS_API capmass_status capmass_model_euclidean(int dimension, capmass_model** out);
CAPMASS_API capmass_status capmass_model_schwarzschild(double mass, int dimension, capmass_model** out);
/* positions holds 3 * count coordinates. */
CAPMASS_API capmass_status capmass_model_multicenter(const double* positions, const double* masses, size_t count,
                                                     capmass_model** out);
CAPMASS_API capmass_status capmass_model_from_config(const capmass_config* cfg, capmass_model** out);
CAPMASS_API capmass_status capmass_model_scaled(const capmass_model* model, double lambda, capmass_model** out);
CAPMASS_API void capmass_model_free(capmass_model* model);
CAPMASS_API capmass_status capmass_model_adm_mass(const capmass_model* model, double* mass);
CAPMASS_API capmass_status capmass_model_conformal_factor(const capmass_model* model, const double x[3], double* u);

/* Regions. */
CAPMASS_API capmass_status capmass_region_ball(const double center[3], double radius, capmass_region** out);
CAPMASS_API capmass_status capmass_region_ellipsoid(const double center[3], double a, double b, double c,
                                                    capmass_region** out);
CAPMASS_API capmass_status capmass_region_from_config(const capmass_config* cfg, capmass_region** out);
CAPMASS_API void capmass_region_free(capmass_region* region);

/* Capacity of the region; method NULL or "auto" picks the cheapest backend.
   method_out (optional) receives a static backend name. */
CAPMASS_API capmass_status capmass_capacity(const capmass_model* model, const capmass_region* region,
                                            const char* method, double* value, double* error,
                                            const char** method_out);

typedef struct capmass_deficits {
  double volume, volume_err;
  double area, area_err;
  double v_radius, v_radius_err;
  double a_radius, a_radius_err;
  double capacity, capacity_err;
  double cv_def_radius, cv_def_radius_err;
  double cv_def_norm, cv_def_norm_err;
  double iso_def, iso_def_err;
  double iso_def_alt, iso_def_alt_err;
} capmass_deficits;

/* Deficits of one region with default quadrature (n = 3). Missing values are NaN. */
CAPMASS_API capmass_status capmass_deficits_compute(const capmass_model* model, const capmass_region* region,
                                                    capmass_deficits* out);

#ifdef __cplusplus
}
#endif

#endif
