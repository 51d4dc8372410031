/* C interface to the pinning toolkit. All functions report failures through
 * pin_status; pin_last_error() returns a thread-local message for the most
 * recent failure on the calling thread. Strings returned through char** are
 * owned by the caller and released with pin_string_free(). */
#ifndef PINNING_PINNING_H
#define PINNING_PINNING_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(PIN_BUILDING_LIBRARY)
#    define PIN_API __declspec(dllexport)
#  else
#    define PIN_API __declspec(dllimport)
#  endif
#else
#  define PIN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pin_status {
  PIN_OK = 0,
  PIN_ERR_INVALID_ARGUMENT = 1,
  PIN_ERR_DIVERGENT = 2,
  PIN_ERR_BUDGET_EXCEEDED = 3,
  PIN_ERR_INFEASIBLE = 4,
  PIN_ERR_UNSUPPORTED = 5,
  PIN_ERR_IO = 6,
  PIN_ERR_CONFIG = 7,
  PIN_ERR_INTERNAL = 8
} pin_status;

typedef struct pin_distribution pin_distribution;
typedef struct pin_path pin_path;
typedef struct pin_grid pin_grid;

PIN_API const char* pin_version(void);
PIN_API const char* pin_last_error(void);
PIN_API const char* pin_status_name(pin_status status);
PIN_API void pin_string_free(char* s);

/* ---- random media ---------------------------------------------------- */

/* JSON forms: {"atoms": [["1","0.5"],["-1","0.5"]]}, {"bernoulli_p": "0.4"},
 * {"point_mass": 2}. */
PIN_API pin_status pin_distribution_from_json(const char* json, pin_distribution** out);
/* +1 with probability p (decimal string), -1 otherwise. */
PIN_API pin_status pin_distribution_bernoulli(const char* p, pin_distribution** out);
PIN_API void pin_distribution_free(pin_distribution* d);
PIN_API pin_status pin_distribution_upper_bound(const pin_distribution* d, int64_t* out);

/* Obstacle strength at site (i, j) of the field keyed by seed. */
PIN_API pin_status pin_field_site(const pin_distribution* d, uint64_t seed, int64_t i, int64_t j,
                                  int* is_minus_inf, int64_t* value);

PIN_API pin_status pin_mean_max_exact(const pin_distribution* d, int depth, double* value, double* error_bound);
PIN_API pin_status pin_mean_max_mc(const pin_distribution* d, int64_t samples, int depth, uint64_t seed,
                                   double* estimate, double* std_error);
PIN_API pin_status pin_pinning_condition(const pin_distribution* d, int64_t F, int depth, int* satisfied,
                                         double* margin);

/* Poisson points in [x0, x1) x [y0, y1). Writes up to `capacity` (x, y)
 * pairs to xy (2 * capacity doubles) and the total count to *count; pass
 * xy = NULL to query the count only. */
PIN_API pin_status pin_poisson_points(double x0, double x1, double y0, double y1, double intensity, uint64_t seed,
                                      uint64_t stream, double* xy, size_t capacity, size_t* count);

/* ---- discrete supersolutions ------------------------------------------- */

PIN_API pin_status pin_path_construct(const pin_distribution* d, uint64_t seed, int64_t n_start, int64_t F,
                                      int64_t half_width, pin_path** out);
PIN_API void pin_path_free(pin_path* p);
PIN_API int64_t pin_path_half_width(const pin_path* p);
PIN_API pin_status pin_path_value(const pin_path* p, int64_t i, int64_t* out);
/* Number of sites where the discrete supersolution inequality fails. */
PIN_API pin_status pin_path_verify(const pin_path* p, const pin_distribution* d, uint64_t seed, size_t* violations);
PIN_API pin_status pin_path_stats(const pin_path* p, int64_t* min_v, double* forward_slope, double* backward_slope);
PIN_API pin_status pin_path_write(const pin_path* p, const char* file);
PIN_API pin_status pin_path_read(const char* file, pin_path** out);

/* ---- dynamics ------------------------------------------------------------ */

typedef struct pin_sim_result {
  int64_t jump_count;
  double final_time;
  int64_t max_height;
  int completed;      /* 0 when the jump budget ran out */
  int compared;       /* 1 when a barrier was supplied */
  int comparison_ok;  /* u_t <= v at every event */
  double violation_time;
  int64_t violation_site;
} pin_sim_result;

/* Default bounded rate, u_0 = 0, window centered on column 0. `barrier`
 * may be NULL. */
PIN_API pin_status pin_simulate(const pin_distribution* d, uint64_t seed, int64_t F, size_t width, double horizon,
                                int64_t jump_budget, const pin_path* barrier, pin_sim_result* out);

/* ---- percolation --------------------------------------------------------- */

/* d = 1 gives independent sites. */
PIN_API pin_status pin_grid_generate(int64_t width, int64_t height, double p, int64_t d, uint64_t seed,
                                     pin_grid** out);
/* All sites closed. */
PIN_API pin_status pin_grid_new(int64_t width, int64_t height, int64_t d, pin_grid** out);
PIN_API void pin_grid_free(pin_grid* g);
PIN_API pin_status pin_grid_set_open(pin_grid* g, int64_t z, int64_t h, int is_open);
PIN_API pin_status pin_grid_is_open(const pin_grid* g, int64_t z, int64_t h, int* out);
/* phi must hold `width` entries; *found = 0 when no surface fits. */
PIN_API pin_status pin_grid_minimal_surface(const pin_grid* g, int64_t* phi, int* found);
PIN_API pin_status pin_grid_brute_force_surface(const pin_grid* g, int64_t budget, int64_t* phi, int* found);
PIN_API pin_status pin_enumerate_admissible_paths(const pin_grid* g, int64_t from_z, int64_t to_z, int64_t h,
                                                  int64_t budget, int64_t* count);
PIN_API pin_status pin_critical_probability(int n, int d, double* out);
/* PIN_ERR_DIVERGENT when 8 n q^(1/d) >= 1. */
PIN_API pin_status pin_admissible_path_bound(int64_t h, int64_t z_abs, double q, int n, int d, double* out);

/* ---- continuum ----------------------------------------------------------- */

typedef struct pin_scales {
  double k, alpha, lambda_plus, lambda_minus;
  double l, d_gap, h, b;
  int64_t N;
  double rho, F_star, S, p0;
} pin_scales;

PIN_API pin_status pin_select_scales(double k, double alpha, double lambda_plus, double lambda_minus,
                                     pin_scales* out);
/* Full pipeline; *result_json receives {"status", "scales", "report", ...}. */
PIN_API pin_status pin_continuum_run(double k, double alpha, double lambda_plus, double lambda_minus,
                                     int64_t columns, int64_t rows, uint64_t seed, char** result_json);

/* ---- experiments ----------------------------------------------------------- */

typedef struct pin_run_options {
  const char* kind;     /* NULL: taken from the config */
  const char* out_dir;  /* NULL: taken from the config */
  int64_t seed_count;   /* 0: taken from the config */
  int jobs;             /* 0: taken from the config */
  int emit_svg;
} pin_run_options;

/* Runs an experiment from a JSON config string or file; *manifest_json
 * (optional) receives the manifest. PIN_ERR_CONFIG for invalid configs. */
PIN_API pin_status pin_experiment_run(const char* config_json, const pin_run_options* options, char** manifest_json);
PIN_API pin_status pin_experiment_run_file(const char* config_path, const pin_run_options* options,
                                           char** manifest_json);

#ifdef __cplusplus
}
#endif

#endif
