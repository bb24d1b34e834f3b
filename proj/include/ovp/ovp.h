/* C interface to the overparameterized linear classification library.
 *
 * Every function returns an ovp_status. On failure, ovp_last_error() returns
 * a message for the calling thread that stays valid until the next failing
 * call on that thread. Objects are opaque handles released with the matching
 * *_free function; passing NULL to a *_free function is a no-op. */
#ifndef OVP_OVP_H
#define OVP_OVP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(OVP_BUILDING_LIBRARY)
#    define OVP_API __declspec(dllexport)
#  else
#    define OVP_API __declspec(dllimport)
#  endif
#else
#  define OVP_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ovp_status {
  OVP_OK = 0,
  OVP_INVALID_PARAMS = 1,
  OVP_NOT_DIAGONAL = 2,
  OVP_OVERFLOW = 3,
  OVP_INVALID_SIGNAL = 4,
  OVP_SINGULAR_GRAM = 5,
  OVP_NOT_CONVERGED = 6,
  OVP_INFEASIBLE = 7,
  OVP_INDEX_OUT_OF_RANGE = 8,
  OVP_NOT_SEPARATING = 9,
  OVP_DEGENERATE_INPUT = 10,
  OVP_BOUNDARY_CASE = 11,
  OVP_EVEN_N = 12,
  OVP_EVEN_D = 13,
  OVP_INVALID_REGIME = 14,
  OVP_CONFIG_ERROR = 15,
  OVP_MEMORY_CAP = 16,
  OVP_INCOMPLETE_DATA = 17,
  OVP_IO = 18,
  OVP_NULL_ARGUMENT = 19,
  OVP_INTERNAL = 20
} ovp_status;

OVP_API const char* ovp_version(void);
OVP_API const char* ovp_last_error(void);
OVP_API const char* ovp_status_name(ovp_status status);

/* ---- spectra ---------------------------------------------------------- */

typedef struct ovp_spectrum ovp_spectrum;

/* ensemble_json: e.g. {"type":"BiLevel","n":529,"p":1.5,"q":0.6,"r":0.5} */
OVP_API ovp_status ovp_spectrum_from_json(const char* ensemble_json, ovp_spectrum** out);
OVP_API size_t ovp_spectrum_size(const ovp_spectrum* spectrum);
OVP_API const double* ovp_spectrum_values(const ovp_spectrum* spectrum);
OVP_API void ovp_spectrum_free(ovp_spectrum* spectrum);

OVP_API ovp_status ovp_bilevel_dims(size_t n, double p, double r, size_t* d, size_t* s);

/* ---- theory ----------------------------------------------------------- */

typedef enum ovp_regime {
  OVP_REGIME_BOTH_SUCCEED = 0,
  OVP_REGIME_CLASSIFICATION_ONLY = 1,
  OVP_REGIME_BOTH_FAIL = 2,
  OVP_REGIME_BOUNDARY = 3
} ovp_regime;

typedef struct ovp_regime_info {
  ovp_regime regime;
  double q_low;
  double q_high;
  double limit_mse; /* NaN on a boundary */
  double limit_cls;
} ovp_regime_info;

OVP_API ovp_status ovp_classify_regime(double p, double q, double r, ovp_regime_info* out);
OVP_API const char* ovp_regime_name(ovp_regime regime);

/* ---- solvers (phi is row-major n x d) --------------------------------- */

OVP_API ovp_status ovp_min_norm(const double* phi, size_t n, size_t d,
                                const double* targets, double* alpha_out);

/* beta_out may be NULL. */
OVP_API ovp_status ovp_svm(const double* phi, size_t n, size_t d, const double* y,
                           double* alpha_out, double* beta_out, double* sv_fraction);

/* ---- Fourier features ------------------------------------------------- */

typedef struct ovp_fourier_fit {
  double a;          /* measured coefficient on cos(x), relative to truth */
  double b;          /* measured coefficient on the first cos alias */
  double a_closed;
  double b_closed;
  double sigma_cn;
} ovp_fourier_fit;

/* Fits cos(x) on the n-point grid with d features, the first `favored`
 * carrying weight lambda_h. */
OVP_API ovp_status ovp_fourier_fit_cosine(size_t n, size_t d, size_t favored,
                                          double lambda_h, ovp_fourier_fit* out);
OVP_API ovp_status ovp_fourier_cls_upper_bound(double p, double q, double r, size_t n,
                                               double* out);

/* ---- experiments ------------------------------------------------------ */

typedef struct ovp_config ovp_config;

OVP_API ovp_status ovp_config_load(const char* path, ovp_config** out);
OVP_API ovp_status ovp_config_parse(const char* json, ovp_config** out);
OVP_API ovp_status ovp_config_set_seed(ovp_config* config, uint64_t seed);
OVP_API ovp_status ovp_config_set_trials(ovp_config* config, size_t trials);
OVP_API ovp_status ovp_config_set_threads(ovp_config* config, size_t threads);
OVP_API ovp_status ovp_config_set_output(ovp_config* config, const char* path);
OVP_API ovp_status ovp_config_hash(const ovp_config* config, uint64_t* out);
OVP_API void ovp_config_free(ovp_config* config);

typedef struct ovp_run_info {
  size_t rows;
  double wall_seconds;
  uint64_t config_hash;
} ovp_run_info;

/* Writes the CSV and its .meta.json sidecar to the configured output path. */
OVP_API ovp_status ovp_run_sweep(const ovp_config* config, ovp_run_info* info);

typedef struct ovp_report ovp_report;

OVP_API ovp_status ovp_check(const ovp_config* config, const char* csv_path,
                             ovp_report** out);
OVP_API size_t ovp_report_count(const ovp_report* report);
/* Strings stay valid until the report is freed. */
OVP_API ovp_status ovp_report_item(const ovp_report* report, size_t index,
                                   const char** name, int* passed, double* measured,
                                   const char** detail);
OVP_API int ovp_report_all_passed(const ovp_report* report);
OVP_API void ovp_report_free(ovp_report* report);

#ifdef __cplusplus
}
#endif

#endif /* OVP_OVP_H */
