/* ddid: double difference-in-differences estimation, C interface. */
#ifndef DDID_DDID_H
#define DDID_DDID_H

#include <stddef.h>

#if defined(_WIN32)
#  if defined(DDID_BUILDING)
#    define DDID_API __declspec(dllexport)
#  else
#    define DDID_API __declspec(dllimport)
#  endif
#else
#  define DDID_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ddid_status {
  DDID_OK = 0,
  DDID_E_INVALID_ARGUMENT = 1,
  DDID_E_IO = 2,
  DDID_E_SCHEMA = 3,
  DDID_E_VALIDATION = 4,
  DDID_E_DOMAIN = 5,
  DDID_E_EMPTY_CELL = 6,
  DDID_E_DEGENERATE_WEIGHT = 7,
  DDID_E_NEAR_SINGULAR = 8,
  DDID_E_RANK_DEFICIENT = 9,
  DDID_E_UNSTABLE_RESAMPLING = 10,
  DDID_E_NO_CLEAN_CONTROL = 11,
  DDID_E_INTERNAL = 12
} ddid_status;

/* Opaque, immutable once loaded; safe to share between threads. */
typedef struct ddid_dataset ddid_dataset;

DDID_API const char* ddid_version(void);

/* Message for the last failing call on this thread ("" if none). */
DDID_API const char* ddid_last_error(void);

/* Nonzero for statuses caused by the caller's input rather than a defect. */
DDID_API int ddid_status_is_user_error(ddid_status s);

DDID_API const char* ddid_status_name(ddid_status s);

/* Strings returned through char** must be released with ddid_string_free. */
DDID_API void ddid_string_free(char* s);

/* source_json: {"path", "unit", "time", "outcome", "treatment", "cluster",
   "group", "covariates": [...], "mode": "panel"|"rcs", "design": "basic"|"sa"} */
DDID_API ddid_status ddid_dataset_load_csv(const char* source_json, ddid_dataset** out);

/* Same, from CSV text in memory; "path" is recorded only. */
DDID_API ddid_status ddid_dataset_parse_csv(const char* csv, const char* source_json, ddid_dataset** out);

DDID_API void ddid_dataset_free(ddid_dataset* ds);

DDID_API ddid_status ddid_dataset_info(const ddid_dataset* ds, char** json_out);

/* Pre-trend assessment document (JSON). */
DDID_API ddid_status ddid_assess(const ddid_dataset* ds, const char* config_json, char** json_out);

/* Double DID estimation document (JSON); config must name the regime. */
DDID_API ddid_status ddid_estimate(const ddid_dataset* ds, const char* config_json, char** json_out);

/* Group-by-period means as CSV. */
DDID_API ddid_status ddid_plot_data(const ddid_dataset* ds, const char* config_json, char** csv_out);

/* Simulation study; csv_out may be NULL. */
DDID_API ddid_status ddid_simulate(const char* config_json, char** json_out, char** csv_out);

/* Text rendering of any JSON document produced above. */
DDID_API ddid_status ddid_render_text(const char* json_doc, char** text_out);

/* GMM combination of k moments with a k*k row-major weight matrix.
   weights_out (k entries) may be NULL. */
DDID_API ddid_status ddid_gmm_combine(const double* moments, const double* weight, size_t k, double* point_out,
                                      double* weights_out);

/* Equivalence bound b = max(|b_L|, |b_U|) of the 90% normal CI; baseline_sd <= 0
   means unstandardized. */
DDID_API ddid_status ddid_equivalence_bound(double point, double se, double baseline_sd, double* bound_out);

#ifdef __cplusplus
}
#endif

#endif
