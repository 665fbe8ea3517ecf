#ifndef NICA_NICA_H
#define NICA_NICA_H

#include <stddef.h>

#if defined(_WIN32)
#if defined(NICA_BUILDING_LIBRARY)
#define NICA_API __declspec(dllexport)
#else
#define NICA_API __declspec(dllimport)
#endif
#else
#define NICA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nica_status {
  NICA_OK = 0,
  NICA_ERR_INVALID_ARGUMENT = 1,
  NICA_ERR_IO = 2,
  NICA_ERR_PARSE = 3,
  NICA_ERR_NUMERICAL = 4,
  NICA_ERR_NOT_CONVERGED = 5, /* output is still written */
  NICA_ERR_INTERNAL = 6
} nica_status;

typedef struct nica_tensor nica_tensor;
typedef struct nica_data nica_data;

NICA_API const char* nica_version(void);
/* Message of the last failed call on this thread, "" if none. */
NICA_API const char* nica_last_error(void);
NICA_API const char* nica_status_name(nica_status status);
/* Frees strings returned through char** out-parameters. */
NICA_API void nica_string_free(char* s);

/* Symmetric tensors. Indices are 1-based, any order. */
NICA_API nica_status nica_tensor_create(int d, int r, nica_tensor** out);
NICA_API nica_status nica_tensor_from_json(const char* json, nica_tensor** out);
NICA_API nica_status nica_tensor_to_json(const nica_tensor* t, char** out);
NICA_API nica_status nica_tensor_shape(const nica_tensor* t, int* d, int* r);
NICA_API nica_status nica_tensor_set(nica_tensor* t, const int* index, double value);
NICA_API nica_status nica_tensor_get(const nica_tensor* t, const int* index, double* value);
NICA_API void nica_tensor_free(nica_tensor* t);

/* Observation matrices, one row per observation. */
NICA_API nica_status nica_data_create(const double* row_major, long n, int d, nica_data** out);
NICA_API nica_status nica_data_from_csv_file(const char* path, nica_data** out);
NICA_API nica_status nica_data_shape(const nica_data* y, long* n, int* d);
NICA_API void nica_data_free(nica_data* y);

/* Order-r k-statistic (stat = "cumulant") or raw sample moment (stat = "moment"). */
NICA_API nica_status nica_cumulants(const nica_data* y, int r, const char* stat, nica_tensor** out);

/* Identification report for a tensor under a zero pattern.
   options: {"pattern": name or [[i,...],...], "targets", "tol", "explore", "explore_starts", "seed", "Q"} */
NICA_API nica_status nica_identify(const nica_tensor* t, const char* options_json, char** report_json);

/* Minimum-distance estimate. config: {"r", "stat", "pattern", "targets", "include_mean",
   "weighting": identity|efficient|plug_in|bootstrap|iterated|both, "starts", "bootstrap_B",
   "seed", "tolerances", "reference"}. */
NICA_API nica_status nica_estimate(const nica_data* y, const char* config_json, char** result_json);

/* J-test when sub_config_json is NULL, otherwise C-test of config against the nested sub spec. */
NICA_API nica_status nica_test(const nica_data* y, const char* config_json, const char* sub_config_json,
                               char** result_json);

/* Monte Carlo campaign. threads > 0 overrides the scenario's setting. Either output may be NULL. */
NICA_API nica_status nica_simulate(const char* scenario_json, int threads, char** summary_json, char** summary_csv);

#ifdef __cplusplus
}
#endif

#endif
