#ifndef WLPROF_C_API_H
#define WLPROF_C_API_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define WLPROF_API __declspec(dllexport)
#else
#define WLPROF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes; also used as CLI exit codes. */
typedef enum wlprof_status {
  WLPROF_OK = 0,
  WLPROF_E_INTERNAL = 1,
  WLPROF_E_INVALID_ARGUMENT = 2,
  WLPROF_E_IO = 3,
  WLPROF_E_ZERO_VALID_ROWS = 4,
  WLPROF_E_DUPLICATE_ID = 5,
  WLPROF_E_SCHEMA = 6,
  WLPROF_E_NO_VIABLE_CONFIG = 7,
  WLPROF_E_EMPTY_PROFILE_SET = 8,
  WLPROF_E_EMPTY_HOLDOUT = 9,
  WLPROF_E_MISSING_ARTIFACT = 10,
  WLPROF_E_FORMAT = 11,
  WLPROF_E_TRAINING = 12,
  WLPROF_E_NUMERIC_DOMAIN = 13
} wlprof_status;

typedef struct wlprof_dataset wlprof_dataset;
typedef struct wlprof_profiles wlprof_profiles;
typedef struct wlprof_model wlprof_model;

WLPROF_API const char* wlprof_version(void);
WLPROF_API const char* wlprof_status_name(int status);
/* Message of the last failed call on this thread; "" if none. */
WLPROF_API const char* wlprof_last_error(void);
/* Frees strings returned through char** out parameters. */
WLPROF_API void wlprof_string_free(char* s);

/* Datasets */
WLPROF_API wlprof_status wlprof_dataset_load(const char* csv_path, const char* descriptor_path, wlprof_dataset** out);
WLPROF_API void wlprof_dataset_free(wlprof_dataset* dataset);
WLPROF_API size_t wlprof_dataset_size(const wlprof_dataset* dataset);
WLPROF_API size_t wlprof_dataset_dropped(const wlprof_dataset* dataset);
/* Writes the CSV and its descriptor next to each other. */
WLPROF_API wlprof_status wlprof_dataset_write(const wlprof_dataset* dataset, const char* csv_path,
                                              const char* descriptor_path);
WLPROF_API wlprof_status wlprof_hopkins(const wlprof_dataset* dataset, double sample_fraction, uint64_t seed,
                                        double* score, size_t* sample_size);
WLPROF_API wlprof_status wlprof_sample(const wlprof_dataset* dataset, const char* stratify_on, size_t target_size,
                                       uint64_t seed, wlprof_dataset** out);

/* Artifacts */
WLPROF_API wlprof_status wlprof_profiles_load(const char* path, wlprof_profiles** out);
WLPROF_API void wlprof_profiles_free(wlprof_profiles* profiles);
WLPROF_API size_t wlprof_profiles_count(const wlprof_profiles* profiles);
WLPROF_API wlprof_status wlprof_model_load(const char* path, wlprof_model** out);
WLPROF_API void wlprof_model_free(wlprof_model* model);
WLPROF_API size_t wlprof_model_class_count(const wlprof_model* model);

/* Classifies one JSON input line. `profiles` and `policy_json` may be NULL.
   The result record is stored in *out_json even when the status is an
   error (the record then carries "error" and "code"). */
WLPROF_API wlprof_status wlprof_classify_json(const wlprof_model* model, const wlprof_profiles* profiles,
                                              const char* policy_json, const char* input_line, size_t line_number,
                                              char** out_json);

/* Pipeline commands. `overrides_json` is NULL or a JSON object merged into
   the config; its paths resolve against the current directory. On success
   *summary_json (if non-NULL) receives a JSON summary. */
WLPROF_API wlprof_status wlprof_build(const char* config_path, const char* overrides_json, char** summary_json);
WLPROF_API wlprof_status wlprof_evaluate(const char* config_path, const char* overrides_json, const char* holdout_path,
                                         const char* descriptor_path, char** summary_json);
WLPROF_API wlprof_status wlprof_feedback(const char* config_path, const char* overrides_json, const char* stream_path,
                                         const char* descriptor_path, char** summary_json);
/* Prediction policy of a config as JSON, for wlprof_classify_json. */
WLPROF_API wlprof_status wlprof_config_policy(const char* config_path, const char* overrides_json, char** policy_json);
/* Resolved output directory of a config. */
WLPROF_API wlprof_status wlprof_config_output_dir(const char* config_path, const char* overrides_json, char** path);

#ifdef __cplusplus
}
#endif

#endif
