/*
 * Copyright 2026 The Gadget Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

/* C interface to the library. Objects are opaque handles released with the
 * matching *_free call. Every function returning gadget_status leaves a
 * message for gadget_last_error() on failure; the message is per thread and
 * stays valid until the next failing call on that thread.
 *
 * Configurations are JSON objects in text form; features are referenced by
 * name or 1-based position. Strings returned through char** belong to the
 * caller and are released with gadget_string_free. */

#ifndef GADGET_GADGET_H_
#define GADGET_GADGET_H_

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define GADGET_API __declspec(dllexport)
#else
#define GADGET_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum gadget_status {
  GADGET_OK = 0,
  GADGET_ERROR_USAGE = 2,   /* invalid arguments or configuration */
  GADGET_ERROR_DATA = 3,    /* malformed or unusable input data */
  GADGET_ERROR_NUMERIC = 4, /* degenerate or failed computation */
  GADGET_ERROR_INTERNAL = 5
} gadget_status;

typedef struct gadget_dataset gadget_dataset;
typedef struct gadget_model gadget_model;

GADGET_API const char* gadget_version(void);
GADGET_API const char* gadget_last_error(void);
GADGET_API void gadget_string_free(char* s);
/* 0 restores the default (GADGET_THREADS or the hardware count). */
GADGET_API void gadget_set_threads(int threads);

/* categorical: comma-separated column names forced to categorical, or NULL. */
GADGET_API gadget_status gadget_dataset_load_csv(const char* path, const char* target, const char* categorical,
                                                 gadget_dataset** out);
/* design_json: {"kind": "xor" | "hierarchical" | "spurious", "rho", "n",
 * "noise_scale", "seed"}. truth_json may be NULL. */
GADGET_API gadget_status gadget_dataset_simulate(const char* design_json, gadget_dataset** out, char** truth_json);
GADGET_API size_t gadget_dataset_rows(const gadget_dataset* d);
GADGET_API size_t gadget_dataset_cols(const gadget_dataset* d);
/* NULL when j is out of range. Owned by the dataset. */
GADGET_API const char* gadget_dataset_feature_name(const gadget_dataset* d, size_t j);
GADGET_API gadget_status gadget_dataset_to_csv(const gadget_dataset* d, char** csv);
GADGET_API void gadget_dataset_free(gadget_dataset* d);

/* learner_json: {"kind": "linear" | "pairwise" | "knn" | "trees" | "external",
 * "k", "trees", "max_depth", "min_leaf", "seed", "archive"}. */
GADGET_API gadget_status gadget_model_fit(const gadget_dataset* d, const char* learner_json, gadget_model** out);
/* x is row-major rows x cols; out receives rows predictions. */
GADGET_API gadget_status gadget_model_predict(const gadget_model* m, const double* x, size_t rows, size_t cols,
                                              double* out);
/* R^2 of the model's predictions against the dataset's target. */
GADGET_API gadget_status gadget_model_r_squared(const gadget_model* m, const gadget_dataset* d, double* out);
GADGET_API void gadget_model_free(gadget_model* m);

/* Fits the partitioning tree and derives interaction measures. Any output
 * pointer may be NULL. With with_h nonzero the report includes H^2 for every
 * feature. */
GADGET_API gadget_status gadget_explain(const gadget_dataset* d, const gadget_model* m, const char* config_json,
                                        int with_h, char** tree_json, char** curves_json, char** report_json,
                                        char** report_csv);
/* Permutation test; the learner is refit on every permuted target. */
GADGET_API gadget_status gadget_pint(const gadget_dataset* d, const char* learner_json, const char* config_json,
                                     char** result_json);
GADGET_API gadget_status gadget_hstat(const gadget_dataset* d, const gadget_model* m, size_t max_rows, uint64_t seed,
                                      char** result_json);
/* Runs an experiment; summary_csv may be NULL. */
GADGET_API gadget_status gadget_simlab_run(const char* experiment_json, char** result_json, char** summary_csv);

#ifdef __cplusplus
}
#endif

#endif /* GADGET_GADGET_H_ */
