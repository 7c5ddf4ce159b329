// Copyright 2026 The memaudit Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


/* C interface to the memaudit library. All objects are opaque handles owned
 * by the caller and released with the matching *_free function. Functions
 * return MA_OK or an error status; ma_last_error() describes the most recent
 * failure on the calling thread. */

#ifndef MEMAUDIT_MEMAUDIT_H
#define MEMAUDIT_MEMAUDIT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MA_API __declspec(dllexport)
#else
#define MA_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum ma_status {
  MA_OK = 0,
  MA_ERR_INVALID_ARGUMENT = 1,
  MA_ERR_INVALID_DATASET = 2,
  MA_ERR_INVALID_PLAN = 3,
  MA_ERR_CONFIG = 4,
  MA_ERR_FORMAT = 5,
  MA_ERR_IO = 6,
  MA_ERR_VERSION = 7,
  MA_ERR_COMPUTE = 8,
  MA_ERR_UNSUPPORTED = 9,
  MA_ERR_INTERNAL = 10
} ma_status;

typedef struct ma_dataset ma_dataset;
typedef struct ma_fold_plan ma_fold_plan;
typedef struct ma_model ma_model;
typedef struct ma_result ma_result;

MA_API const char* ma_version(void);
MA_API const char* ma_status_string(ma_status status);
/* Message of the last failed call on this thread; "" if none. */
MA_API const char* ma_last_error(void);

/* Datasets. Values are row-major, rows x cols. */
MA_API ma_status ma_dataset_create(const double* values, size_t rows, size_t cols,
                                   ma_dataset** out);
/* Images in height, width, channel order. */
MA_API ma_status ma_dataset_create_images(const double* values, size_t count, size_t height,
                                          size_t width, size_t channels, ma_dataset** out);
MA_API ma_status ma_dataset_load_csv(const char* path, int has_header, ma_dataset** out);
MA_API ma_status ma_dataset_load_idx(const char* path, ma_dataset** out);
MA_API size_t ma_dataset_size(const ma_dataset* data);
MA_API size_t ma_dataset_dim(const ma_dataset* data);
MA_API void ma_dataset_free(ma_dataset* data);

/* Fold plans. */
MA_API ma_status ma_fold_plan_create(size_t n, size_t folds, size_t repetitions, uint64_t seed,
                                     ma_fold_plan** out);
/* Borrowed view of holdout set (rep, fold), valid while the plan lives. */
MA_API ma_status ma_fold_plan_holdout(const ma_fold_plan* plan, size_t rep, size_t fold,
                                      const size_t** indices, size_t* count);
MA_API void ma_fold_plan_free(ma_fold_plan* plan);

/* Models. estimator_json is an estimator spec document. */
MA_API ma_status ma_model_fit(const char* estimator_json, const ma_dataset* train, uint64_t seed,
                              ma_model** out);
MA_API ma_status ma_model_log_density(const ma_model* model, const double* x, size_t dim,
                                      uint64_t eval_seed, double* out);
/* Writes count x dim values into out. */
MA_API ma_status ma_model_sample(const ma_model* model, uint64_t seed, size_t count, double* out);
MA_API ma_status ma_model_save(const ma_model* model, const char* path);
MA_API ma_status ma_model_load(const char* path, ma_model** out);
MA_API void ma_model_free(ma_model* model);

/* K-fold memorization scores. */
MA_API ma_status ma_memscore(const char* estimator_json, const ma_dataset* data,
                             const ma_fold_plan* plan, size_t workers, ma_result** out);
MA_API size_t ma_result_size(const ma_result* result);
/* Any output pointer may be NULL; each non-NULL one receives size() values. */
MA_API ma_status ma_result_scores(const ma_result* result, int64_t* ids, double* u, double* v,
                                  double* m);
/* Ids of the top ceil(fraction * n) scores, ties to the smaller id. */
MA_API ma_status ma_result_top_fraction(const ma_result* result, double fraction, int64_t* ids,
                                        size_t capacity, size_t* count);
MA_API ma_status ma_result_write_report(const ma_result* result, const char* path);
MA_API void ma_result_free(ma_result* result);

/* Log-space reductions. */
MA_API ma_status ma_log_sum_exp(const double* values, size_t count, double* out);
MA_API ma_status ma_log_mean_exp(const double* values, size_t count, double* out);

/* Runs a CLI subcommand (memscore, loo, nn-ratio, trace, mitigate, synth) from
 * a config document; options_json holds flag overrides and may be NULL.
 * exit_code receives 0, 2 or 3. */
MA_API ma_status ma_run_command(const char* command, const char* config_json,
                                const char* options_json, int* exit_code);
/* Readable rendering of a report file; free the text with ma_string_free. */
MA_API ma_status ma_render_report(const char* path, char** text);
MA_API void ma_string_free(char* text);

#ifdef __cplusplus
}
#endif

#endif /* MEMAUDIT_MEMAUDIT_H */
