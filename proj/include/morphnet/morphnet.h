// Copyright 2026 The MorphNet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#ifndef MORPHNET_MORPHNET_H_
#define MORPHNET_MORPHNET_H_

/* C interface to the morphnet library. Objects are opaque handles; every
 * fallible call returns an mn_status and leaves a message for
 * mn_last_error() on the calling thread. Strings returned through char**
 * are owned by the caller and released with mn_string_free. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define MN_API __declspec(dllexport)
#else
#define MN_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum mn_status {
  MN_OK = 0,
  MN_INVALID_ARGUMENT = 1,
  MN_SHAPE_ERROR = 2,
  MN_SCHEMA_ERROR = 3,
  MN_IO_ERROR = 4,
  MN_INTEGRITY_ERROR = 5,
  MN_NUMERIC_ERROR = 6,
  MN_NOT_FOUND = 7,
  MN_CONFIGURATION_ERROR = 8,
  MN_INTERNAL_ERROR = 9
} mn_status;

#define MN_NUM_CLASSES 7
#define MN_NUM_ANSWERS 37

typedef struct mn_config mn_config;
typedef struct mn_model mn_model;

MN_API const char* mn_version(void);
MN_API const char* mn_status_name(mn_status status);
/* Message of the last failed call on this thread; "" after a success. */
MN_API const char* mn_last_error(void);
MN_API void mn_string_free(char* s);

/* Run configuration: flat "section.key = value" settings. */
MN_API mn_status mn_config_create(mn_config** out);
MN_API void mn_config_destroy(mn_config* cfg);
MN_API mn_status mn_config_load(mn_config* cfg, const char* path);
MN_API mn_status mn_config_set(mn_config* cfg, const char* key, const char* value);
MN_API mn_status mn_config_get(const mn_config* cfg, const char* key, char** value);
MN_API mn_status mn_config_dump(const mn_config* cfg, char** text);
/* Newline-separated list of every accepted key. */
MN_API mn_status mn_config_keys(char** keys);

typedef struct mn_class_counts {
  size_t train[MN_NUM_CLASSES];
  size_t test[MN_NUM_CLASSES];
} mn_class_counts;

/* Curates a vote-fraction catalog and writes a split manifest. `counts` and
 * `report` may be NULL. */
MN_API mn_status mn_curate(const mn_config* cfg, const char* catalog_path,
                           const char* out_manifest, mn_class_counts* counts,
                           char** report);

typedef struct mn_epoch {
  size_t epoch;
  double lr;
  double train_loss;
  double val_loss;
  double train_metric;
  double val_metric;
  int improved;
} mn_epoch;

typedef void (*mn_epoch_callback)(const mn_epoch* record, void* user);

/* Trains the configured variant; writes best.ckpt, history.csv and run.cfg
 * into out_dir. */
MN_API mn_status mn_train(const mn_config* cfg, const char* manifest_path,
                          const char* image_dir, const char* out_dir,
                          mn_epoch_callback on_epoch, void* user, char** report);

MN_API mn_status mn_model_load(const char* checkpoint_path, mn_model** out);
MN_API void mn_model_destroy(mn_model* model);
/* Architecture text stored in the checkpoint. */
MN_API mn_status mn_model_arch(const mn_model* model, char** text);
/* Newline-separated layer names usable with mn_featmap. */
MN_API mn_status mn_model_layers(const mn_model* model, char** names);
/* 7 for classification checkpoints, 37 for regression. */
MN_API size_t mn_model_outputs(const mn_model* model);

/* `split` is "train", "test" or "all". `metric` receives accuracy or rmse.
 * Any output pointer may be NULL. */
MN_API mn_status mn_eval(mn_model* model, const mn_config* cfg,
                         const char* manifest_path, const char* image_dir,
                         const char* split, double* metric, char** text,
                         char** json);

/* Scores one image; `out` receives mn_model_outputs() values. */
MN_API mn_status mn_predict_image(mn_model* model, const mn_config* cfg,
                                  const char* image_path, float* out,
                                  size_t capacity);

/* Writes a submission for every image in image_dir. */
MN_API mn_status mn_predict(mn_model* model, const mn_config* cfg,
                            const char* image_dir, const char* out_csv,
                            size_t* rows);

/* Writes featmap_<layer>.png per layer into out_dir; `written` receives
 * the newline-separated paths. */
MN_API mn_status mn_featmap(mn_model* model, const mn_config* cfg,
                            const char* image_path, const char* const* layers,
                            size_t layer_count, const char* out_dir,
                            char** written);

typedef struct mn_scale_result {
  size_t resolution;
  double flops;
  double baseline_flops;
  double constraint_deviation;
} mn_scale_result;

MN_API mn_status mn_scale_info(double alpha, double beta, double gamma,
                               double phi, mn_scale_result* result,
                               char** text);

typedef struct mn_gradcheck_options {
  size_t seeds;
  uint64_t seed;
  double eps;
  double tolerance;
  size_t max_retries;
  size_t max_elements_per_tensor;
} mn_gradcheck_options;

typedef void (*mn_gradcase_callback)(const char* name, double max_rel_error,
                                     size_t checked, int passed, void* user);

MN_API void mn_gradcheck_defaults(mn_gradcheck_options* options);
/* `only` is a comma-separated case list or NULL for all cases. `passed`
 * is set to 1 when every case is under tolerance. */
MN_API mn_status mn_gradcheck(const mn_gradcheck_options* options,
                              const char* only, mn_gradcase_callback on_case,
                              void* user, int* passed, double* max_rel_error,
                              char** report);
/* Newline-separated case names. */
MN_API mn_status mn_gradcheck_cases(char** names);

/* Procedural 7-class image set with catalog.csv and manifest.csv. */
MN_API mn_status mn_make_synthetic(const char* out_dir, size_t count,
                                   size_t size, uint64_t seed);

/* Averages submissions. `targets_catalog` may be NULL; when given,
 * `ensemble_rmse` receives the score of the average. */
MN_API mn_status mn_ensemble(const char* const* inputs, size_t count,
                             const char* out_csv, const char* targets_catalog,
                             double* ensemble_rmse, char** report);

#ifdef __cplusplus
}
#endif

#endif /* MORPHNET_MORPHNET_H_ */
