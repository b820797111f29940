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


// Exercises the public C interface from C.

#define _DEFAULT_SOURCE
#include <stdio.h>
#include <stdlib.h>
#include <string.h>
#include <unistd.h>

#include "morphnet/morphnet.h"

static int failures = 0;

#define CHECK(cond)                                                   \
  do {                                                                \
    if (!(cond)) {                                                    \
      fprintf(stderr, "%s:%d: CHECK(%s) failed; last error: %s\n",    \
              __FILE__, __LINE__, #cond, mn_last_error());            \
      ++failures;                                                     \
    }                                                                 \
  } while (0)

#define CHECK_OK(expr) CHECK((expr) == MN_OK)

static void count_epochs(const mn_epoch* e, void* user) {
  size_t* n = (size_t*)user;
  if (e->epoch == *n + 1) ++*n;
}

static void count_cases(const char* name, double err, size_t checked, int passed, void* user) {
  (void)err;
  (void)checked;
  if (name && passed) ++*(int*)user;
}

static size_t lines_in(const char* path) {
  FILE* f = fopen(path, "r");
  if (!f) return 0;
  size_t n = 0;
  int c;
  while ((c = fgetc(f)) != EOF) n += c == '\n';
  fclose(f);
  return n;
}

static void basics(void) {
  CHECK(strlen(mn_version()) > 0);
  CHECK(strcmp(mn_status_name(MN_OK), "ok") == 0);
  CHECK(strcmp(mn_status_name(MN_INTEGRITY_ERROR), "integrity-error") == 0);

  mn_config* cfg = NULL;
  CHECK_OK(mn_config_create(&cfg));
  CHECK_OK(mn_config_set(cfg, "train.epochs", "7"));
  char* v = NULL;
  CHECK_OK(mn_config_get(cfg, "train.epochs", &v));
  CHECK(v && strcmp(v, "7") == 0);
  mn_string_free(v);

  CHECK(mn_config_set(cfg, "train.epoch", "7") == MN_CONFIGURATION_ERROR);
  CHECK(strstr(mn_last_error(), "train.epoch") != NULL);
  CHECK(mn_config_set(cfg, NULL, "7") == MN_INVALID_ARGUMENT);
  CHECK(mn_config_create(NULL) == MN_INVALID_ARGUMENT);
  CHECK(mn_config_load(cfg, "/nonexistent/x.cfg") == MN_IO_ERROR);

  char* dump = NULL;
  CHECK_OK(mn_config_dump(cfg, &dump));
  CHECK(dump && strstr(dump, "train.epochs = 7") != NULL);
  mn_string_free(dump);
  char* keys = NULL;
  CHECK_OK(mn_config_keys(&keys));
  CHECK(keys && strstr(keys, "model.variant") != NULL);
  mn_string_free(keys);
  mn_config_destroy(cfg);
  mn_config_destroy(NULL);

  mn_scale_result sr;
  char* text = NULL;
  CHECK_OK(mn_scale_info(1.2, 1.1, 1.15, 1.0, &sr, &text));
  CHECK(sr.resolution == 258);
  CHECK(sr.flops / sr.baseline_flops > 1.8 && sr.flops / sr.baseline_flops < 2.2);
  CHECK(sr.constraint_deviation < -0.079 && sr.constraint_deviation > -0.080);
  mn_string_free(text);
  CHECK(mn_scale_info(0.5, 1.1, 1.15, 1.0, &sr, NULL) == MN_INVALID_ARGUMENT);

  mn_gradcheck_options go;
  mn_gradcheck_defaults(&go);
  CHECK(go.seeds == 100);
  CHECK(go.eps == 1e-6);
  go.seeds = 2;
  int passed = 0, cases = 0;
  double worst = 1;
  CHECK_OK(mn_gradcheck(&go, "add,relu,se.fc", count_cases, &cases, &passed, &worst, NULL));
  CHECK(passed == 1);
  CHECK(cases == 3);
  CHECK(worst < 1e-6);
  CHECK(mn_gradcheck(&go, "nope", NULL, NULL, &passed, &worst, NULL) == MN_NOT_FOUND);
  char* names = NULL;
  CHECK_OK(mn_gradcheck_cases(&names));
  CHECK(names && strstr(names, "network.two_block") != NULL);
  mn_string_free(names);
}

static void pipeline(const char* dir) {
  char data[512], out[512], ckpt[512], csv[512], csv2[512], ens[512], img[512], maps[512], catalog[512];
  snprintf(data, sizeof data, "%s/data", dir);
  snprintf(out, sizeof out, "%s/run", dir);
  snprintf(ckpt, sizeof ckpt, "%s/run/best.ckpt", dir);
  snprintf(csv, sizeof csv, "%s/p.csv", dir);
  snprintf(csv2, sizeof csv2, "%s/q.csv", dir);
  snprintf(ens, sizeof ens, "%s/e.csv", dir);
  snprintf(img, sizeof img, "%s/data/syn00002.png", dir);
  snprintf(maps, sizeof maps, "%s/maps", dir);
  snprintf(catalog, sizeof catalog, "%s/data/catalog.csv", dir);

  CHECK_OK(mn_make_synthetic(data, 35, 16, 2));
  CHECK(mn_make_synthetic(data, 3, 16, 2) == MN_INVALID_ARGUMENT);

  mn_config* cfg = NULL;
  CHECK_OK(mn_config_create(&cfg));
  const char* settings[][2] = {{"model.variant", "toy"}, {"model.mode", "regress"},
                               {"train.epochs", "2"},    {"train.batch_size", "8"},
                               {"augment.enabled", "false"}, {"preprocess.crop", "none"}};
  for (size_t i = 0; i < sizeof settings / sizeof settings[0]; ++i)
    CHECK_OK(mn_config_set(cfg, settings[i][0], settings[i][1]));

  char manifest[640];
  snprintf(manifest, sizeof manifest, "%s/manifest.csv", data);
  size_t epochs = 0;
  char* report = NULL;
  CHECK_OK(mn_train(cfg, manifest, data, out, count_epochs, &epochs, &report));
  CHECK(epochs == 2);
  CHECK(report && strlen(report) > 0);
  mn_string_free(report);

  mn_model* model = NULL;
  CHECK_OK(mn_model_load(ckpt, &model));
  CHECK(mn_model_outputs(model) == MN_NUM_ANSWERS);
  char* arch = NULL;
  CHECK_OK(mn_model_arch(model, &arch));
  CHECK(arch && strstr(arch, "name = toy") != NULL);
  mn_string_free(arch);
  char* layers = NULL;
  CHECK_OK(mn_model_layers(model, &layers));
  CHECK(layers && strstr(layers, "stage0.layer0") != NULL);
  mn_string_free(layers);

  float probs[MN_NUM_ANSWERS];
  CHECK_OK(mn_predict_image(model, cfg, img, probs, MN_NUM_ANSWERS));
  for (int k = 0; k < MN_NUM_ANSWERS; ++k) CHECK(probs[k] > 0.0f && probs[k] < 1.0f);
  CHECK(mn_predict_image(model, cfg, img, probs, 3) == MN_INVALID_ARGUMENT);
  CHECK(mn_predict_image(model, cfg, "/nonexistent.png", probs, MN_NUM_ANSWERS) == MN_IO_ERROR);

  size_t rows = 0;
  CHECK_OK(mn_predict(model, cfg, data, csv, &rows));
  CHECK(rows == 35);
  CHECK(lines_in(csv) == 36);
  CHECK_OK(mn_predict(model, cfg, data, csv2, &rows));

  double metric = -1;
  char* json = NULL;
  CHECK_OK(mn_eval(model, cfg, manifest, data, "test", &metric, NULL, &json));
  CHECK(metric > 0 && metric < 1);
  CHECK(json && strstr(json, "rmse") != NULL);
  mn_string_free(json);

  const char* pick[] = {"stage0.layer0", "stage2.layer1"};
  char* written = NULL;
  CHECK_OK(mn_featmap(model, cfg, img, pick, 2, maps, &written));
  CHECK(written && strstr(written, "featmap_stage2.layer1.png") != NULL);
  mn_string_free(written);
  const char* bad[] = {"stage9"};
  CHECK(mn_featmap(model, cfg, img, bad, 1, maps, NULL) == MN_NOT_FOUND);

  const char* members[] = {csv, csv2};
  double rmse = -1;
  CHECK_OK(mn_ensemble(members, 2, ens, catalog, &rmse, NULL));
  CHECK(rmse > 0 && rmse < 1);
  CHECK(mn_ensemble(members, 0, ens, NULL, NULL, NULL) == MN_INVALID_ARGUMENT);
  mn_model_destroy(model);

  mn_model* none = NULL;
  CHECK(mn_model_load(catalog, &none) == MN_INTEGRITY_ERROR);
  CHECK(none == NULL);
  CHECK(mn_model_load("/nonexistent.ckpt", &none) == MN_IO_ERROR);
  mn_config_destroy(cfg);
}

int main(void) {
  char dir[] = "/tmp/morphnet_capi_XXXXXX";
  if (!mkdtemp(dir)) {
    perror("mkdtemp");
    return 2;
  }
  basics();
  pipeline(dir);
  char cmd[600];
  snprintf(cmd, sizeof cmd, "rm -rf '%s'", dir);
  if (system(cmd) != 0) fprintf(stderr, "could not remove %s\n", dir);
  if (failures) {
    fprintf(stderr, "%d check(s) failed\n", failures);
    return 1;
  }
  printf("c api: all checks passed\n");
  return 0;
}
