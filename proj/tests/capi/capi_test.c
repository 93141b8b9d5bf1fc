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

/* Exercises the C interface from C: handles, status codes, error text and
 * ownership of returned strings. Prints one line per failed check. */

#include <math.h>
#include <stdio.h>
#include <string.h>

#include "gadget/gadget.h"

static int failures = 0;

#define CHECK(cond)                                          \
  do {                                                       \
    if (!(cond)) {                                           \
      printf("FAIL %s:%d: %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                            \
    }                                                        \
  } while (0)

int main(void) {
  gadget_dataset* d = NULL;
  gadget_model* m = NULL;
  char* truth = NULL;
  char *tree = NULL, *curves = NULL, *report = NULL, *csv = NULL;
  char* pint = NULL;
  double pred[2] = {0.0, 0.0};
  const double x[6] = {0.5, 0.0, 0.5, 0.5, 0.0, -0.5};
  double r2 = 0.0;

  CHECK(strlen(gadget_version()) > 0);

  CHECK(gadget_dataset_simulate("{\"kind\": \"xor\", \"rho\": 0.3}", &d, &truth) == GADGET_ERROR_USAGE);
  CHECK(d == NULL);
  CHECK(strstr(gadget_last_error(), "rho") != NULL);

  CHECK(gadget_dataset_simulate("{\"kind\": \"xor\", \"n\": 300, \"seed\": 2, \"noise_scale\": 0}", &d, &truth) ==
        GADGET_OK);
  CHECK(gadget_dataset_rows(d) == 300);
  CHECK(gadget_dataset_cols(d) == 3);
  CHECK(strcmp(gadget_dataset_feature_name(d, 2), "x3") == 0);
  CHECK(strstr(truth, "x3") != NULL);

  CHECK(gadget_model_fit(d, "{\"kind\": \"magic\"}", &m) == GADGET_ERROR_USAGE);
  CHECK(gadget_model_fit(d, "not json", &m) == GADGET_ERROR_USAGE);
  CHECK(gadget_model_fit(d, "{\"kind\": \"pairwise\"}", &m) == GADGET_OK);
  CHECK(gadget_model_r_squared(m, d, &r2) == GADGET_OK);
  CHECK(r2 > 0.5 && r2 <= 1.0);
  CHECK(gadget_model_predict(m, x, 2, 3, pred) == GADGET_OK);
  CHECK(isfinite(pred[0]) && isfinite(pred[1]));
  CHECK(gadget_model_predict(m, x, 3, 2, pred) == GADGET_ERROR_USAGE);

  CHECK(gadget_explain(d, m, "{\"S\": \"x7\"}", 0, &tree, &curves, &report, &csv) == GADGET_ERROR_USAGE);
  CHECK(tree == NULL && curves == NULL && report == NULL && csv == NULL);
  CHECK(gadget_explain(d, m, "{\"S\": \"x1\", \"Z\": \"x2,x3\"}", 1, &tree, &curves, &report, &csv) == GADGET_OK);
  CHECK(tree && strstr(tree, "gadget.tree/1") != NULL);
  CHECK(curves && strstr(curves, "gadget.curves/1") != NULL);
  CHECK(report && strstr(report, "h_statistic") != NULL);
  CHECK(csv && strncmp(csv, "measure,", 8) == 0);

  CHECK(gadget_pint(d, "{\"kind\": \"pairwise\"}", "{\"s\": 20, \"seed\": 1}", &pint) == GADGET_OK);
  CHECK(pint && strstr(pint, "gadget.pint/1") != NULL);

  gadget_string_free(tree);
  gadget_string_free(curves);
  gadget_string_free(report);
  gadget_string_free(csv);
  gadget_string_free(pint);
  gadget_string_free(truth);
  gadget_string_free(NULL);
  gadget_model_free(m);
  gadget_dataset_free(d);
  gadget_model_free(NULL);
  gadget_dataset_free(NULL);

  if (failures == 0) printf("all C interface checks passed\n");
  return failures == 0 ? 0 : 1;
}
