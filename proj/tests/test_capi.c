/* Licensed under the Apache License 2.0 (see LICENSE file). */

#include <deasel/deasel.h>

#include <math.h>
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

static int failures = 0;

#define EXPECT(cond)                                                   \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: expected %s\n", __FILE__, __LINE__, #cond); \
      ++failures;                                                      \
    }                                                                  \
  } while (0)

static void test_scoring(void) {
  const double x[] = {1.0, 1.0};
  const double y[] = {1.0, 0.5};
  deasel_dataset* d = NULL;
  double scores[2];
  size_t failed = 99;
  EXPECT(deasel_dataset_from_arrays(1, 1, 2, x, y, &d) == DEASEL_OK);
  EXPECT(deasel_dataset_dmus(d) == 2);
  EXPECT(deasel_score(d, DEASEL_MODEL_CCR, DEASEL_RTS_CRS, NULL, 0, scores, &failed) == DEASEL_OK);
  EXPECT(failed == 0);
  EXPECT(fabs(scores[0] - 1.0) < 1e-9);
  EXPECT(fabs(scores[1] - 2.0) < 1e-9);

  size_t bad_input = 3;
  EXPECT(deasel_score(d, DEASEL_MODEL_CCR, DEASEL_RTS_CRS, &bad_input, 1, scores, &failed) == DEASEL_ERR_INPUT);
  EXPECT(strlen(deasel_last_error()) > 0);
  EXPECT(deasel_score(d, (deasel_model)7, DEASEL_RTS_CRS, NULL, 0, scores, &failed) == DEASEL_ERR_INPUT);

  double value = 0.0;
  EXPECT(deasel_dataset_value(d, 1, 0, 1, &value) == DEASEL_OK && value == 0.5);
  EXPECT(deasel_dataset_value(d, 1, 2, 1, &value) == DEASEL_ERR_INPUT);
  deasel_dataset_free(d);

  const double zero[] = {0.0, 1.0};
  d = NULL;
  EXPECT(deasel_dataset_from_arrays(1, 1, 2, zero, y, &d) == DEASEL_ERR_INPUT);
  EXPECT(d == NULL);
}

static void test_selection(void) {
  deasel_dataset* d = NULL;
  deasel_select_options opts;
  deasel_selection* s = NULL;
  size_t idx[8];
  char* json = NULL;

  EXPECT(deasel_dataset_generate(1, DEASEL_RTS_CRS, 40, 5, &d) == DEASEL_OK);
  EXPECT(deasel_dataset_inputs(d) == 4);
  deasel_select_options_init(&opts);
  opts.method = DEASEL_METHOD_ECM;
  EXPECT(deasel_select(d, &opts, &s) == DEASEL_OK);
  EXPECT(deasel_selection_count(s) >= 1);
  EXPECT(deasel_selection_indices(s, idx, 8) == deasel_selection_count(s));
  EXPECT(deasel_selection_to_json(s, &json) == DEASEL_OK);
  EXPECT(json != NULL && strstr(json, "\"selected\"") != NULL);
  deasel_string_free(json);
  deasel_selection_free(s);

  s = NULL;
  opts.method = DEASEL_METHOD_GL;
  opts.gl_lambda = 2.0;
  EXPECT(deasel_select(d, &opts, &s) == DEASEL_OK);
  EXPECT(deasel_selection_lambda(s) == 2.0);
  deasel_selection_free(s);

  s = NULL;
  opts.method = DEASEL_METHOD_RB;
  opts.rb_seed_input = 9;
  EXPECT(deasel_select(d, &opts, &s) == DEASEL_ERR_INPUT);
  EXPECT(s == NULL);
  deasel_dataset_free(d);

  EXPECT(deasel_dataset_generate(14, DEASEL_RTS_CRS, 0, 1, &d) == DEASEL_ERR_INPUT);
  EXPECT(deasel_dataset_read_csv("/nonexistent/panel.csv", &d) == DEASEL_ERR_IO);
}

static void test_reports(void) {
  const char* config =
      "{\"scenarios\": [{\"id\": 50, \"n\": 12, \"relevant\": 2, \"irrelevant\": 1, \"alpha\": [0.5, 0.5], "
      "\"rts\": \"crs\"}], \"methods\": [\"ECM\", \"RB\"], \"trials\": 1, \"seed\": 3}";
  deasel_report* r = NULL;
  char* table = NULL;
  EXPECT(deasel_experiment_run_json(config, &r) == DEASEL_OK);
  EXPECT(deasel_report_table(r, 3, &table) == DEASEL_OK);
  EXPECT(table != NULL && strncmp(table, "experiment,mse_GL", 17) == 0);
  deasel_string_free(table);
  EXPECT(deasel_report_table(r, 9, &table) == DEASEL_ERR_INPUT);
  EXPECT(deasel_report_emit(r, "/proc/deasel-cannot-write") == DEASEL_ERR_IO);
  deasel_report_free(r);

  r = NULL;
  EXPECT(deasel_experiment_run_json("{\"scenarios\": [1], \"unknown\": true}", &r) == DEASEL_ERR_INPUT);
  EXPECT(r == NULL);
  EXPECT(deasel_report_load("/nonexistent", &r) == DEASEL_ERR_IO);
}

int main(void) {
  EXPECT(strcmp(deasel_version(), "0.1.0") == 0);
  test_scoring();
  test_selection();
  test_reports();
  if (failures) fprintf(stderr, "%d C API check(s) failed\n", failures);
  else printf("C API checks passed\n");
  return failures ? 1 : 0;
}
