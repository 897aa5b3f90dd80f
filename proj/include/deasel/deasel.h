/* Licensed under the Apache License 2.0 (see LICENSE file). */

/*
 * deasel: variable selection for data envelopment analysis.
 *
 * Plain C interface over the C++ library. Objects are opaque handles that
 * the caller releases with the matching *_free function. Every fallible call
 * returns a deasel_status; on failure deasel_last_error() describes the
 * problem (the message is per thread and valid until the next failing call
 * on that thread). Output handles are left untouched on failure.
 *
 * Indices of inputs are 0-based throughout.
 */

#ifndef DEASEL_DEASEL_H
#define DEASEL_DEASEL_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(DEASEL_BUILDING)
#define DEASEL_API __declspec(dllexport)
#else
#define DEASEL_API __declspec(dllimport)
#endif
#else
#define DEASEL_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum deasel_status {
  DEASEL_OK = 0,
  DEASEL_ERR_INPUT = 1,  /* invalid argument, data or configuration */
  DEASEL_ERR_SOLVER = 2, /* LP/ADMM/tuning failure */
  DEASEL_ERR_IO = 3      /* file system */
} deasel_status;

typedef enum deasel_model { DEASEL_MODEL_CCR = 0, DEASEL_MODEL_BCC = 1, DEASEL_MODEL_ADDITIVE = 2 } deasel_model;

typedef enum deasel_rts { DEASEL_RTS_CRS = 0, DEASEL_RTS_VRS = 1 } deasel_rts;

typedef enum deasel_method { DEASEL_METHOD_GL = 0, DEASEL_METHOD_ECM = 1, DEASEL_METHOD_RB = 2 } deasel_method;

typedef struct deasel_dataset deasel_dataset;
typedef struct deasel_selection deasel_selection;
typedef struct deasel_report deasel_report;

DEASEL_API const char* deasel_version(void);
DEASEL_API const char* deasel_last_error(void);

/* Strings returned through char** out-parameters. */
DEASEL_API void deasel_string_free(char* text);

/* ---- Datasets --------------------------------------------------------- */

/* x holds inputs x dmus values row-major (input i of DMU k at x[i*dmus+k]);
 * y likewise for outputs. Labels default to x1.., y1.. */
DEASEL_API deasel_status deasel_dataset_from_arrays(size_t inputs, size_t outputs, size_t dmus, const double* x,
                                                    const double* y, deasel_dataset** out);
DEASEL_API deasel_status deasel_dataset_read_csv(const char* path, deasel_dataset** out);
DEASEL_API deasel_status deasel_dataset_write_csv(const deasel_dataset* data, const char* path);

/* Draws one panel of a built-in scenario (1..12). dmus = 0 keeps the
 * scenario's own size. */
DEASEL_API deasel_status deasel_dataset_generate(int scenario, deasel_rts rts, size_t dmus, uint64_t seed,
                                                 deasel_dataset** out);

DEASEL_API size_t deasel_dataset_inputs(const deasel_dataset* data);
DEASEL_API size_t deasel_dataset_outputs(const deasel_dataset* data);
DEASEL_API size_t deasel_dataset_dmus(const deasel_dataset* data);
/* is_output = 0 reads X(row, dmu), otherwise Y(row, dmu). */
DEASEL_API deasel_status deasel_dataset_value(const deasel_dataset* data, int is_output, size_t row, size_t dmu,
                                              double* value);
DEASEL_API void deasel_dataset_free(deasel_dataset* data);

/* ---- Scoring ---------------------------------------------------------- */

/* Writes one score per DMU: theta >= 1 for CCR/BCC (output-oriented), total
 * slack for the additive model; NaN where a DMU's LP failed. inputs = NULL
 * uses every input. For CCR and BCC the rts argument is ignored. */
DEASEL_API deasel_status deasel_score(const deasel_dataset* data, deasel_model model, deasel_rts rts,
                                      const size_t* inputs, size_t input_count, double* scores, size_t* failures);

/* ---- Selection -------------------------------------------------------- */

typedef struct deasel_select_options {
  deasel_method method;
  deasel_rts rts;
  /* GL. gl_model < 0 picks CCR for CRS and BCC for VRS. gl_lambda < 0 tunes
   * lambda on the leading training slice. gl_tolerance <= 0 uses
   * 1e-6 * sqrt(constraint rows). */
  int gl_model;
  int gl_normalize;
  double gl_lambda;
  double gl_tau;
  double gl_training_fraction;
  double gl_mu;
  int gl_max_iterations;
  double gl_tolerance;
  double gl_selection_threshold;
  /* ECM */
  double ecm_p0;
  double ecm_gamma_bar;
  double ecm_alpha;
  /* RB */
  double rb_confidence;
  size_t rb_seed_input;
} deasel_select_options;

DEASEL_API void deasel_select_options_init(deasel_select_options* options);

DEASEL_API deasel_status deasel_select(const deasel_dataset* data, const deasel_select_options* options,
                                       deasel_selection** out);
DEASEL_API size_t deasel_selection_count(const deasel_selection* selection);
/* Copies up to capacity indices; returns the total count. */
DEASEL_API size_t deasel_selection_indices(const deasel_selection* selection, size_t* indices, size_t capacity);
DEASEL_API int deasel_selection_converged(const deasel_selection* selection);
DEASEL_API double deasel_selection_lambda(const deasel_selection* selection);
DEASEL_API deasel_status deasel_selection_to_json(const deasel_selection* selection, char** json);
DEASEL_API void deasel_selection_free(deasel_selection* selection);

/* ---- Experiments and reports ------------------------------------------ */

DEASEL_API deasel_status deasel_experiment_run_file(const char* config_path, deasel_report** out);
DEASEL_API deasel_status deasel_experiment_run_json(const char* config_json, deasel_report** out);
/* Accepts a report directory or the path of its report.json. */
DEASEL_API deasel_status deasel_report_load(const char* path, deasel_report** out);
/* dir = NULL writes to the configured output directory. */
DEASEL_API deasel_status deasel_report_emit(const deasel_report* report, const char* dir);
DEASEL_API deasel_status deasel_report_json(const deasel_report* report, char** json);
/* Table 3..6 layout as CSV text. */
DEASEL_API deasel_status deasel_report_table(const deasel_report* report, int table, char** csv);
DEASEL_API void deasel_report_free(deasel_report* report);

#ifdef __cplusplus
}
#endif

#endif /* DEASEL_DEASEL_H */
