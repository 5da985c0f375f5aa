/*
 * fairsense C API.
 *
 * Every object is an opaque handle created by an fs_*_create/load/fit call and
 * released with the matching fs_*_free. Functions return an fs_status; on
 * failure fs_last_error() holds a message for the calling thread. Strings
 * returned through char** out-parameters are owned by the caller and must be
 * released with fs_string_free.
 */
#ifndef FAIRSENSE_FAIRSENSE_H
#define FAIRSENSE_FAIRSENSE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define FS_API __declspec(dllexport)
#else
#define FS_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum fs_status {
  FS_OK = 0,
  FS_ERR_INVALID_ARGUMENT = 1,
  FS_ERR_IO = 2,
  FS_ERR_PARSE = 3,
  FS_ERR_DATA = 4,
  FS_ERR_DIMENSION = 5,
  FS_ERR_DOMAIN = 6,
  FS_ERR_CONTRACT = 7,
  FS_ERR_NUMERIC = 8,
  FS_ERR_MISMATCH = 9,
  FS_ERR_EMPTY_GROUP = 10,
  FS_ERR_UNDEFINED_RATIO = 11,
  FS_ERR_INTERNAL = 12
} fs_status;

typedef enum fs_aggregation {
  FS_AGG_L2 = 0,
  FS_AGG_MAX_ABS = 1,
  FS_AGG_SUM_ABS = 2
} fs_aggregation;

typedef enum fs_output_space {
  FS_SPACE_PROBABILITY = 0,
  FS_SPACE_LOGIT = 1
} fs_output_space;

typedef struct fs_format fs_format;
typedef struct fs_table fs_table;
typedef struct fs_schema fs_schema;
typedef struct fs_dataset fs_dataset;
typedef struct fs_model fs_model;
typedef struct fs_monitor fs_monitor;
typedef struct fs_stream fs_stream;

typedef struct fs_train_options {
  size_t epochs;
  size_t batch_size;
  double learning_rate;
  uint64_t seed;
} fs_train_options;

typedef struct fs_sensitivity_options {
  fs_aggregation aggregation;
  fs_output_space space;
} fs_sensitivity_options;

typedef struct fs_verdict {
  double prediction;
  int decision;
  double sensitivity;
  int flagged;
} fs_verdict;

FS_API const char* fs_version(void);
FS_API const char* fs_last_error(void);
FS_API const char* fs_status_name(fs_status status);
FS_API void fs_string_free(char* s);

FS_API fs_train_options fs_train_options_default(void);
FS_API fs_sensitivity_options fs_sensitivity_options_default(void);

/* CSV formats. */
FS_API fs_status fs_format_adult(fs_format** out);
/* {"columns":[{"name":..,"kind":"continuous"|"categorical"}],"label_column":..,
 *  "missing_marker":"?","has_header":false,"comment_prefix":"|","delimiter":","} */
FS_API fs_status fs_format_from_json(const char* json, fs_format** out);
FS_API fs_status fs_format_set_missing_marker(fs_format* format, const char* marker);
FS_API fs_status fs_format_set_header(fs_format* format, int has_header);
FS_API void fs_format_free(fs_format* format);

/* Raw tables; rows holding the missing marker are dropped. */
FS_API fs_status fs_table_load(const char* path, const fs_format* format, fs_table** out);
FS_API size_t fs_table_rows(const fs_table* table);
FS_API size_t fs_table_dropped(const fs_table* table);
FS_API void fs_table_free(fs_table* table);

/* Feature schemas. */
FS_API fs_status fs_schema_fit(const fs_table* table, const char* protected_group,
                               const char* privileged_value, const char* label_positive,
                               int binary_as_single_column, fs_schema** out);
FS_API fs_status fs_schema_from_json(const char* json, fs_schema** out);
FS_API fs_status fs_schema_load(const char* path, fs_schema** out);
FS_API fs_status fs_schema_save(const fs_schema* schema, const char* path);
FS_API fs_status fs_schema_to_json(const fs_schema* schema, char** out);
FS_API fs_status fs_schema_fingerprint(const fs_schema* schema, char** out);
FS_API size_t fs_schema_width(const fs_schema* schema);
FS_API size_t fs_schema_group_count(const fs_schema* schema);
FS_API void fs_schema_free(fs_schema* schema);

/* Encoded datasets. */
FS_API fs_status fs_dataset_encode(const fs_table* table, const fs_schema* schema,
                                   fs_dataset** out);
FS_API size_t fs_dataset_rows(const fs_dataset* dataset);
FS_API size_t fs_dataset_width(const fs_dataset* dataset);
FS_API fs_status fs_dataset_row(const fs_dataset* dataset, size_t index, double* out, size_t n);
FS_API fs_status fs_dataset_label(const fs_dataset* dataset, size_t index, int* out);
FS_API void fs_dataset_free(fs_dataset* dataset);

/* Models. dims = {D, h1, ..., 1}. */
FS_API fs_status fs_model_init(const size_t* dims, size_t n_dims, uint64_t seed, fs_model** out);
/* Trains in place and binds the model to the dataset's schema fingerprint.
 * trace_json may be NULL; otherwise receives {"epochs":[{"epoch","loss","accuracy"}]}. */
FS_API fs_status fs_model_train(fs_model* model, const fs_dataset* dataset,
                                const fs_train_options* options, char** trace_json);
FS_API fs_status fs_model_predict(const fs_model* model, const double* x, size_t n,
                                  double* probability);
FS_API fs_status fs_model_accuracy(const fs_model* model, const fs_dataset* dataset, double* out);
FS_API fs_status fs_model_save(const fs_model* model, const char* path);
/* expected may be NULL; otherwise a fingerprint mismatch fails with FS_ERR_MISMATCH. */
FS_API fs_status fs_model_load(const char* path, const fs_schema* expected, fs_model** out);
FS_API fs_status fs_model_fingerprint(const fs_model* model, char** out);
FS_API void fs_model_free(fs_model* model);

/* Sensitivity. options may be NULL for defaults. */
FS_API fs_status fs_prediction_sensitivity(const fs_model* model, const fs_schema* schema,
                                           const double* x, size_t n, const char* group,
                                           const fs_sensitivity_options* options, double* out);
/* report_json: group fairness on hard decisions; distribution_csv: per-group
 * box summaries. Either out-parameter may be NULL. */
FS_API fs_status fs_audit(const fs_model* model, const fs_dataset* dataset,
                          const fs_sensitivity_options* options, char** report_json,
                          char** distribution_csv);
/* One JSON object per dataset row, newline separated. */
FS_API fs_status fs_sensitivity_records(const fs_model* model, const fs_dataset* dataset,
                                        const fs_sensitivity_options* options, char** jsonl);
FS_API fs_status fs_smoothness_probe(const fs_model* model, const fs_dataset* dataset, size_t row,
                                     double radius, size_t samples, uint64_t seed,
                                     const fs_sensitivity_options* options, char** json);

/* Threshold sweep; n_grid == 0 selects the decile grid plus +inf. */
FS_API fs_status fs_sweep(const fs_model* model, const fs_dataset* dataset, const double* grid,
                          size_t n_grid, const fs_sensitivity_options* options, char** csv);

/* Streaming statistics over non-negative values. */
FS_API fs_status fs_stream_create(fs_stream** out);
FS_API fs_status fs_stream_update(fs_stream* stream, double value);
FS_API fs_status fs_stream_snapshot(const fs_stream* stream, char** json);
FS_API void fs_stream_free(fs_stream* stream);

/* Fairness monitor over raw CSV lines in `format` (label column optional).
 * threshold = +inf disables the alarm. */
FS_API fs_status fs_monitor_create(const fs_model* model, const fs_schema* schema,
                                   const fs_format* format, double threshold,
                                   const fs_sensitivity_options* options, fs_monitor** out);
FS_API fs_status fs_monitor_evaluate(fs_monitor* monitor, const double* x, size_t n,
                                     fs_verdict* out);
/* Returns FS_OK with *verdict_json == NULL for blank or comment lines. */
FS_API fs_status fs_monitor_evaluate_line(fs_monitor* monitor, const char* line,
                                          char** verdict_json);
FS_API fs_status fs_monitor_snapshot(const fs_monitor* monitor, char** json);
FS_API void fs_monitor_free(fs_monitor* monitor);

#ifdef __cplusplus
}
#endif

#endif /* FAIRSENSE_FAIRSENSE_H */
