#include "fairsense/fairsense.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <new>
#include <sstream>
#include <string>

#include <json.hpp>

#include "fairsense/csv.hpp"
#include "fairsense/dataset.hpp"
#include "fairsense/error.hpp"
#include "fairsense/io.hpp"
#include "fairsense/metrics.hpp"
#include "fairsense/model.hpp"
#include "fairsense/monitor.hpp"
#include "fairsense/schema.hpp"
#include "fairsense/sensitivity.hpp"
#include "fairsense/stream_stats.hpp"

struct fs_format {
  fairsense::CsvFormat value;
};
struct fs_table {
  fairsense::RawTable value;
};
struct fs_schema {
  fairsense::FeatureSchema value;
};
struct fs_dataset {
  fairsense::EncodedDataset value;
};
struct fs_model {
  fairsense::MlpModel value;
};
struct fs_stream {
  fairsense::StreamStats value;
};
struct fs_monitor {
  fairsense::MlpModel model;
  fairsense::FeatureSchema schema;
  fairsense::CsvFormat format;
  fairsense::MonitorConfig config;
  fairsense::StreamStats stats;
  std::size_t lines = 0;
};

namespace {

using namespace fairsense;

thread_local std::string g_last_error;

fs_status to_status(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return FS_ERR_INVALID_ARGUMENT;
    case ErrorKind::kIo: return FS_ERR_IO;
    case ErrorKind::kParse: return FS_ERR_PARSE;
    case ErrorKind::kData: return FS_ERR_DATA;
    case ErrorKind::kDimension: return FS_ERR_DIMENSION;
    case ErrorKind::kDomain: return FS_ERR_DOMAIN;
    case ErrorKind::kContract: return FS_ERR_CONTRACT;
    case ErrorKind::kNumeric: return FS_ERR_NUMERIC;
    case ErrorKind::kMismatch: return FS_ERR_MISMATCH;
    case ErrorKind::kEmptyGroup: return FS_ERR_EMPTY_GROUP;
    case ErrorKind::kUndefinedRatio: return FS_ERR_UNDEFINED_RATIO;
  }
  return FS_ERR_INTERNAL;
}

template <typename F>
fs_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return FS_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return FS_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return FS_ERR_INTERNAL;
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) throw Error(ErrorKind::kInvalidArgument, std::string(what) + " is NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

void emit(char** out, const std::string& s) {
  if (out != nullptr) *out = dup_string(s);
}

SensitivityOptions to_options(const fs_sensitivity_options* o) {
  SensitivityOptions opts;
  if (o == nullptr) return opts;
  switch (o->aggregation) {
    case FS_AGG_L2: opts.aggregation = Aggregation::kL2; break;
    case FS_AGG_MAX_ABS: opts.aggregation = Aggregation::kMaxAbs; break;
    case FS_AGG_SUM_ABS: opts.aggregation = Aggregation::kSumAbs; break;
    default: throw Error(ErrorKind::kInvalidArgument, "unknown aggregation");
  }
  switch (o->space) {
    case FS_SPACE_PROBABILITY: opts.space = OutputSpace::kProbability; break;
    case FS_SPACE_LOGIT: opts.space = OutputSpace::kLogit; break;
    default: throw Error(ErrorKind::kInvalidArgument, "unknown output space");
  }
  return opts;
}

std::string verdict_to_json(std::size_t line, const Verdict& v) {
  nlohmann::ordered_json j;
  j["line"] = line;
  j["prediction"] = v.prediction;
  j["decision"] = v.decision;
  j["sensitivity"] = v.sensitivity;
  j["flagged"] = v.flagged;
  return j.dump();
}

}  // namespace

extern "C" {

const char* fs_version(void) { return "0.1.0"; }

const char* fs_last_error(void) { return g_last_error.c_str(); }

const char* fs_status_name(fs_status status) {
  switch (status) {
    case FS_OK: return "ok";
    case FS_ERR_INVALID_ARGUMENT: return "invalid argument";
    case FS_ERR_IO: return "io error";
    case FS_ERR_PARSE: return "parse error";
    case FS_ERR_DATA: return "data error";
    case FS_ERR_DIMENSION: return "dimension error";
    case FS_ERR_DOMAIN: return "domain error";
    case FS_ERR_CONTRACT: return "contract error";
    case FS_ERR_NUMERIC: return "numeric failure";
    case FS_ERR_MISMATCH: return "mismatch";
    case FS_ERR_EMPTY_GROUP: return "empty group";
    case FS_ERR_UNDEFINED_RATIO: return "undefined ratio";
    case FS_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

void fs_string_free(char* s) { std::free(s); }

fs_train_options fs_train_options_default(void) {
  const TrainOptions d;
  return {d.epochs, d.batch_size, d.learning_rate, d.seed};
}

fs_sensitivity_options fs_sensitivity_options_default(void) {
  return {FS_AGG_L2, FS_SPACE_PROBABILITY};
}

fs_status fs_format_adult(fs_format** out) {
  return guarded([&] {
    require(out, "out");
    *out = new fs_format{CsvFormat::adult()};
  });
}

fs_status fs_format_from_json(const char* json, fs_format** out) {
  return guarded([&] {
    require(json, "json");
    require(out, "out");
    *out = new fs_format{format_from_json(json)};
  });
}

fs_status fs_format_set_missing_marker(fs_format* format, const char* marker) {
  return guarded([&] {
    require(format, "format");
    require(marker, "marker");
    format->value.missing_marker = marker;
  });
}

fs_status fs_format_set_header(fs_format* format, int has_header) {
  return guarded([&] {
    require(format, "format");
    format->value.has_header = has_header != 0;
  });
}

void fs_format_free(fs_format* format) { delete format; }

fs_status fs_table_load(const char* path, const fs_format* format, fs_table** out) {
  return guarded([&] {
    require(path, "path");
    require(format, "format");
    require(out, "out");
    *out = new fs_table{load_csv(path, format->value)};
  });
}

size_t fs_table_rows(const fs_table* table) { return table ? table->value.size() : 0; }
size_t fs_table_dropped(const fs_table* table) { return table ? table->value.dropped : 0; }
void fs_table_free(fs_table* table) { delete table; }

fs_status fs_schema_fit(const fs_table* table, const char* protected_group,
                        const char* privileged_value, const char* label_positive,
                        int binary_as_single_column, fs_schema** out) {
  return guarded([&] {
    require(table, "table");
    require(protected_group, "protected_group");
    require(privileged_value, "privileged_value");
    require(label_positive, "label_positive");
    require(out, "out");
    EncodingPolicy policy;
    policy.binary_as_single_column = binary_as_single_column != 0;
    *out = new fs_schema{
        fit_schema(table->value, protected_group, privileged_value, label_positive, policy)};
  });
}

fs_status fs_schema_from_json(const char* json, fs_schema** out) {
  return guarded([&] {
    require(json, "json");
    require(out, "out");
    *out = new fs_schema{FeatureSchema::from_json(json)};
  });
}

fs_status fs_schema_load(const char* path, fs_schema** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = new fs_schema{FeatureSchema::from_json(read_file(path))};
  });
}

fs_status fs_schema_save(const fs_schema* schema, const char* path) {
  return guarded([&] {
    require(schema, "schema");
    require(path, "path");
    write_file_atomic(path, schema->value.to_json() + "\n");
  });
}

fs_status fs_schema_to_json(const fs_schema* schema, char** out) {
  return guarded([&] {
    require(schema, "schema");
    require(out, "out");
    emit(out, schema->value.to_json());
  });
}

fs_status fs_schema_fingerprint(const fs_schema* schema, char** out) {
  return guarded([&] {
    require(schema, "schema");
    require(out, "out");
    emit(out, schema->value.fingerprint());
  });
}

size_t fs_schema_width(const fs_schema* schema) { return schema ? schema->value.width() : 0; }
size_t fs_schema_group_count(const fs_schema* schema) {
  return schema ? schema->value.groups().size() : 0;
}
void fs_schema_free(fs_schema* schema) { delete schema; }

fs_status fs_dataset_encode(const fs_table* table, const fs_schema* schema, fs_dataset** out) {
  return guarded([&] {
    require(table, "table");
    require(schema, "schema");
    require(out, "out");
    *out = new fs_dataset{encode(table->value, schema->value)};
  });
}

size_t fs_dataset_rows(const fs_dataset* dataset) { return dataset ? dataset->value.size() : 0; }
size_t fs_dataset_width(const fs_dataset* dataset) { return dataset ? dataset->value.width() : 0; }

fs_status fs_dataset_row(const fs_dataset* dataset, size_t index, double* out, size_t n) {
  return guarded([&] {
    require(dataset, "dataset");
    require(out, "out");
    const EncodedDataset& d = dataset->value;
    if (index >= d.size()) throw Error(ErrorKind::kInvalidArgument, "row index out of range");
    if (n != d.width()) {
      throw Error(ErrorKind::kDimension, "row buffer holds " + std::to_string(n) +
                                             " values, dataset width is " +
                                             std::to_string(d.width()));
    }
    const auto row = d.row(index);
    std::copy(row.begin(), row.end(), out);
  });
}

fs_status fs_dataset_label(const fs_dataset* dataset, size_t index, int* out) {
  return guarded([&] {
    require(dataset, "dataset");
    require(out, "out");
    if (index >= dataset->value.size()) {
      throw Error(ErrorKind::kInvalidArgument, "row index out of range");
    }
    *out = dataset->value.labels()[index];
  });
}

void fs_dataset_free(fs_dataset* dataset) { delete dataset; }

fs_status fs_model_init(const size_t* dims, size_t n_dims, uint64_t seed, fs_model** out) {
  return guarded([&] {
    require(dims, "dims");
    require(out, "out");
    *out = new fs_model{MlpModel::init(std::span<const std::size_t>(dims, n_dims), seed)};
  });
}

fs_status fs_model_train(fs_model* model, const fs_dataset* dataset,
                         const fs_train_options* options, char** trace_json) {
  return guarded([&] {
    require(model, "model");
    require(dataset, "dataset");
    const fs_train_options o = options ? *options : fs_train_options_default();
    TrainOptions opts;
    opts.epochs = o.epochs;
    opts.batch_size = o.batch_size;
    opts.learning_rate = o.learning_rate;
    opts.seed = o.seed;
    TrainResult result = train(model->value, dataset->value, opts);
    result.model.set_schema_fingerprint(dataset->value.schema().fingerprint());
    if (trace_json != nullptr) {
      nlohmann::ordered_json j;
      j["epochs"] = nlohmann::ordered_json::array();
      for (const EpochStats& e : result.trace) {
        j["epochs"].push_back({{"epoch", e.epoch}, {"loss", e.loss}, {"accuracy", e.accuracy}});
      }
      *trace_json = dup_string(j.dump(2));
    }
    model->value = std::move(result.model);
  });
}

fs_status fs_model_predict(const fs_model* model, const double* x, size_t n, double* probability) {
  return guarded([&] {
    require(model, "model");
    require(x, "x");
    require(probability, "probability");
    *probability = model->value.predict(std::span<const double>(x, n));
  });
}

fs_status fs_model_accuracy(const fs_model* model, const fs_dataset* dataset, double* out) {
  return guarded([&] {
    require(model, "model");
    require(dataset, "dataset");
    require(out, "out");
    const EncodedDataset& d = dataset->value;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const int decision = model->value.predict(d.row(i)) >= 0.5 ? 1 : 0;
      if (decision == d.labels()[i]) ++correct;
    }
    *out = static_cast<double>(correct) / static_cast<double>(d.size());
  });
}

fs_status fs_model_save(const fs_model* model, const char* path) {
  return guarded([&] {
    require(model, "model");
    require(path, "path");
    save_model(model->value, path);
  });
}

fs_status fs_model_load(const char* path, const fs_schema* expected, fs_model** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    std::optional<std::string> fp;
    if (expected != nullptr) fp = expected->value.fingerprint();
    *out = new fs_model{load_model(path, fp)};
  });
}

fs_status fs_model_fingerprint(const fs_model* model, char** out) {
  return guarded([&] {
    require(model, "model");
    require(out, "out");
    emit(out, model->value.schema_fingerprint());
  });
}

void fs_model_free(fs_model* model) { delete model; }

fs_status fs_prediction_sensitivity(const fs_model* model, const fs_schema* schema, const double* x,
                                    size_t n, const char* group,
                                    const fs_sensitivity_options* options, double* out) {
  return guarded([&] {
    require(model, "model");
    require(schema, "schema");
    require(x, "x");
    require(group, "group");
    require(out, "out");
    *out = prediction_sensitivity(model->value, schema->value, std::span<const double>(x, n),
                                  group, to_options(options));
  });
}

fs_status fs_audit(const fs_model* model, const fs_dataset* dataset,
                   const fs_sensitivity_options* options, char** report_json,
                   char** distribution_csv) {
  return guarded([&] {
    require(model, "model");
    require(dataset, "dataset");
    const EncodedDataset& d = dataset->value;
    const auto records = profile_all(model->value, d, to_options(options));
    std::vector<int> decisions;
    std::vector<Group> groups;
    for (std::size_t i = 0; i < d.size(); ++i) {
      decisions.push_back(records[i].decision);
      groups.push_back(d.privileged(i) ? Group::kPrivileged : Group::kUnprivileged);
    }
    const FairnessReport report =
        fairness_report(GroupedPredictions(std::move(decisions), std::move(groups)));
    std::string report_text;
    std::string csv_text;
    if (report_json != nullptr) {
      nlohmann::ordered_json j = nlohmann::ordered_json::parse(to_json(report));
      j["protected"] = d.schema().protected_name();
      j["privileged_value"] = d.schema().privileged_value();
      j["rows"] = d.size();
      j["schema_fingerprint"] = d.schema().fingerprint();
      report_text = j.dump(2) + "\n";
    }
    if (distribution_csv != nullptr) csv_text = fairsense::distribution_csv(batch_distribution(records));
    if (report_json != nullptr) *report_json = dup_string(report_text);
    if (distribution_csv != nullptr) *distribution_csv = dup_string(csv_text);
  });
}

fs_status fs_sensitivity_records(const fs_model* model, const fs_dataset* dataset,
                                 const fs_sensitivity_options* options, char** jsonl) {
  return guarded([&] {
    require(model, "model");
    require(dataset, "dataset");
    require(jsonl, "jsonl");
    std::string text;
    for (const SensitivityRecord& r : profile_all(model->value, dataset->value, to_options(options))) {
      text += to_json_line(r);
      text += '\n';
    }
    *jsonl = dup_string(text);
  });
}

fs_status fs_smoothness_probe(const fs_model* model, const fs_dataset* dataset, size_t row,
                              double radius, size_t samples, uint64_t seed,
                              const fs_sensitivity_options* options, char** json) {
  return guarded([&] {
    require(model, "model");
    require(dataset, "dataset");
    require(json, "json");
    const EncodedDataset& d = dataset->value;
    if (row >= d.size()) throw Error(ErrorKind::kInvalidArgument, "row index out of range");
    const SmoothnessSummary s = smoothness_probe(model->value, d.schema(), d.row(row), radius,
                                                 samples, seed, to_options(options));
    nlohmann::ordered_json j;
    j["row"] = row;
    j["radius"] = radius;
    j["samples"] = s.samples;
    j["min"] = s.min;
    j["max"] = s.max;
    j["mean"] = s.mean;
    j["stddev"] = s.stddev;
    *json = dup_string(j.dump());
  });
}

fs_status fs_sweep(const fs_model* model, const fs_dataset* dataset, const double* grid,
                   size_t n_grid, const fs_sensitivity_options* options, char** csv) {
  return guarded([&] {
    require(model, "model");
    require(dataset, "dataset");
    require(csv, "csv");
    if (n_grid > 0) require(grid, "grid");
    std::vector<double> g(grid, grid + n_grid);
    MonitorConfig config;
    config.sensitivity = to_options(options);
    *csv = dup_string(sweep_csv(threshold_sweep(model->value, dataset->value, std::move(g), config)));
  });
}

fs_status fs_stream_create(fs_stream** out) {
  return guarded([&] {
    require(out, "out");
    *out = new fs_stream{};
  });
}

fs_status fs_stream_update(fs_stream* stream, double value) {
  return guarded([&] {
    require(stream, "stream");
    stream->value.update(value);
  });
}

fs_status fs_stream_snapshot(const fs_stream* stream, char** json) {
  return guarded([&] {
    require(stream, "stream");
    require(json, "json");
    *json = dup_string(to_json(stream->value.snapshot()));
  });
}

void fs_stream_free(fs_stream* stream) { delete stream; }

fs_status fs_monitor_create(const fs_model* model, const fs_schema* schema,
                            const fs_format* format, double threshold,
                            const fs_sensitivity_options* options, fs_monitor** out) {
  return guarded([&] {
    require(model, "model");
    require(schema, "schema");
    require(format, "format");
    require(out, "out");
    if (model->value.schema_fingerprint() != schema->value.fingerprint()) {
      throw Error(ErrorKind::kMismatch, "model was trained against a different schema");
    }
    if (model->value.input_width() != schema->value.width()) {
      throw Error(ErrorKind::kDimension, "model and schema widths differ");
    }
    MonitorConfig config;
    config.threshold = threshold;
    config.sensitivity = to_options(options);
    validate(config);
    *out = new fs_monitor{model->value, schema->value, format->value, config, {}, 0};
  });
}

fs_status fs_monitor_evaluate(fs_monitor* monitor, const double* x, size_t n, fs_verdict* out) {
  return guarded([&] {
    require(monitor, "monitor");
    require(x, "x");
    require(out, "out");
    const Verdict v = evaluate(monitor->model, monitor->schema, std::span<const double>(x, n),
                               monitor->config);
    monitor->stats.update(v.sensitivity);
    *out = {v.prediction, v.decision, v.sensitivity, v.flagged ? 1 : 0};
  });
}

fs_status fs_monitor_evaluate_line(fs_monitor* monitor, const char* line, char** verdict_json) {
  return guarded([&] {
    require(monitor, "monitor");
    require(line, "line");
    require(verdict_json, "verdict_json");
    *verdict_json = nullptr;
    const std::size_t line_no = ++monitor->lines;
    const CsvFormat& f = monitor->format;
    std::string_view body(line);
    while (!body.empty() && (body.back() == '\n' || body.back() == '\r')) body.remove_suffix(1);
    if (body.find_first_not_of(" \t") == std::string_view::npos) return;
    const auto first = body.find_first_not_of(" \t");
    if (!f.comment_prefix.empty() && body.substr(first).starts_with(f.comment_prefix)) return;

    std::vector<std::string> cells = split_line(body, f.delimiter);
    const std::size_t label_col = f.label_index();
    if (cells.size() + 1 == f.width()) {
      cells.insert(cells.begin() + static_cast<std::ptrdiff_t>(label_col), std::string());
    } else if (cells.size() != f.width()) {
      throw Error(ErrorKind::kParse, "line " + std::to_string(line_no) + ": expected " +
                                         std::to_string(f.width() - 1) + " or " +
                                         std::to_string(f.width()) + " fields, got " +
                                         std::to_string(cells.size()));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c != label_col && (cells[c] == f.missing_marker || cells[c].empty())) {
        throw Error(ErrorKind::kData, "line " + std::to_string(line_no) + ": missing value in column '" +
                                          f.columns[c].name + "'");
      }
    }
    const std::vector<double> x = encode_row(cells, f, monitor->schema, line_no);
    const Verdict v = evaluate(monitor->model, monitor->schema, x, monitor->config);
    monitor->stats.update(v.sensitivity);
    *verdict_json = dup_string(verdict_to_json(line_no, v));
  });
}

fs_status fs_monitor_snapshot(const fs_monitor* monitor, char** json) {
  return guarded([&] {
    require(monitor, "monitor");
    require(json, "json");
    *json = dup_string(to_json(monitor->stats.snapshot()));
  });
}

void fs_monitor_free(fs_monitor* monitor) { delete monitor; }

}  // extern "C"
