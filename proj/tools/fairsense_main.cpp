// fairsense command-line tool. Talks to the engine only through the C API.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <limits>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fairsense/fairsense.h"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitNumeric = 3;

// Failure carrying the process exit code.
struct CliError {
  int code;
  std::string message;
};

[[noreturn]] void usage_error(const std::string& message) { throw CliError{kExitUsage, message}; }

void check(fs_status status, const std::string& context) {
  if (status == FS_OK) return;
  int code = kExitData;
  if (status == FS_ERR_INVALID_ARGUMENT) code = kExitUsage;
  if (status == FS_ERR_NUMERIC) code = kExitNumeric;
  throw CliError{code, context + ": " + fs_status_name(status) + ": " + fs_last_error()};
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using Format = std::unique_ptr<fs_format, Deleter<fs_format, fs_format_free>>;
using Table = std::unique_ptr<fs_table, Deleter<fs_table, fs_table_free>>;
using Schema = std::unique_ptr<fs_schema, Deleter<fs_schema, fs_schema_free>>;
using Dataset = std::unique_ptr<fs_dataset, Deleter<fs_dataset, fs_dataset_free>>;
using Model = std::unique_ptr<fs_model, Deleter<fs_model, fs_model_free>>;
using Monitor = std::unique_ptr<fs_monitor, Deleter<fs_monitor, fs_monitor_free>>;
using Stream = std::unique_ptr<fs_stream, Deleter<fs_stream, fs_stream_free>>;

// Takes ownership of a C string produced by the library.
std::string take(char* s) {
  std::string out = s ? s : "";
  fs_string_free(s);
  return out;
}

void write_atomic(const fs::path& path, const std::string& contents) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    out << contents;
    if (!out.flush()) {
      std::error_code ignored;
      fs::remove(tmp, ignored);
      throw CliError{kExitData, "cannot write " + path.string()};
    }
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw CliError{kExitData, "cannot write " + path.string() + ": " + ec.message()};
}

double parse_threshold(const json& v) {
  if (v.is_number()) return v.get<double>();
  const std::string s = v.get<std::string>();
  if (s == "inf" || s == "+inf" || s == "off") return std::numeric_limits<double>::infinity();
  try {
    std::size_t used = 0;
    const double d = std::stod(s, &used);
    if (used == s.size()) return d;
  } catch (const std::exception&) {
  }
  usage_error("threshold '" + s + "' is not a number, 'inf' or 'off'");
}

std::vector<double> parse_grid(const json& v) {
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    if (s == "deciles" || s.empty()) return {};
    std::vector<double> grid;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) grid.push_back(parse_threshold(json(item)));
    return grid;
  }
  std::vector<double> grid;
  for (const json& item : v) grid.push_back(parse_threshold(item));
  return grid;
}

std::vector<std::size_t> parse_hidden(const json& v) {
  if (v.is_array()) return v.get<std::vector<std::size_t>>();
  std::vector<std::size_t> dims;
  std::stringstream ss(v.get<std::string>());
  std::string item;
  while (std::getline(ss, item, ',')) dims.push_back(std::stoul(item));
  return dims;
}

// Declarative run configuration: JSON file values, then command-line flags.
struct RunConfig {
  json values = json::object();

  bool has(const std::string& key) const { return values.contains(key) && !values[key].is_null(); }
  std::string str(const std::string& key, const std::string& fallback = "") const {
    return has(key) ? values.at(key).get<std::string>() : fallback;
  }
  template <typename T>
  T num(const std::string& key, T fallback) const {
    return has(key) ? values.at(key).get<T>() : fallback;
  }

  fs::path out_dir() const { return str("out_dir", "."); }
  fs::path model_path() const {
    return has("model") ? fs::path(str("model")) : out_dir() / "model.json";
  }
  fs::path schema_path() const {
    return has("schema") ? fs::path(str("schema")) : model_path().parent_path() / "schema.json";
  }
  std::uint64_t seed() const {
    if (!has("seed")) usage_error("a seed is required (--seed or \"seed\" in the config)");
    return values.at("seed").get<std::uint64_t>();
  }
  fs::path existing(const std::string& key) const {
    if (!has(key)) usage_error("missing required path '" + key + "'");
    const fs::path p = str(key);
    if (!fs::exists(p)) usage_error(key + " path '" + p.string() + "' does not exist");
    return p;
  }

  fs_sensitivity_options sensitivity() const {
    fs_sensitivity_options o = fs_sensitivity_options_default();
    const std::string agg = str("aggregation", "l2");
    if (agg == "l2") {
      o.aggregation = FS_AGG_L2;
    } else if (agg == "max_abs") {
      o.aggregation = FS_AGG_MAX_ABS;
    } else if (agg == "sum_abs") {
      o.aggregation = FS_AGG_SUM_ABS;
    } else {
      usage_error("unknown aggregation '" + agg + "'");
    }
    const std::string space = str("output_space", "probability");
    if (space == "probability") {
      o.space = FS_SPACE_PROBABILITY;
    } else if (space == "logit") {
      o.space = FS_SPACE_LOGIT;
    } else {
      usage_error("unknown output space '" + space + "'");
    }
    return o;
  }

  Format format() const {
    fs_format* raw = nullptr;
    if (!has("format") || (values["format"].is_string() && values["format"] == "adult")) {
      check(fs_format_adult(&raw), "format");
    } else if (values["format"].is_object()) {
      check(fs_format_from_json(values["format"].dump().c_str(), &raw), "format");
    } else {
      const fs::path p = str("format");
      std::ifstream in(p);
      if (!in) usage_error("cannot read format file '" + p.string() + "'");
      std::stringstream ss;
      ss << in.rdbuf();
      check(fs_format_from_json(ss.str().c_str(), &raw), "format " + p.string());
    }
    Format f(raw);
    if (has("missing_marker")) {
      check(fs_format_set_missing_marker(f.get(), str("missing_marker").c_str()), "format");
    }
    if (has("has_header")) {
      check(fs_format_set_header(f.get(), values["has_header"].get<bool>() ? 1 : 0), "format");
    }
    return f;
  }
};

Table load_table(const fs::path& path, const fs_format* format) {
  fs_table* raw = nullptr;
  check(fs_table_load(path.c_str(), format, &raw), "load " + path.string());
  return Table(raw);
}

Dataset encode(const fs_table* table, const fs_schema* schema, const fs::path& source) {
  fs_dataset* raw = nullptr;
  check(fs_dataset_encode(table, schema, &raw), "encode " + source.string());
  return Dataset(raw);
}

Schema load_schema(const fs::path& path) {
  if (!fs::exists(path)) usage_error("schema path '" + path.string() + "' does not exist");
  fs_schema* raw = nullptr;
  check(fs_schema_load(path.c_str(), &raw), "schema " + path.string());
  return Schema(raw);
}

Model load_model(const fs::path& path, const fs_schema* schema) {
  if (!fs::exists(path)) usage_error("model path '" + path.string() + "' does not exist");
  fs_model* raw = nullptr;
  check(fs_model_load(path.c_str(), schema, &raw), "model " + path.string());
  return Model(raw);
}

void prepare_out_dir(const RunConfig& cfg) {
  std::error_code ec;
  fs::create_directories(cfg.out_dir(), ec);
  if (ec) usage_error("cannot create output directory '" + cfg.out_dir().string() + "'");
}

int cmd_train(const RunConfig& cfg) {
  const fs::path train_path = cfg.existing("train");
  const std::optional<fs::path> test_path =
      cfg.has("test") ? std::optional(cfg.existing("test")) : std::nullopt;
  const std::uint64_t seed = cfg.seed();
  const Format format = cfg.format();

  const Table train_table = load_table(train_path, format.get());
  fs_schema* schema_raw = nullptr;
  check(fs_schema_fit(train_table.get(), cfg.str("protected", "sex").c_str(),
                      cfg.str("privileged", "Male").c_str(),
                      cfg.str("label_positive", ">50K").c_str(), 1, &schema_raw),
        "fit schema");
  const Schema schema(schema_raw);
  const Dataset train = encode(train_table.get(), schema.get(), train_path);

  std::vector<std::size_t> dims{fs_schema_width(schema.get())};
  for (std::size_t h : parse_hidden(cfg.has("hidden") ? cfg.values["hidden"] : json({64, 32}))) {
    dims.push_back(h);
  }
  dims.push_back(1);
  fs_model* model_raw = nullptr;
  check(fs_model_init(dims.data(), dims.size(), seed, &model_raw), "init model");
  const Model model(model_raw);

  fs_train_options opts = fs_train_options_default();
  opts.epochs = cfg.num<std::size_t>("epochs", opts.epochs);
  opts.batch_size = cfg.num<std::size_t>("batch_size", opts.batch_size);
  opts.learning_rate = cfg.num<double>("learning_rate", opts.learning_rate);
  opts.seed = seed;
  char* trace_raw = nullptr;
  check(fs_model_train(model.get(), train.get(), &opts, &trace_raw), "train");
  json trace = json::parse(take(trace_raw));

  double train_acc = 0.0;
  check(fs_model_accuracy(model.get(), train.get(), &train_acc), "accuracy");
  trace["train_accuracy"] = train_acc;
  trace["train_rows"] = fs_dataset_rows(train.get());
  trace["train_dropped"] = fs_table_dropped(train_table.get());
  trace["layer_dims"] = dims;
  trace["hyperparameters"] = {{"epochs", opts.epochs},
                              {"batch_size", opts.batch_size},
                              {"learning_rate", opts.learning_rate},
                              {"seed", seed}};
  if (test_path) {
    const Table test_table = load_table(*test_path, format.get());
    const Dataset test = encode(test_table.get(), schema.get(), *test_path);
    double test_acc = 0.0;
    check(fs_model_accuracy(model.get(), test.get(), &test_acc), "accuracy");
    trace["test_accuracy"] = test_acc;
    trace["test_rows"] = fs_dataset_rows(test.get());
  }

  prepare_out_dir(cfg);
  const fs::path model_path = cfg.model_path();
  fs::create_directories(model_path.parent_path().empty() ? "." : model_path.parent_path());
  check(fs_schema_save(schema.get(), cfg.schema_path().c_str()), "save schema");
  check(fs_model_save(model.get(), model_path.c_str()), "save model");
  write_atomic(cfg.out_dir() / "train_trace.json", trace.dump(2) + "\n");

  std::cout << "trained " << dims.size() - 1 << "-layer model on " << fs_dataset_rows(train.get())
            << " rows; train accuracy " << train_acc;
  if (trace.contains("test_accuracy")) std::cout << ", test accuracy " << trace["test_accuracy"];
  std::cout << "\nmodel: " << model_path.string() << "\n";
  return kExitOk;
}

// Loads schema, model (fingerprint-checked) and the encoded test set.
struct AuditInputs {
  Format format;
  Schema schema;
  Model model;
  Dataset test;
};

AuditInputs load_audit_inputs(const RunConfig& cfg) {
  const fs::path test_path = cfg.existing("test");
  Format format = cfg.format();
  Schema schema = load_schema(cfg.schema_path());
  Model model = load_model(cfg.model_path(), schema.get());
  const Table table = load_table(test_path, format.get());
  Dataset test = encode(table.get(), schema.get(), test_path);
  return {std::move(format), std::move(schema), std::move(model), std::move(test)};
}

int cmd_audit(const RunConfig& cfg) {
  const AuditInputs in = load_audit_inputs(cfg);
  const fs_sensitivity_options opts = cfg.sensitivity();
  char* report_raw = nullptr;
  char* csv_raw = nullptr;
  check(fs_audit(in.model.get(), in.test.get(), &opts, &report_raw, &csv_raw), "audit");
  const std::string report = take(report_raw);
  const std::string csv = take(csv_raw);
  prepare_out_dir(cfg);
  write_atomic(cfg.out_dir() / "audit_report.json", report);
  write_atomic(cfg.out_dir() / "sensitivity_distribution.csv", csv);
  std::cout << report;
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg) {
  const AuditInputs in = load_audit_inputs(cfg);
  const std::vector<double> grid = cfg.has("grid") ? parse_grid(cfg.values["grid"]) : std::vector<double>{};
  const fs_sensitivity_options opts = cfg.sensitivity();
  char* csv_raw = nullptr;
  check(fs_sweep(in.model.get(), in.test.get(), grid.data(), grid.size(), &opts, &csv_raw), "sweep");
  const std::string csv = take(csv_raw);
  prepare_out_dir(cfg);
  write_atomic(cfg.out_dir() / "sweep.csv", csv);
  std::cout << csv;
  return kExitOk;
}

int cmd_monitor(const RunConfig& cfg) {
  const Format format = cfg.format();
  const Schema schema = load_schema(cfg.schema_path());
  const Model model = load_model(cfg.model_path(), schema.get());
  const double threshold =
      cfg.has("threshold") ? parse_threshold(cfg.values["threshold"]) : std::numeric_limits<double>::infinity();
  const fs_sensitivity_options opts = cfg.sensitivity();
  fs_monitor* mon_raw = nullptr;
  check(fs_monitor_create(model.get(), schema.get(), format.get(), threshold, &opts, &mon_raw),
        "monitor");
  const Monitor monitor(mon_raw);

  const std::string input = cfg.str("input", "-");
  std::ifstream file;
  if (input != "-") {
    if (!fs::exists(input)) usage_error("input path '" + input + "' does not exist");
    file.open(input);
  }
  std::istream& in = input == "-" ? std::cin : file;

  std::string verdicts;
  std::size_t n_verdicts = 0, n_flagged = 0, n_errors = 0;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    char* verdict_raw = nullptr;
    const fs_status status = fs_monitor_evaluate_line(monitor.get(), line.c_str(), &verdict_raw);
    if (status != FS_OK) {
      ++n_errors;
      verdicts += json({{"line", line_no}, {"error", fs_last_error()}}).dump() + "\n";
      continue;
    }
    if (verdict_raw == nullptr) continue;
    const std::string v = take(verdict_raw);
    ++n_verdicts;
    if (json::parse(v)["flagged"].get<bool>()) ++n_flagged;
    verdicts += v + "\n";
  }
  char* snap_raw = nullptr;
  check(fs_monitor_snapshot(monitor.get(), &snap_raw), "snapshot");
  const std::string snapshot = take(snap_raw);

  prepare_out_dir(cfg);
  write_atomic(cfg.out_dir() / "verdicts.jsonl", verdicts);
  write_atomic(cfg.out_dir() / "stream_snapshot.json", snapshot + "\n");
  std::cerr << n_verdicts << " verdicts, " << n_flagged << " flagged, " << n_errors
            << " rejected lines\n";
  std::cout << snapshot << "\n";
  return kExitOk;
}

int cmd_stats(const RunConfig& cfg) {
  const std::uint64_t seed = cfg.seed();
  const AuditInputs in = load_audit_inputs(cfg);
  const fs_sensitivity_options opts = cfg.sensitivity();

  char* records_raw = nullptr;
  check(fs_sensitivity_records(in.model.get(), in.test.get(), &opts, &records_raw), "records");
  const std::string records = take(records_raw);

  fs_stream* stream_raw = nullptr;
  check(fs_stream_create(&stream_raw), "stream");
  const Stream stream(stream_raw);
  std::stringstream lines(records);
  std::string line;
  while (std::getline(lines, line)) {
    if (line.empty()) continue;
    check(fs_stream_update(stream.get(), json::parse(line)["protected_sensitivity"].get<double>()),
          "stream");
  }
  char* snap_raw = nullptr;
  check(fs_stream_snapshot(stream.get(), &snap_raw), "snapshot");
  const std::string snapshot = take(snap_raw);

  const std::size_t probe_rows =
      std::min(cfg.num<std::size_t>("probe_rows", 10), fs_dataset_rows(in.test.get()));
  const double radius = cfg.num<double>("probe_radius", 0.1);
  const std::size_t samples = cfg.num<std::size_t>("probe_samples", 100);
  json probes = json::array();
  for (std::size_t r = 0; r < probe_rows; ++r) {
    char* probe_raw = nullptr;
    check(fs_smoothness_probe(in.model.get(), in.test.get(), r, radius, samples, seed + r, &opts,
                              &probe_raw),
          "smoothness probe");
    probes.push_back(json::parse(take(probe_raw)));
  }

  prepare_out_dir(cfg);
  write_atomic(cfg.out_dir() / "sensitivity_records.jsonl", records);
  write_atomic(cfg.out_dir() / "stream_stats.json", snapshot + "\n");
  write_atomic(cfg.out_dir() / "smoothness.json", probes.dump(2) + "\n");
  std::cout << snapshot << "\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fairsense: prediction-sensitivity fairness auditing for MLP classifiers"};
  app.require_subcommand(1);
  app.fallthrough();

  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir, protected_group, privileged, threshold, grid, train_path,
      test_path, input, model_path, schema_path, hidden, aggregation, label_positive,
      missing_marker, format;
  std::optional<std::size_t> epochs, batch_size;
  std::optional<double> learning_rate;
  bool logit = false;
  bool header = false;

  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--seed", seed, "random seed (required for train and stats)");
  app.add_option("--out-dir", out_dir, "output directory");
  app.add_option("--protected", protected_group, "protected feature group (default sex)");
  app.add_option("--privileged", privileged, "privileged category (default Male)");
  app.add_option("--threshold", threshold, "monitor threshold, number or 'inf'");
  app.add_option("--grid", grid, "comma-separated sweep thresholds or 'deciles'");
  app.add_option("--train", train_path, "training CSV");
  app.add_option("--test", test_path, "evaluation CSV");
  app.add_option("--input", input, "monitor input CSV lines ('-' for stdin)");
  app.add_option("--model", model_path, "model file (default <out-dir>/model.json)");
  app.add_option("--schema", schema_path, "schema file (default next to the model)");
  app.add_option("--hidden", hidden, "hidden layer widths, e.g. 64,32");
  app.add_option("--epochs", epochs);
  app.add_option("--batch-size", batch_size);
  app.add_option("--lr", learning_rate, "learning rate");
  app.add_option("--aggregation", aggregation, "l2 | max_abs | sum_abs");
  app.add_flag("--logit", logit, "differentiate the logit instead of the probability");
  app.add_option("--label-positive", label_positive, "raw label mapped to 1 (default >50K)");
  app.add_option("--missing-marker", missing_marker, "missing-value marker (default ?)");
  app.add_flag("--header", header, "input files start with a header row");
  app.add_option("--format", format, "'adult' or a JSON format file");

  auto* train = app.add_subcommand("train", "train a model; writes model, schema and trace");
  auto* audit = app.add_subcommand("audit", "group metrics and per-feature sensitivity distribution");
  auto* sweep = app.add_subcommand("sweep", "group metrics on kept predictions per threshold");
  auto* monitor = app.add_subcommand("monitor", "per-prediction verdicts over a CSV stream");
  auto* stats = app.add_subcommand("stats", "per-example sensitivities, stream statistics, smoothness");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  try {
    RunConfig cfg;
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) usage_error("cannot read config '" + config_path + "'");
      try {
        cfg.values = json::parse(in);
      } catch (const json::exception& e) {
        usage_error("config '" + config_path + "': " + e.what());
      }
      if (!cfg.values.is_object()) usage_error("config must be a JSON object");
    }
    auto set = [&](const char* key, const auto& opt) {
      if (opt) cfg.values[key] = *opt;
    };
    set("seed", seed);
    set("out_dir", out_dir);
    set("protected", protected_group);
    set("privileged", privileged);
    set("threshold", threshold);
    set("grid", grid);
    set("train", train_path);
    set("test", test_path);
    set("input", input);
    set("model", model_path);
    set("schema", schema_path);
    set("hidden", hidden);
    set("epochs", epochs);
    set("batch_size", batch_size);
    set("learning_rate", learning_rate);
    set("aggregation", aggregation);
    set("label_positive", label_positive);
    set("missing_marker", missing_marker);
    set("format", format);
    if (logit) cfg.values["output_space"] = "logit";
    if (header) cfg.values["has_header"] = true;

    try {
      if (*train) return cmd_train(cfg);
      if (*audit) return cmd_audit(cfg);
      if (*sweep) return cmd_sweep(cfg);
      if (*monitor) return cmd_monitor(cfg);
      if (*stats) return cmd_stats(cfg);
    } catch (const json::exception& e) {
      usage_error(std::string("config value: ") + e.what());
    }
  } catch (const CliError& e) {
    std::cerr << "fairsense: " << e.message << "\n";
    return e.code;
  } catch (const std::exception& e) {
    std::cerr << "fairsense: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}
