#include "fairsense/model.hpp"

#include <cmath>
#include <numeric>

#include <json.hpp>

#include "fairsense/error.hpp"
#include "fairsense/io.hpp"
#include "fairsense/rng.hpp"

namespace fairsense {

using nlohmann::json;

namespace {

constexpr const char* kModelFormat = "fairsense-mlp";

void check_layers(const std::vector<DenseLayer>& layers) {
  if (layers.empty()) throw Error(ErrorKind::kInvalidArgument, "model needs at least one layer");
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const DenseLayer& layer = layers[l];
    if (layer.weights.rank() != 2 || layer.bias.rank() != 1 ||
        layer.bias.dim(0) != layer.weights.dim(0)) {
      throw Error(ErrorKind::kDimension, "layer " + std::to_string(l) + " weights " +
                                             shape_string(layer.weights.shape()) + " and bias " +
                                             shape_string(layer.bias.shape()) + " do not conform");
    }
    if (l > 0 && layer.weights.dim(1) != layers[l - 1].weights.dim(0)) {
      throw Error(ErrorKind::kDimension,
                  "layer " + std::to_string(l) + " expects " +
                      std::to_string(layer.weights.dim(1)) + " inputs but layer " +
                      std::to_string(l - 1) + " produces " + std::to_string(layers[l - 1].weights.dim(0)));
    }
  }
  if (layers.back().weights.dim(0) != 1) {
    throw Error(ErrorKind::kDimension, "output layer must have width 1");
  }
}

}  // namespace

MlpModel::MlpModel(std::vector<DenseLayer> layers) : layers_(std::move(layers)) {
  check_layers(layers_);
}

MlpModel MlpModel::init(std::span<const std::size_t> layer_dims, std::uint64_t seed) {
  if (layer_dims.size() < 2) {
    throw Error(ErrorKind::kInvalidArgument, "layer dims need an input and an output width");
  }
  for (std::size_t d : layer_dims) {
    if (d == 0) throw Error(ErrorKind::kInvalidArgument, "layer dims must be positive");
  }
  if (layer_dims.back() != 1) {
    throw Error(ErrorKind::kInvalidArgument, "last layer dim must be 1");
  }
  Rng rng(seed);
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    const std::size_t fan_in = layer_dims[l];
    const std::size_t fan_out = layer_dims[l + 1];
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Tensor w({fan_out, fan_in});
    for (double& v : w.data()) v = rng.uniform(-limit, limit);
    layers.push_back({std::move(w), Tensor({fan_out})});
  }
  MlpModel model(std::move(layers));
  model.metadata_.seed = seed;
  return model;
}

std::vector<std::size_t> MlpModel::layer_dims() const {
  std::vector<std::size_t> dims{input_width()};
  for (const DenseLayer& l : layers_) dims.push_back(l.weights.dim(0));
  return dims;
}

void MlpModel::check_input(std::span<const double> x) const {
  if (x.size() != input_width()) {
    throw Error(ErrorKind::kDimension, "input has " + std::to_string(x.size()) +
                                           " features, model expects " +
                                           std::to_string(input_width()));
  }
}

ForwardTrace MlpModel::record(Tape& tape, std::span<const double> x, LeafKind parameter_kind,
                              LeafKind input_kind) const {
  check_input(x);
  ForwardTrace trace;
  trace.input = tape.leaf(Tensor::vector({x.begin(), x.end()}), input_kind);
  NodeId h = trace.input;
  for (std::size_t l = 0; l < layers_.size(); ++l) {
    const NodeId w = tape.leaf(layers_[l].weights, parameter_kind);
    const NodeId b = tape.leaf(layers_[l].bias, parameter_kind);
    trace.weights.push_back(w);
    trace.biases.push_back(b);
    const NodeId pre = tape.add(tape.matvec(w, h), b);
    h = l + 1 < layers_.size() ? tape.relu(pre) : pre;
  }
  trace.logit = h;
  trace.probability = tape.sigmoid(h);
  return trace;
}

double MlpModel::predict(std::span<const double> x) const {
  Tape tape;
  const ForwardTrace t = record(tape, x, LeafKind::kConstant, LeafKind::kConstant);
  return tape.value(t.probability)[0];
}

double MlpModel::logit(std::span<const double> x) const {
  Tape tape;
  const ForwardTrace t = record(tape, x, LeafKind::kConstant, LeafKind::kConstant);
  return tape.value(t.logit)[0];
}

bool operator==(const MlpModel& a, const MlpModel& b) {
  if (a.layers_.size() != b.layers_.size()) return false;
  for (std::size_t l = 0; l < a.layers_.size(); ++l) {
    if (!(a.layers_[l].weights == b.layers_[l].weights) ||
        !(a.layers_[l].bias == b.layers_[l].bias)) {
      return false;
    }
  }
  return a.schema_fingerprint_ == b.schema_fingerprint_;
}

std::string MlpModel::to_json() const {
  json j;
  j["format"] = kModelFormat;
  j["format_version"] = kFormatVersion;
  j["layer_dims"] = layer_dims();
  j["hidden_activation"] = "relu";
  j["output_activation"] = "sigmoid";
  j["layers"] = json::array();
  for (const DenseLayer& l : layers_) {
    json layer;
    layer["weights"] = std::vector<double>(l.weights.data().begin(), l.weights.data().end());
    layer["bias"] = std::vector<double>(l.bias.data().begin(), l.bias.data().end());
    j["layers"].push_back(std::move(layer));
  }
  j["schema_fingerprint"] = schema_fingerprint_;
  j["training"] = {{"seed", metadata_.seed},
                   {"epochs", metadata_.epochs},
                   {"learning_rate", metadata_.learning_rate},
                   {"batch_size", metadata_.batch_size}};
  return j.dump(1) + "\n";
}

MlpModel MlpModel::from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    if (j.at("format").get<std::string>() != kModelFormat) {
      throw Error(ErrorKind::kMismatch, "not a " + std::string(kModelFormat) + " document");
    }
    const int version = j.at("format_version").get<int>();
    if (version != kFormatVersion) {
      throw Error(ErrorKind::kMismatch, "model format version " + std::to_string(version) +
                                            " is not supported (expected " +
                                            std::to_string(kFormatVersion) + ")");
    }
    if (j.at("hidden_activation") != "relu" || j.at("output_activation") != "sigmoid") {
      throw Error(ErrorKind::kMismatch, "unsupported activations");
    }
    const auto dims = j.at("layer_dims").get<std::vector<std::size_t>>();
    const json& layers_json = j.at("layers");
    if (dims.size() != layers_json.size() + 1) {
      throw Error(ErrorKind::kParse, "layer_dims and layers disagree");
    }
    std::vector<DenseLayer> layers;
    for (std::size_t l = 0; l < layers_json.size(); ++l) {
      auto w = layers_json[l].at("weights").get<std::vector<double>>();
      auto b = layers_json[l].at("bias").get<std::vector<double>>();
      layers.push_back({Tensor::matrix(dims[l + 1], dims[l], std::move(w)),
                        Tensor::vector(std::move(b))});
    }
    MlpModel model(std::move(layers));
    model.schema_fingerprint_ = j.at("schema_fingerprint").get<std::string>();
    const json& t = j.at("training");
    model.metadata_.seed = t.at("seed").get<std::uint64_t>();
    model.metadata_.epochs = t.at("epochs").get<std::size_t>();
    model.metadata_.learning_rate = t.at("learning_rate").get<double>();
    model.metadata_.batch_size = t.at("batch_size").get<std::size_t>();
    return model;
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("model json: ") + e.what());
  }
}

StepResult sgd_step(MlpModel& model, const EncodedDataset& data, std::span<const std::size_t> rows,
                    double learning_rate) {
  if (rows.empty()) throw Error(ErrorKind::kInvalidArgument, "empty batch");
  auto& layers = model.mutable_layers();
  Tape tape;
  std::vector<NodeId> w_ids, b_ids;
  for (const DenseLayer& l : layers) {
    w_ids.push_back(tape.weight(l.weights));
    b_ids.push_back(tape.weight(l.bias));
  }
  StepResult result;
  std::vector<NodeId> losses;
  losses.reserve(rows.size());
  for (std::size_t r : rows) {
    const auto x = data.row(r);
    NodeId h = tape.constant(Tensor::vector({x.begin(), x.end()}));
    for (std::size_t l = 0; l < layers.size(); ++l) {
      const NodeId pre = tape.add(tape.matvec(w_ids[l], h), b_ids[l]);
      h = l + 1 < layers.size() ? tape.relu(pre) : pre;
    }
    const int y = data.labels()[r];
    if ((tape.value(h)[0] >= 0.0 ? 1 : 0) == y) ++result.correct;
    losses.push_back(tape.bce_with_logits(h, y));
  }
  const NodeId loss = tape.mean(losses);
  result.loss = tape.value(loss)[0];
  if (!std::isfinite(result.loss)) return result;

  const Gradients grads = tape.backward(loss);
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Tensor& gw = grads.of(w_ids[l]);
    const Tensor& gb = grads.of(b_ids[l]);
    auto w = layers[l].weights.data();
    auto b = layers[l].bias.data();
    for (std::size_t k = 0; k < w.size(); ++k) w[k] -= learning_rate * gw[k];
    for (std::size_t k = 0; k < b.size(); ++k) b[k] -= learning_rate * gb[k];
  }
  return result;
}

TrainResult train(MlpModel model, const EncodedDataset& data, const TrainOptions& options) {
  if (options.epochs == 0 || options.batch_size == 0) {
    throw Error(ErrorKind::kInvalidArgument, "epochs and batch size must be positive");
  }
  if (!(options.learning_rate > 0.0) || !std::isfinite(options.learning_rate)) {
    throw Error(ErrorKind::kInvalidArgument, "learning rate must be positive and finite");
  }
  if (data.width() != model.input_width()) {
    throw Error(ErrorKind::kDimension, "dataset width " + std::to_string(data.width()) +
                                           " does not match model input width " +
                                           std::to_string(model.input_width()));
  }
  TrainResult result;
  Rng rng(options.seed);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    rng.shuffle(std::span<std::size_t>(order));
    double loss_sum = 0.0;
    std::size_t correct = 0;
    std::size_t batch = 0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), start + options.batch_size);
      const std::span<const std::size_t> rows(order.data() + start, end - start);
      const StepResult step = sgd_step(model, data, rows, options.learning_rate);
      bool finite = std::isfinite(step.loss);
      for (const DenseLayer& l : model.layers()) {
        finite = finite && l.weights.all_finite() && l.bias.all_finite();
      }
      if (!finite) {
        throw Error(ErrorKind::kNumeric, "non-finite loss at epoch " + std::to_string(epoch) +
                                             ", batch " + std::to_string(batch) +
                                             " (learning rate too large?)");
      }
      loss_sum += step.loss * static_cast<double>(rows.size());
      correct += step.correct;
    }
    const double n = static_cast<double>(order.size());
    result.trace.push_back({epoch, loss_sum / n, static_cast<double>(correct) / n});
  }
  model.set_metadata({options.seed, options.epochs, options.learning_rate, options.batch_size});
  result.model = std::move(model);
  return result;
}

void save_model(const MlpModel& model, const std::filesystem::path& path) {
  write_file_atomic(path, model.to_json());
}

MlpModel load_model(const std::filesystem::path& path,
                    const std::optional<std::string>& expected_fingerprint) {
  MlpModel model = MlpModel::from_json(read_file(path));
  if (expected_fingerprint && model.schema_fingerprint() != *expected_fingerprint) {
    throw Error(ErrorKind::kMismatch, "model '" + path.string() +
                                          "' was trained against schema " +
                                          model.schema_fingerprint() + ", not " +
                                          *expected_fingerprint);
  }
  return model;
}

}  // namespace fairsense
