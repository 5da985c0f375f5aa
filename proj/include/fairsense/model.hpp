#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairsense/dataset.hpp"
#include "fairsense/tape.hpp"
#include "fairsense/tensor.hpp"

namespace fairsense {

struct DenseLayer {
  Tensor weights;  // [out x in]
  Tensor bias;     // [out]
};

struct TrainingMetadata {
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  double learning_rate = 0.0;
  std::size_t batch_size = 0;
};

// Leaf and output ids of one recorded forward pass.
struct ForwardTrace {
  NodeId input;
  std::vector<NodeId> weights;  // per layer
  std::vector<NodeId> biases;   // per layer
  NodeId logit;
  NodeId probability;
};

// Fully connected binary classifier: ReLU hidden layers, sigmoid output.
class MlpModel {
 public:
  static constexpr int kFormatVersion = 1;

  MlpModel() = default;
  explicit MlpModel(std::vector<DenseLayer> layers);

  // Glorot-uniform weights, zero biases. dims = {D, h1, ..., 1}.
  static MlpModel init(std::span<const std::size_t> layer_dims, std::uint64_t seed);

  std::vector<std::size_t> layer_dims() const;
  std::size_t input_width() const { return layers_.front().weights.dim(1); }
  const std::vector<DenseLayer>& layers() const { return layers_; }
  std::vector<DenseLayer>& mutable_layers() { return layers_; }

  const std::string& schema_fingerprint() const { return schema_fingerprint_; }
  void set_schema_fingerprint(std::string fp) { schema_fingerprint_ = std::move(fp); }
  const TrainingMetadata& metadata() const { return metadata_; }
  void set_metadata(const TrainingMetadata& m) { metadata_ = m; }

  // Records the forward pass of `x` on `tape`. Parameters become leaves of
  // `parameter_kind`, the input a leaf of `input_kind`.
  ForwardTrace record(Tape& tape, std::span<const double> x, LeafKind parameter_kind,
                      LeafKind input_kind) const;

  double predict(std::span<const double> x) const;
  double logit(std::span<const double> x) const;

  std::string to_json() const;
  static MlpModel from_json(std::string_view text);

  friend bool operator==(const MlpModel&, const MlpModel&);

 private:
  void check_input(std::span<const double> x) const;

  std::vector<DenseLayer> layers_;
  std::string schema_fingerprint_;
  TrainingMetadata metadata_;
};

struct TrainOptions {
  std::size_t epochs = 20;
  std::size_t batch_size = 128;
  double learning_rate = 0.05;
  std::uint64_t seed = 0;
};

struct EpochStats {
  std::size_t epoch = 0;
  double loss = 0.0;      // mean BCE over the epoch's examples
  double accuracy = 0.0;  // fraction correct at the 0.5 threshold, pre-update
};

struct TrainResult {
  MlpModel model;
  std::vector<EpochStats> trace;
};

// One plain SGD step on the mean fused BCE loss over `rows` of `data`.
// Returns the batch loss and the number of correct pre-update decisions.
struct StepResult {
  double loss = 0.0;
  std::size_t correct = 0;
};
StepResult sgd_step(MlpModel& model, const EncodedDataset& data, std::span<const std::size_t> rows,
                    double learning_rate);

// Mini-batch SGD with a seeded per-epoch shuffle. Throws Error(kNumeric)
// naming the epoch and batch when the loss or weights stop being finite.
TrainResult train(MlpModel model, const EncodedDataset& data, const TrainOptions& options);

void save_model(const MlpModel& model, const std::filesystem::path& path);
// When `expected_fingerprint` is given, a model fitted against another schema
// is rejected with Error(kMismatch).
MlpModel load_model(const std::filesystem::path& path,
                    const std::optional<std::string>& expected_fingerprint = std::nullopt);

}  // namespace fairsense
