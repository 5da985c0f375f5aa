#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "fairsense/csv.hpp"
#include "fairsense/schema.hpp"
#include "fairsense/tensor.hpp"

namespace fairsense {

// Encoded feature matrix [N x D] with binary labels and the schema that maps
// columns back to feature groups.
class EncodedDataset {
 public:
  EncodedDataset(Tensor features, std::vector<int> labels, FeatureSchema schema);

  std::size_t size() const { return labels_.size(); }
  std::size_t width() const { return features_.dim(1); }
  const Tensor& features() const { return features_; }
  const std::vector<int>& labels() const { return labels_; }
  const FeatureSchema& schema() const { return schema_; }

  std::span<const double> row(std::size_t i) const {
    return features_.data().subspan(i * width(), width());
  }
  bool privileged(std::size_t i) const { return schema_.is_privileged(row(i)); }

  // Rows at `indices`, in the given order.
  EncodedDataset subset(std::span<const std::size_t> indices) const;

 private:
  Tensor features_;
  std::vector<int> labels_;
  FeatureSchema schema_;
};

// Encodes a single row of raw cells (file order). The label cell is ignored;
// `source_line` only feeds error messages.
std::vector<double> encode_row(std::span<const std::string> cells, const CsvFormat& format,
                               const FeatureSchema& schema, std::size_t source_line);

EncodedDataset encode(const RawTable& table, const FeatureSchema& schema);

// Deterministic shuffled split; the first part holds ceil(N * fraction) rows.
// Each part keeps the original row order.
std::pair<EncodedDataset, EncodedDataset> split(const EncodedDataset& dataset, double fraction,
                                                 std::uint64_t seed);

}  // namespace fairsense
