#include "fairsense/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fairsense/error.hpp"
#include "fairsense/rng.hpp"
#include "fairsense/text.hpp"

namespace fairsense {

EncodedDataset::EncodedDataset(Tensor features, std::vector<int> labels, FeatureSchema schema)
    : features_(std::move(features)), labels_(std::move(labels)), schema_(std::move(schema)) {
  if (labels_.empty()) throw Error(ErrorKind::kData, "dataset has no rows");
  if (features_.rank() != 2 || features_.dim(0) != labels_.size() ||
      features_.dim(1) != schema_.width()) {
    throw Error(ErrorKind::kDimension,
                "dataset features " + shape_string(features_.shape()) + " do not match " +
                    std::to_string(labels_.size()) + " labels and schema width " +
                    std::to_string(schema_.width()));
  }
  for (int y : labels_) {
    if (y != 0 && y != 1) throw Error(ErrorKind::kData, "labels must be 0 or 1");
  }
}

EncodedDataset EncodedDataset::subset(std::span<const std::size_t> indices) const {
  const std::size_t d = width();
  std::vector<double> values;
  values.reserve(indices.size() * d);
  std::vector<int> labels;
  labels.reserve(indices.size());
  for (std::size_t i : indices) {
    const auto r = row(i);
    values.insert(values.end(), r.begin(), r.end());
    labels.push_back(labels_[i]);
  }
  return EncodedDataset(Tensor::matrix(indices.size(), d, std::move(values)), std::move(labels),
                        schema_);
}

std::vector<double> encode_row(std::span<const std::string> cells, const CsvFormat& format,
                               const FeatureSchema& schema, std::size_t source_line) {
  std::vector<double> out(schema.width(), 0.0);
  for (const FeatureGroup& g : schema.groups()) {
    const std::size_t c = format.column_index(g.name);
    if (c >= cells.size()) {
      throw Error(ErrorKind::kParse, "line " + std::to_string(source_line) + ": missing column '" +
                                         g.name + "'");
    }
    const std::string& cell = cells[c];
    if (g.kind == GroupKind::kContinuous) {
      double v;
      try {
        v = parse_real(cell);
      } catch (const Error&) {
        v = std::nan("");
      }
      if (!std::isfinite(v)) {
        throw Error(ErrorKind::kParse, "line " + std::to_string(source_line) + ": column '" +
                                           g.name + "' value '" + cell +
                                           "' is not a finite number");
      }
      out[g.start] = (v - g.mean) / g.stddev;
      continue;
    }
    const std::size_t idx = g.category_index(cell);
    if (idx == std::string::npos) {
      throw Error(ErrorKind::kData, "line " + std::to_string(source_line) + ": column '" + g.name +
                                        "' value '" + cell + "' is out of vocabulary");
    }
    if (g.kind == GroupKind::kBinaryCategorical) {
      out[g.start] = static_cast<double>(idx);
    } else {
      out[g.start + idx] = 1.0;
    }
  }
  return out;
}

EncodedDataset encode(const RawTable& table, const FeatureSchema& schema) {
  if (table.rows.empty()) throw Error(ErrorKind::kData, "no data rows");
  const CsvFormat& format = table.format;
  const std::size_t label_col = format.column_index(schema.label_column());
  const std::size_t d = schema.width();
  std::vector<double> values;
  values.reserve(table.size() * d);
  std::vector<int> labels;
  labels.reserve(table.size());
  for (std::size_t r = 0; r < table.size(); ++r) {
    const auto& cells = table.rows[r];
    const std::size_t line = r < table.lines.size() ? table.lines[r] : r + 1;
    std::vector<double> encoded = encode_row(cells, format, schema, line);
    values.insert(values.end(), encoded.begin(), encoded.end());

    const std::string label = normalize_label(cells[label_col]);
    const auto& known = schema.label_values();
    if (std::find(known.begin(), known.end(), label) == known.end()) {
      throw Error(ErrorKind::kData, "line " + std::to_string(line) + ": label '" +
                                        cells[label_col] + "' is out of vocabulary");
    }
    labels.push_back(label == schema.label_positive() ? 1 : 0);
  }
  return EncodedDataset(Tensor::matrix(table.size(), d, std::move(values)), std::move(labels),
                        schema);
}

std::pair<EncodedDataset, EncodedDataset> split(const EncodedDataset& dataset, double fraction,
                                                 std::uint64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) {
    throw Error(ErrorKind::kInvalidArgument, "split fraction must lie in (0, 1)");
  }
  const std::size_t n = dataset.size();
  const auto first_size = static_cast<std::size_t>(std::ceil(static_cast<double>(n) * fraction));
  if (first_size == 0 || first_size >= n) {
    throw Error(ErrorKind::kInvalidArgument, "split of " + std::to_string(n) + " rows at " +
                                                 format_real(fraction) + " leaves an empty side");
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  std::vector<std::size_t> first(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(first_size));
  std::vector<std::size_t> second(order.begin() + static_cast<std::ptrdiff_t>(first_size), order.end());
  std::sort(first.begin(), first.end());
  std::sort(second.begin(), second.end());
  return {dataset.subset(first), dataset.subset(second)};
}

}  // namespace fairsense
