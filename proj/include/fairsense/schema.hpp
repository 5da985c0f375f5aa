#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairsense/csv.hpp"

namespace fairsense {

enum class GroupKind { kContinuous, kBinaryCategorical, kOneHotCategorical };

const char* to_string(GroupKind kind);
GroupKind group_kind_from_string(std::string_view s);

// One named input feature and the encoded columns [start, end) it occupies.
struct FeatureGroup {
  std::string name;
  GroupKind kind = GroupKind::kContinuous;
  std::size_t start = 0;
  std::size_t end = 0;
  // Categorical groups: vocabulary in encoding order. A binary group encodes
  // categories[1] as 1.0 and categories[0] as 0.0; a one-hot group sets column
  // start + index.
  std::vector<std::string> categories;
  // Continuous groups: train-split standardization statistics.
  double mean = 0.0;
  double stddev = 1.0;

  std::size_t width() const { return end - start; }
  bool categorical() const { return kind != GroupKind::kContinuous; }
  std::size_t category_index(std::string_view value) const;  // npos if absent

  friend bool operator==(const FeatureGroup&, const FeatureGroup&) = default;
};

struct EncodingPolicy {
  // Two-category features become one 0/1 column instead of a width-2 one-hot.
  bool binary_as_single_column = true;
};

class FeatureSchema {
 public:
  static constexpr int kFormatVersion = 1;

  FeatureSchema() = default;
  FeatureSchema(std::vector<FeatureGroup> groups, std::string protected_group,
                std::string privileged_value, std::string label_column,
                std::string label_positive, std::vector<std::string> label_values);

  const std::vector<FeatureGroup>& groups() const { return groups_; }
  const FeatureGroup& group(std::string_view name) const;
  std::size_t group_index(std::string_view name) const;
  bool has_group(std::string_view name) const;
  std::size_t width() const { return groups_.empty() ? 0 : groups_.back().end; }

  const std::string& protected_name() const { return protected_; }
  const FeatureGroup& protected_group() const { return group(protected_); }
  const std::string& privileged_value() const { return privileged_; }
  const std::string& label_column() const { return label_column_; }
  const std::string& label_positive() const { return label_positive_; }
  const std::vector<std::string>& label_values() const { return label_values_; }

  // Membership of an encoded row in the privileged group.
  bool is_privileged(std::span<const double> row) const;
  // Category label stored in an encoded row for a categorical group.
  std::string decode(std::string_view group_name, std::span<const double> row) const;

  // Canonical JSON text; stable key order.
  std::string to_json() const;
  static FeatureSchema from_json(std::string_view text);
  // Hex SHA-256 of to_json().
  std::string fingerprint() const;

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;

 private:
  void validate() const;

  std::vector<FeatureGroup> groups_;
  std::string protected_;
  std::string privileged_;
  std::string label_column_;
  std::string label_positive_;
  std::vector<std::string> label_values_;
};

// Labels are compared after stripping one trailing '.', which reconciles the
// official Adult test file (">50K.") with the train file (">50K").
std::string normalize_label(std::string_view raw);

// Fits vocabularies and standardization statistics on `table` only.
FeatureSchema fit_schema(const RawTable& table, const std::string& protected_group,
                         const std::string& privileged_value, const std::string& label_positive,
                         const EncodingPolicy& policy = {});

}  // namespace fairsense
