#include "fairsense/schema.hpp"


#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include <json.hpp>

#include "fairsense/error.hpp"
#include "fairsense/text.hpp"

namespace fairsense {

using nlohmann::json;

const char* to_string(GroupKind kind) {
  switch (kind) {
    case GroupKind::kContinuous: return "continuous";
    case GroupKind::kBinaryCategorical: return "binary_categorical";
    case GroupKind::kOneHotCategorical: return "one_hot_categorical";
  }
  return "continuous";
}

GroupKind group_kind_from_string(std::string_view s) {
  if (s == "continuous") return GroupKind::kContinuous;
  if (s == "binary_categorical") return GroupKind::kBinaryCategorical;
  if (s == "one_hot_categorical") return GroupKind::kOneHotCategorical;
  throw Error(ErrorKind::kParse, "unknown feature group kind '" + std::string(s) + "'");
}

std::size_t FeatureGroup::category_index(std::string_view value) const {
  const auto it = std::find(categories.begin(), categories.end(), value);
  return it == categories.end() ? std::string::npos
                                : static_cast<std::size_t>(it - categories.begin());
}

std::string normalize_label(std::string_view raw) {
  if (!raw.empty() && raw.back() == '.') raw.remove_suffix(1);
  return std::string(raw);
}

FeatureSchema::FeatureSchema(std::vector<FeatureGroup> groups, std::string protected_group,
                             std::string privileged_value, std::string label_column,
                             std::string label_positive, std::vector<std::string> label_values)
    : groups_(std::move(groups)),
      protected_(std::move(protected_group)),
      privileged_(std::move(privileged_value)),
      label_column_(std::move(label_column)),
      label_positive_(std::move(label_positive)),
      label_values_(std::move(label_values)) {
  validate();
}

void FeatureSchema::validate() const {
  if (groups_.empty()) throw Error(ErrorKind::kData, "schema has no feature groups");
  std::size_t expected_start = 0;
  std::set<std::string> names;
  for (const FeatureGroup& g : groups_) {
    if (!names.insert(g.name).second) {
      throw Error(ErrorKind::kData, "duplicate feature group '" + g.name + "'");
    }
    if (g.start != expected_start || g.end <= g.start) {
      throw Error(ErrorKind::kData, "feature group '" + g.name + "' span [" +
                                        std::to_string(g.start) + ", " + std::to_string(g.end) +
                                        ") is not contiguous with the previous group");
    }
    expected_start = g.end;
    switch (g.kind) {
      case GroupKind::kContinuous:
        if (g.width() != 1 || !(g.stddev > 0.0) || !std::isfinite(g.mean)) {
          throw Error(ErrorKind::kData, "continuous group '" + g.name +
                                            "' needs width 1 and positive finite stddev");
        }
        break;
      case GroupKind::kBinaryCategorical:
        if (g.width() != 1 || g.categories.size() != 2) {
          throw Error(ErrorKind::kData,
                      "binary group '" + g.name + "' needs width 1 and exactly 2 categories");
        }
        break;
      case GroupKind::kOneHotCategorical:
        if (g.width() != g.categories.size()) {
          throw Error(ErrorKind::kData,
                      "one-hot group '" + g.name + "' width must equal its category count");
        }
        break;
    }
  }
  if (!has_group(protected_)) {
    throw Error(ErrorKind::kData, "protected group '" + protected_ + "' is not in the schema");
  }
  const FeatureGroup& p = group(protected_);
  if (!p.categorical() || p.category_index(privileged_) == std::string::npos) {
    throw Error(ErrorKind::kData, "privileged value '" + privileged_ +
                                      "' is not a category of protected group '" + protected_ +
                                      "'");
  }
  if (std::find(label_values_.begin(), label_values_.end(), label_positive_) ==
      label_values_.end()) {
    throw Error(ErrorKind::kData,
                "positive label '" + label_positive_ + "' is not among the label values");
  }
}

bool FeatureSchema::has_group(std::string_view name) const {
  return std::any_of(groups_.begin(), groups_.end(),
                     [&](const FeatureGroup& g) { return g.name == name; });
}

std::size_t FeatureSchema::group_index(std::string_view name) const {
  for (std::size_t i = 0; i < groups_.size(); ++i) {
    if (groups_[i].name == name) return i;
  }
  throw Error(ErrorKind::kInvalidArgument, "unknown feature group '" + std::string(name) + "'");
}

const FeatureGroup& FeatureSchema::group(std::string_view name) const {
  return groups_[group_index(name)];
}

bool FeatureSchema::is_privileged(std::span<const double> row) const {
  const FeatureGroup& p = protected_group();
  const std::size_t idx = p.category_index(privileged_);
  if (p.kind == GroupKind::kBinaryCategorical) {
    return row[p.start] == static_cast<double>(idx);
  }
  return row[p.start + idx] == 1.0;
}

std::string FeatureSchema::decode(std::string_view group_name, std::span<const double> row) const {
  const FeatureGroup& g = group(group_name);
  switch (g.kind) {
    case GroupKind::kBinaryCategorical:
      return g.categories.at(row[g.start] == 1.0 ? 1 : 0);
    case GroupKind::kOneHotCategorical:
      for (std::size_t i = 0; i < g.width(); ++i) {
        if (row[g.start + i] == 1.0) return g.categories[i];
      }
      throw Error(ErrorKind::kData, "one-hot group '" + g.name + "' has no active column");
    case GroupKind::kContinuous:
      break;
  }
  throw Error(ErrorKind::kInvalidArgument, "group '" + g.name + "' is not categorical");
}

namespace {

json group_to_json(const FeatureGroup& g) {
  json j;
  j["name"] = g.name;
  j["kind"] = to_string(g.kind);
  j["span"] = {g.start, g.end};
  if (g.categorical()) {
    j["categories"] = g.categories;
  } else {
    j["mean"] = g.mean;
    j["stddev"] = g.stddev;
  }
  return j;
}

FeatureGroup group_from_json(const json& j) {
  FeatureGroup g;
  g.name = j.at("name").get<std::string>();
  g.kind = group_kind_from_string(j.at("kind").get<std::string>());
  const auto span = j.at("span").get<std::vector<std::size_t>>();
  if (span.size() != 2) throw Error(ErrorKind::kParse, "span must have two entries");
  g.start = span[0];
  g.end = span[1];
  if (g.categorical()) {
    g.categories = j.at("categories").get<std::vector<std::string>>();
  } else {
    g.mean = j.at("mean").get<double>();
    g.stddev = j.at("stddev").get<double>();
  }
  return g;
}

}  // namespace

std::string FeatureSchema::to_json() const {
  json j;
  j["format_version"] = kFormatVersion;
  j["groups"] = json::array();
  for (const FeatureGroup& g : groups_) j["groups"].push_back(group_to_json(g));
  j["protected"] = protected_;
  j["privileged_value"] = privileged_;
  j["label_column"] = label_column_;
  j["label_positive"] = label_positive_;
  j["label_values"] = label_values_;
  return j.dump(2);
}

FeatureSchema FeatureSchema::from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    const int version = j.at("format_version").get<int>();
    if (version != kFormatVersion) {
      throw Error(ErrorKind::kMismatch, "schema format version " + std::to_string(version) +
                                            " is not supported (expected " +
                                            std::to_string(kFormatVersion) + ")");
    }
    std::vector<FeatureGroup> groups;
    for (const json& g : j.at("groups")) groups.push_back(group_from_json(g));
    return FeatureSchema(std::move(groups), j.at("protected").get<std::string>(),
                         j.at("privileged_value").get<std::string>(),
                         j.at("label_column").get<std::string>(),
                         j.at("label_positive").get<std::string>(),
                         j.at("label_values").get<std::vector<std::string>>());
  } catch (const json::exception& e) {
    throw Error(ErrorKind::kParse, std::string("schema json: ") + e.what());
  }
}

std::string FeatureSchema::fingerprint() const { return sha256_hex(to_json()); }

FeatureSchema fit_schema(const RawTable& table, const std::string& protected_group,
                         const std::string& privileged_value, const std::string& label_positive,
                         const EncodingPolicy& policy) {
  const CsvFormat& format = table.format;
  const std::size_t label_col = format.label_index();
  {
    const std::size_t p = format.column_index(protected_group);
    if (p == label_col || format.columns[p].kind != ColumnKind::kCategorical) {
      throw Error(ErrorKind::kInvalidArgument,
                  "protected column '" + protected_group + "' must be a categorical feature");
    }
  }
  if (table.rows.empty()) throw Error(ErrorKind::kData, "no data rows");

  std::vector<FeatureGroup> groups;
  std::size_t offset = 0;
  for (std::size_t c = 0; c < format.width(); ++c) {
    if (c == label_col) continue;
    FeatureGroup g;
    g.name = format.columns[c].name;
    g.start = offset;
    if (format.columns[c].kind == ColumnKind::kContinuous) {
      g.kind = GroupKind::kContinuous;
      double sum = 0.0;
      std::vector<double> values;
      values.reserve(table.size());
      for (std::size_t r = 0; r < table.size(); ++r) {
        const double v = parse_real(table.rows[r][c]);
        if (!std::isfinite(v)) {
          throw Error(ErrorKind::kParse, "line " + std::to_string(table.lines[r]) +
                                             ": column '" + g.name + "' value '" +
                                             table.rows[r][c] + "' is not a finite number");
        }
        values.push_back(v);
        sum += v;
      }
      const double mean = sum / static_cast<double>(values.size());
      double ss = 0.0;
      for (double v : values) ss += (v - mean) * (v - mean);
      const double stddev = std::sqrt(ss / static_cast<double>(values.size()));
      if (!(stddev > 0.0)) {
        throw Error(ErrorKind::kData, "continuous column '" + g.name + "' is constant");
      }
      g.mean = mean;
      g.stddev = stddev;
      g.end = offset + 1;
    } else {
      std::set<std::string> vocab;
      for (const auto& row : table.rows) vocab.insert(row[c]);
      g.categories.assign(vocab.begin(), vocab.end());
      if (g.name == protected_group) {
        const std::size_t idx = g.category_index(privileged_value);
        if (idx == std::string::npos) {
          throw Error(ErrorKind::kData, "privileged value '" + privileged_value +
                                            "' does not occur in protected column '" +
                                            protected_group + "'");
        }
        // Privileged category encodes as 1 in the binary layout.
        if (g.categories.size() == 2 && idx == 0) std::swap(g.categories[0], g.categories[1]);
      }
      if (g.categories.size() == 2 && policy.binary_as_single_column) {
        g.kind = GroupKind::kBinaryCategorical;
        g.end = offset + 1;
      } else {
        g.kind = GroupKind::kOneHotCategorical;
        g.end = offset + g.categories.size();
      }
    }
    offset = g.end;
    groups.push_back(std::move(g));
  }

  std::set<std::string> labels;
  for (const auto& row : table.rows) labels.insert(normalize_label(row[label_col]));
  const std::string positive = normalize_label(label_positive);
  if (!labels.contains(positive)) {
    throw Error(ErrorKind::kData, "positive label '" + label_positive + "' does not occur in column '" +
                                      format.label_column + "'");
  }
  if (labels.size() > 2) {
    throw Error(ErrorKind::kData, "label column '" + format.label_column + "' has " +
                                      std::to_string(labels.size()) + " distinct values, expected 2");
  }
  return FeatureSchema(std::move(groups), protected_group, privileged_value, format.label_column,
                       positive, std::vector<std::string>(labels.begin(), labels.end()));
}

}  // namespace fairsense
