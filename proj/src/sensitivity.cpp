#include "fairsense/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "fairsense/error.hpp"
#include "fairsense/rng.hpp"
#include "fairsense/text.hpp"

namespace fairsense {

const char* to_string(Aggregation a) {
  switch (a) {
    case Aggregation::kL2: return "l2";
    case Aggregation::kMaxAbs: return "max_abs";
    case Aggregation::kSumAbs: return "sum_abs";
  }
  return "l2";
}

Aggregation aggregation_from_string(std::string_view s) {
  if (s == "l2") return Aggregation::kL2;
  if (s == "max_abs") return Aggregation::kMaxAbs;
  if (s == "sum_abs") return Aggregation::kSumAbs;
  throw Error(ErrorKind::kInvalidArgument, "unknown aggregation '" + std::string(s) + "'");
}

InputGradient input_gradient(const MlpModel& model, std::span<const double> x, OutputSpace space) {
  Tape tape;
  const ForwardTrace t = model.record(tape, x, LeafKind::kConstant, LeafKind::kInput);
  const NodeId out = space == OutputSpace::kProbability ? t.probability : t.logit;
  const Gradients grads = tape.backward(out);
  const Tensor& g = grads.of(t.input);
  return {tape.value(t.probability)[0], {g.data().begin(), g.data().end()}};
}

double aggregate(std::span<const double> partials, const FeatureGroup& group, Aggregation rule) {
  if (group.end > partials.size()) {
    throw Error(ErrorKind::kDimension, "group '" + group.name + "' span exceeds gradient width " +
                                           std::to_string(partials.size()));
  }
  const auto cols = partials.subspan(group.start, group.width());
  if (cols.size() == 1) return std::abs(cols[0]);
  double acc = 0.0;
  switch (rule) {
    case Aggregation::kL2:
      for (double p : cols) acc += p * p;
      return std::sqrt(acc);
    case Aggregation::kMaxAbs:
      for (double p : cols) acc = std::max(acc, std::abs(p));
      return acc;
    case Aggregation::kSumAbs:
      for (double p : cols) acc += std::abs(p);
      return acc;
  }
  return acc;
}

namespace {

void check_width(const MlpModel& model, const FeatureSchema& schema, std::span<const double> x) {
  if (schema.width() != model.input_width() || x.size() != schema.width()) {
    throw Error(ErrorKind::kDimension, "input width " + std::to_string(x.size()) +
                                           ", schema width " + std::to_string(schema.width()) +
                                           " and model width " +
                                           std::to_string(model.input_width()) + " must agree");
  }
}

}  // namespace

double prediction_sensitivity(const MlpModel& model, const FeatureSchema& schema,
                              std::span<const double> x, std::string_view group,
                              const SensitivityOptions& options) {
  check_width(model, schema, x);
  const FeatureGroup& g = schema.group(group);
  const InputGradient grad = input_gradient(model, x, options.space);
  return aggregate(grad.partials, g, options.aggregation);
}

SensitivityRecord profile(const MlpModel& model, const FeatureSchema& schema,
                          std::span<const double> x, const SensitivityOptions& options) {
  check_width(model, schema, x);
  const InputGradient grad = input_gradient(model, x, options.space);
  SensitivityRecord rec;
  rec.prediction = grad.prediction;
  rec.decision = grad.prediction >= 0.5 ? 1 : 0;
  rec.per_group.reserve(schema.groups().size());
  for (const FeatureGroup& g : schema.groups()) {
    const double v = aggregate(grad.partials, g, options.aggregation);
    rec.per_group.push_back({g.name, v});
    if (g.name == schema.protected_name()) rec.protected_sensitivity = v;
  }
  return rec;
}

std::vector<SensitivityRecord> profile_all(const MlpModel& model, const EncodedDataset& dataset,
                                           const SensitivityOptions& options) {
  std::vector<SensitivityRecord> out;
  out.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out.push_back(profile(model, dataset.schema(), dataset.row(i), options));
  }
  return out;
}

std::string to_json_line(const SensitivityRecord& record) {
  nlohmann::ordered_json j;
  j["prediction"] = record.prediction;
  j["decision"] = record.decision;
  j["protected_sensitivity"] = record.protected_sensitivity;
  nlohmann::ordered_json groups = nlohmann::ordered_json::object();
  for (const GroupSensitivity& g : record.per_group) groups[g.group] = g.value;
  j["per_group"] = std::move(groups);
  return j.dump();
}

double quantile_sorted(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw Error(ErrorKind::kData, "quantile of an empty sample");
  const double h = static_cast<double>(sorted.size() - 1) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BoxSummary summarize(std::vector<double> values) {
  if (values.empty()) throw Error(ErrorKind::kData, "cannot summarize an empty sample");
  std::sort(values.begin(), values.end());
  BoxSummary s;
  s.min = values.front();
  s.max = values.back();
  s.q1 = quantile_sorted(values, 0.25);
  s.median = quantile_sorted(values, 0.5);
  s.q3 = quantile_sorted(values, 0.75);
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  const double iqr = s.q3 - s.q1;
  const double low_fence = s.q1 - 1.5 * iqr;
  const double high_fence = s.q3 + 1.5 * iqr;
  s.whisker_low = s.max;
  s.whisker_high = s.min;
  for (double v : values) {
    if (v < low_fence || v > high_fence) {
      ++s.n_outliers;
      continue;
    }
    s.whisker_low = std::min(s.whisker_low, v);
    s.whisker_high = std::max(s.whisker_high, v);
  }
  return s;
}

std::vector<GroupDistribution> batch_distribution(const std::vector<SensitivityRecord>& records) {
  if (records.empty()) throw Error(ErrorKind::kData, "dataset is empty");
  std::vector<GroupDistribution> out;
  const std::size_t n_groups = records.front().per_group.size();
  for (std::size_t g = 0; g < n_groups; ++g) {
    std::vector<double> values;
    values.reserve(records.size());
    for (const SensitivityRecord& r : records) values.push_back(r.per_group[g].value);
    out.push_back({records.front().per_group[g].group, summarize(std::move(values))});
  }
  return out;
}

std::vector<GroupDistribution> batch_distribution(const MlpModel& model,
                                                  const EncodedDataset& dataset,
                                                  const SensitivityOptions& options) {
  return batch_distribution(profile_all(model, dataset, options));
}

std::string distribution_csv(const std::vector<GroupDistribution>& distribution) {
  std::ostringstream out;
  out << "group,min,q1,median,q3,max,mean,whisker_low,whisker_high,n_outliers\n";
  for (const GroupDistribution& d : distribution) {
    const BoxSummary& s = d.summary;
    out << d.group << ',' << format_real(s.min) << ',' << format_real(s.q1) << ','
        << format_real(s.median) << ',' << format_real(s.q3) << ',' << format_real(s.max) << ','
        << format_real(s.mean) << ',' << format_real(s.whisker_low) << ','
        << format_real(s.whisker_high) << ',' << s.n_outliers << '\n';
  }
  return out.str();
}

SmoothnessSummary smoothness_probe(const MlpModel& model, const FeatureSchema& schema,
                                   std::span<const double> x, double radius, std::size_t n,
                                   std::uint64_t seed, const SensitivityOptions& options) {
  check_width(model, schema, x);
  if (!(radius >= 0.0) || !std::isfinite(radius)) {
    throw Error(ErrorKind::kInvalidArgument, "probe radius must be finite and non-negative");
  }
  if (n == 0) throw Error(ErrorKind::kInvalidArgument, "probe needs at least one sample");
  std::vector<std::size_t> continuous;
  for (const FeatureGroup& g : schema.groups()) {
    if (g.kind == GroupKind::kContinuous) continuous.push_back(g.start);
  }
  if (continuous.empty()) {
    throw Error(ErrorKind::kInvalidArgument, "smoothness probe needs at least one continuous column");
  }
  const FeatureGroup& prot = schema.protected_group();
  Rng rng(seed);
  std::vector<double> point(x.begin(), x.end());
  std::vector<double> values;
  values.reserve(n);
  for (std::size_t k = 0; k < n; ++k) {
    for (std::size_t c : continuous) point[c] = x[c] + rng.uniform(-radius, radius);
    const InputGradient grad = input_gradient(model, point, options.space);
    values.push_back(aggregate(grad.partials, prot, options.aggregation));
  }
  SmoothnessSummary s;
  s.samples = n;
  s.min = *std::min_element(values.begin(), values.end());
  s.max = *std::max_element(values.begin(), values.end());
  // Welford updates keep identical samples at exactly zero spread.
  double m2 = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    const double delta = values[k] - s.mean;
    s.mean += delta / static_cast<double>(k + 1);
    m2 += delta * (values[k] - s.mean);
  }
  if (n > 1) s.stddev = std::sqrt(m2 / static_cast<double>(n - 1));
  return s;
}

}  // namespace fairsense
