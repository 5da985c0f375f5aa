#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "fairsense/csv.hpp"
#include "fairsense/dataset.hpp"
#include "fairsense/error.hpp"
#include "fairsense/sensitivity.hpp"
#include "fairsense/tape.hpp"
#include "test_support.hpp"

namespace fairsense {
namespace {

using testing::rel_err;

MlpModel one_layer(std::vector<double> w, double b) {
  const std::size_t n = w.size();
  return MlpModel({DenseLayer{Tensor::matrix(1, n, std::move(w)), Tensor::vector({b})}});
}

// Columns: a (0), b (1), sex (2), colour one-hot (3..5).
FeatureSchema mixed_schema() {
  std::vector<FeatureGroup> groups{
      {"a", GroupKind::kContinuous, 0, 1, {}, 0.0, 1.0},
      {"b", GroupKind::kContinuous, 1, 2, {}, 0.0, 1.0},
      {"sex", GroupKind::kBinaryCategorical, 2, 3, {"Female", "Male"}, 0.0, 1.0},
      {"colour", GroupKind::kOneHotCategorical, 3, 6, {"blue", "green", "red"}, 0.0, 1.0},
  };
  return FeatureSchema(std::move(groups), "sex", "Male", "y", "1", {"0", "1"});
}

TEST(PredictionSensitivity, OneLayerClosedForm) {
  const FeatureSchema schema = testing::tiny_schema();
  const MlpModel m = one_layer({2, -3, 0}, 0.0);
  const std::vector<double> x{1, 1, 0};
  // sigma(-1) (1 - sigma(-1)) * 3 = 0.58983579972444556 (50-digit evaluation).
  EXPECT_NEAR(prediction_sensitivity(m, schema, x, "b"), 0.58983579972444556, 1e-15);
  EXPECT_NEAR(prediction_sensitivity(m, schema, x, "a"), 0.58983579972444556 * 2.0 / 3.0, 1e-15);
  SensitivityOptions logit;
  logit.space = OutputSpace::kLogit;
  EXPECT_EQ(prediction_sensitivity(m, schema, x, "b", logit), 3.0);
}

TEST(PredictionSensitivity, NoPathMeansExactlyZero) {
  Rng rng(3);
  const FeatureSchema schema = mixed_schema();
  MlpModel m = testing::random_mlp(rng, {6, 5, 3, 1});
  for (std::size_t r = 0; r < 5; ++r) {
    for (std::size_t c = 3; c < 6; ++c) m.mutable_layers()[0].weights.at(r, c) = 0.0;
  }
  const auto x = testing::random_vector(rng, 6);
  EXPECT_EQ(prediction_sensitivity(m, schema, x, "colour"), 0.0);
  EXPECT_GT(prediction_sensitivity(m, schema, x, "a"), 0.0);
}

TEST(PredictionSensitivity, ZeroModelIsZeroEverywhere) {
  const FeatureSchema schema = mixed_schema();
  MlpModel m = MlpModel::init(std::vector<std::size_t>{6, 4, 1}, 1);
  for (DenseLayer& l : m.mutable_layers()) {
    for (double& w : l.weights.data()) w = 0.0;
  }
  const SensitivityRecord r = profile(m, schema, std::vector<double>{1, 2, 1, 0, 1, 0});
  EXPECT_EQ(r.per_group.size(), 4u);
  for (const GroupSensitivity& g : r.per_group) EXPECT_EQ(g.value, 0.0);
  EXPECT_EQ(r.prediction, 0.5);
  EXPECT_EQ(r.decision, 1);
}

TEST(PredictionSensitivity, Errors) {
  const FeatureSchema schema = testing::tiny_schema();
  const MlpModel m = one_layer({2, -3, 0}, 0.0);
  EXPECT_THROW(prediction_sensitivity(m, schema, std::vector<double>{1, 1}, "a"), Error);
  EXPECT_THROW(prediction_sensitivity(m, schema, std::vector<double>{1, 1, 0}, "zzz"), Error);
}

TEST(PredictionSensitivity, MatchesFiniteDifferenceOnProtectedColumn) {
  Rng rng(99);
  const FeatureSchema schema = testing::tiny_schema();
  int checked = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const MlpModel m = testing::random_mlp(rng, {3, 1 + rng.below(12), 1});
    std::vector<double> x = testing::random_vector(rng, 3, 2.0);
    if (testing::min_hidden_margin(m, x) < 1e-3) continue;
    auto predict = [&] { return m.predict(x); };
    const double fd = std::abs(testing::central_difference(predict, x[2]));
    EXPECT_LT(rel_err(prediction_sensitivity(m, schema, x, "sex"), fd), 1e-6);
    ++checked;
  }
  EXPECT_GT(checked, 150);
}

TEST(Aggregation, RulesOnOneHotGroup) {
  const FeatureGroup g{"c", GroupKind::kOneHotCategorical, 1, 4, {"x", "y", "z"}, 0.0, 1.0};
  const std::vector<double> partials{9.0, 3.0, -4.0, 0.0, 7.0};
  EXPECT_EQ(aggregate(partials, g, Aggregation::kL2), 5.0);
  EXPECT_EQ(aggregate(partials, g, Aggregation::kMaxAbs), 4.0);
  EXPECT_EQ(aggregate(partials, g, Aggregation::kSumAbs), 7.0);
  const FeatureGroup single{"s", GroupKind::kContinuous, 2, 3, {}, 0.0, 1.0};
  for (Aggregation a : {Aggregation::kL2, Aggregation::kMaxAbs, Aggregation::kSumAbs}) {
    EXPECT_EQ(aggregate(partials, single, a), 4.0);
  }
  EXPECT_EQ(aggregation_from_string(to_string(Aggregation::kMaxAbs)), Aggregation::kMaxAbs);
  EXPECT_THROW(aggregation_from_string("median"), Error);
}

TEST(Profile, GroupsPartitionTheInputGradient) {
  Rng rng(12);
  const FeatureSchema schema = mixed_schema();
  for (int trial = 0; trial < 50; ++trial) {
    const MlpModel m = testing::random_mlp(rng, {6, 8, 1});
    const auto x = testing::random_vector(rng, 6);
    const InputGradient grad = input_gradient(m, x);
    double full = 0.0;
    for (double p : grad.partials) full += p * p;
    const SensitivityRecord r = profile(m, schema, x);
    double parts = 0.0;
    for (const GroupSensitivity& g : r.per_group) parts += g.value * g.value;
    EXPECT_LT(rel_err(parts, full, 1e-300), 1e-12);
    EXPECT_EQ(r.protected_sensitivity, r.per_group[2].value);
    EXPECT_EQ(r.prediction, grad.prediction);
  }
}

TEST(Profile, JsonLineShape) {
  const FeatureSchema schema = testing::tiny_schema();
  const SensitivityRecord r = profile(one_layer({2, -3, 0.5}, 0.0), schema, std::vector<double>{1, 1, 1});
  const auto j = nlohmann::json::parse(to_json_line(r));
  EXPECT_EQ(j["decision"], 0);
  EXPECT_EQ(j["per_group"].size(), 3u);
  EXPECT_DOUBLE_EQ(j["protected_sensitivity"].get<double>(), r.protected_sensitivity);
  EXPECT_EQ(to_json_line(r).find('\n'), std::string::npos);
}

TEST(BoxSummary, LinearInterpolationQuartiles) {
  std::vector<double> v(100);
  std::iota(v.begin(), v.end(), 1.0);
  std::reverse(v.begin(), v.end());
  const BoxSummary s = summarize(v);
  EXPECT_EQ(s.median, 50.5);
  EXPECT_EQ(s.q1, 25.75);
  EXPECT_EQ(s.q3, 75.25);
  EXPECT_EQ(s.min, 1.0);
  EXPECT_EQ(s.max, 100.0);
  EXPECT_EQ(s.mean, 50.5);
  EXPECT_EQ(s.whisker_low, 1.0);
  EXPECT_EQ(s.whisker_high, 100.0);
  EXPECT_EQ(s.n_outliers, 0u);
}

TEST(BoxSummary, ConstantValues) {
  const BoxSummary s = summarize(std::vector<double>(17, 0.125));
  for (double q : {s.min, s.q1, s.median, s.q3, s.max, s.mean, s.whisker_low, s.whisker_high}) {
    EXPECT_EQ(q, 0.125);
  }
}

TEST(BoxSummary, TukeyOutliers) {
  // q1 = 2, q3 = 4, fences at -1 and 7.
  const BoxSummary s = summarize({1, 2, 2, 3, 4, 4, 5, 100, -50});
  EXPECT_EQ(s.q1, 2.0);
  EXPECT_EQ(s.q3, 4.0);
  EXPECT_EQ(s.whisker_low, 1.0);
  EXPECT_EQ(s.whisker_high, 5.0);
  EXPECT_EQ(s.n_outliers, 2u);
  EXPECT_THROW(summarize({}), Error);
}

TEST(Distribution, CsvHeaderAndRows) {
  Rng rng(4);
  const FeatureSchema schema = testing::tiny_schema();
  const MlpModel m = testing::random_mlp(rng, {3, 4, 1});
  std::vector<double> values;
  std::vector<int> labels;
  for (int i = 0; i < 20; ++i) {
    const auto x = testing::random_vector(rng, 2);
    values.insert(values.end(), {x[0], x[1], static_cast<double>(i % 2)});
    labels.push_back(i % 2);
  }
  const EncodedDataset data(Tensor::matrix(20, 3, values), labels, schema);
  const auto dist = batch_distribution(m, data);
  ASSERT_EQ(dist.size(), 3u);
  EXPECT_EQ(dist[2].group, "sex");
  const std::string csv = distribution_csv(dist);
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "group,min,q1,median,q3,max,mean,whisker_low,whisker_high,n_outliers");
  int rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 3);
  EXPECT_EQ(distribution_csv(batch_distribution(profile_all(m, data))), csv);
}

TEST(SmoothnessProbe, ZeroRadiusHasNoSpread) {
  Rng rng(6);
  const MlpModel m = testing::random_mlp(rng, {3, 6, 1});
  const std::vector<double> x{0.3, -0.2, 1.0};
  const SmoothnessSummary s = smoothness_probe(m, testing::tiny_schema(), x, 0.0, 25, 1);
  EXPECT_EQ(s.stddev, 0.0);
  EXPECT_EQ(s.min, s.max);
  EXPECT_EQ(s.min, prediction_sensitivity(m, testing::tiny_schema(), x, "sex"));
  EXPECT_EQ(smoothness_probe(m, testing::tiny_schema(), x, 0.1, 1, 1).stddev, 0.0);
}

TEST(SmoothnessProbe, LinearModelBoundedByQuarterWeight) {
  const MlpModel m = one_layer({1.5, -0.7, 2.0}, 0.1);
  const std::vector<double> x{0.3, -0.2, 1.0};
  const SmoothnessSummary s = smoothness_probe(m, testing::tiny_schema(), x, 3.0, 200, 2);
  EXPECT_LE(s.max, 0.25 * 2.0);
  EXPECT_GT(s.stddev, 0.0);
  EXPECT_EQ(s.samples, 200u);
}

TEST(SmoothnessProbe, Preconditions) {
  const MlpModel m = one_layer({1.5, -0.7, 2.0}, 0.1);
  const std::vector<double> x{0.3, -0.2, 1.0};
  EXPECT_THROW(smoothness_probe(m, testing::tiny_schema(), x, -1.0, 10, 1), Error);
  EXPECT_THROW(smoothness_probe(m, testing::tiny_schema(), x, 0.1, 0, 1), Error);
  std::vector<FeatureGroup> groups{{"sex", GroupKind::kBinaryCategorical, 0, 1, {"F", "M"}, 0.0, 1.0}};
  const FeatureSchema categorical_only(groups, "sex", "M", "y", "1", {"0", "1"});
  EXPECT_THROW(smoothness_probe(one_layer({1.0}, 0.0), categorical_only, std::vector<double>{1.0}, 0.1, 10, 1),
               Error);
}

TEST(AdultProfile, FourteenGroups) {
  const RawTable train = load_csv(testing::adult_train(), CsvFormat::adult());
  const FeatureSchema schema = fit_schema(train, "sex", "Male", ">50K");
  const RawTable test = load_csv(testing::adult_test(), CsvFormat::adult());
  const EncodedDataset data = encode(test, schema);
  const MlpModel m = MlpModel::init(std::vector<std::size_t>{schema.width(), 16, 8, 1}, 1);
  const SensitivityRecord r = profile(m, schema, data.row(0));
  EXPECT_EQ(r.per_group.size(), 14u);
  EXPECT_EQ(r.per_group[schema.group_index("sex")].group, "sex");
}

}  // namespace
}  // namespace fairsense
