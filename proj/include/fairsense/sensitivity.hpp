#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "fairsense/dataset.hpp"
#include "fairsense/model.hpp"
#include "fairsense/schema.hpp"

namespace fairsense {

// How the partials of a multi-column (one-hot) group collapse to one number.
// Every rule reduces to |partial| for a single column.
enum class Aggregation { kL2, kMaxAbs, kSumAbs };

// Which model output is differentiated. Probability is the default; logit
// drops the sigmoid slope factor.
enum class OutputSpace { kProbability, kLogit };

const char* to_string(Aggregation a);
Aggregation aggregation_from_string(std::string_view s);

struct SensitivityOptions {
  Aggregation aggregation = Aggregation::kL2;
  OutputSpace space = OutputSpace::kProbability;
};

struct InputGradient {
  double prediction = 0.0;     // probability
  std::vector<double> partials;  // d output / d x_j, per encoded column
};

// One forward and one backward pass with the input as the only
// differentiable leaf.
InputGradient input_gradient(const MlpModel& model, std::span<const double> x,
                             OutputSpace space = OutputSpace::kProbability);

double aggregate(std::span<const double> partials, const FeatureGroup& group, Aggregation rule);

// |d yhat / d a| for the columns of `group`, in standardized feature units.
double prediction_sensitivity(const MlpModel& model, const FeatureSchema& schema,
                              std::span<const double> x, std::string_view group,
                              const SensitivityOptions& options = {});

struct GroupSensitivity {
  std::string group;
  double value = 0.0;
};

struct SensitivityRecord {
  double prediction = 0.0;
  int decision = 0;
  std::vector<GroupSensitivity> per_group;  // schema order
  double protected_sensitivity = 0.0;
};

SensitivityRecord profile(const MlpModel& model, const FeatureSchema& schema,
                          std::span<const double> x, const SensitivityOptions& options = {});

std::vector<SensitivityRecord> profile_all(const MlpModel& model, const EncodedDataset& dataset,
                                           const SensitivityOptions& options = {});

// One JSON object, no trailing newline.
std::string to_json_line(const SensitivityRecord& record);

// Five-number summary with Tukey whiskers. Quartiles interpolate linearly
// between order statistics at position (n - 1) * p.
struct BoxSummary {
  double min = 0.0;
  double q1 = 0.0;
  double median = 0.0;
  double q3 = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double whisker_low = 0.0;   // smallest datum >= q1 - 1.5 IQR
  double whisker_high = 0.0;  // largest datum <= q3 + 1.5 IQR
  std::size_t n_outliers = 0;
};

double quantile_sorted(std::span<const double> sorted, double p);
BoxSummary summarize(std::vector<double> values);

struct GroupDistribution {
  std::string group;
  BoxSummary summary;
};

// Per-group box summaries over every row of `dataset`.
std::vector<GroupDistribution> batch_distribution(const MlpModel& model,
                                                  const EncodedDataset& dataset,
                                                  const SensitivityOptions& options = {});
std::vector<GroupDistribution> batch_distribution(const std::vector<SensitivityRecord>& records);

// group,min,q1,median,q3,max,mean,whisker_low,whisker_high,n_outliers
std::string distribution_csv(const std::vector<GroupDistribution>& distribution);

struct SmoothnessSummary {
  std::size_t samples = 0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double stddev = 0.0;  // sample stddev; 0 for one sample
};

// Protected-group sensitivity at `n` points around `x`: every continuous
// column shifted by uniform noise in [-radius, radius]; categorical columns
// untouched.
SmoothnessSummary smoothness_probe(const MlpModel& model, const FeatureSchema& schema,
                                   std::span<const double> x, double radius, std::size_t n,
                                   std::uint64_t seed, const SensitivityOptions& options = {});

}  // namespace fairsense
