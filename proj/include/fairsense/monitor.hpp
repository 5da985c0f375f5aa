#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairsense/dataset.hpp"
#include "fairsense/metrics.hpp"
#include "fairsense/model.hpp"
#include "fairsense/sensitivity.hpp"

namespace fairsense {

inline constexpr double kThresholdOff = std::numeric_limits<double>::infinity();

struct MonitorConfig {
  // Alarm when sensitivity > threshold (strict). +inf disables the alarm.
  double threshold = kThresholdOff;
  // Group whose sensitivity is monitored; empty means the schema's protected
  // group.
  std::string protected_group;
  SensitivityOptions sensitivity;
};

void validate(const MonitorConfig& config);

inline bool alarm(double sensitivity, double threshold) { return sensitivity > threshold; }

struct Verdict {
  double prediction = 0.0;
  int decision = 0;
  double sensitivity = 0.0;
  bool flagged = false;
};

// The monitor only reports; the prediction is never altered.
Verdict evaluate(const MlpModel& model, const FeatureSchema& schema, std::span<const double> x,
                 const MonitorConfig& config);

// Per-example inputs to every filter: decision, group, monitored sensitivity.
struct ScoredExample {
  int decision = 0;
  Group group = Group::kPrivileged;
  double sensitivity = 0.0;
};

std::vector<ScoredExample> score(const MlpModel& model, const EncodedDataset& dataset,
                                 const MonitorConfig& config);

struct FilteredMetrics {
  double threshold = kThresholdOff;
  std::size_t kept = 0;
  std::size_t discarded = 0;
  // Metrics over kept examples; undefined metrics are empty optionals.
  FairnessReport kept_report;
};

FilteredMetrics filter(std::span<const ScoredExample> scored, double threshold);
FilteredMetrics filtered_metrics(const MlpModel& model, const EncodedDataset& dataset,
                                 const MonitorConfig& config);

struct SweepRow {
  double threshold = kThresholdOff;
  std::size_t kept = 0;
  std::size_t discarded = 0;
  std::optional<double> statistical_parity;
  std::optional<double> disparate_impact;
};

struct SweepReport {
  std::vector<SweepRow> rows;  // threshold descending
};

// Deciles (10th..100th percentile, linear interpolation) of `sensitivities`
// plus +inf, descending.
std::vector<double> default_grid(std::span<const double> sensitivities);

// An empty grid selects default_grid over the dataset's monitored
// sensitivities.
SweepReport threshold_sweep(std::span<const ScoredExample> scored, std::vector<double> grid);
SweepReport threshold_sweep(const MlpModel& model, const EncodedDataset& dataset,
                            std::vector<double> grid, const MonitorConfig& config = {});

// tau,kept,discarded,stat_parity,stat_parity_defined,disp_impact,disp_impact_defined
std::string sweep_csv(const SweepReport& report);

}  // namespace fairsense
