#include "fairsense/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <sstream>

#include "fairsense/error.hpp"
#include "fairsense/text.hpp"

namespace fairsense {

void validate(const MonitorConfig& config) {
  if (!(config.threshold >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "monitor threshold must be >= 0");
  }
}

namespace {

const std::string& monitored_group(const FeatureSchema& schema, const MonitorConfig& config) {
  return config.protected_group.empty() ? schema.protected_name() : config.protected_group;
}

}  // namespace

Verdict evaluate(const MlpModel& model, const FeatureSchema& schema, std::span<const double> x,
                 const MonitorConfig& config) {
  validate(config);
  const FeatureGroup& group = schema.group(monitored_group(schema, config));
  if (x.size() != schema.width() || model.input_width() != schema.width()) {
    throw Error(ErrorKind::kDimension, "input width " + std::to_string(x.size()) +
                                           " does not match schema width " +
                                           std::to_string(schema.width()));
  }
  const InputGradient grad = input_gradient(model, x, config.sensitivity.space);
  Verdict v;
  v.prediction = grad.prediction;
  v.decision = grad.prediction >= 0.5 ? 1 : 0;
  v.sensitivity = aggregate(grad.partials, group, config.sensitivity.aggregation);
  v.flagged = alarm(v.sensitivity, config.threshold);
  return v;
}

std::vector<ScoredExample> score(const MlpModel& model, const EncodedDataset& dataset,
                                 const MonitorConfig& config) {
  std::vector<ScoredExample> out;
  out.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Verdict v = evaluate(model, dataset.schema(), dataset.row(i), config);
    out.push_back({v.decision, dataset.privileged(i) ? Group::kPrivileged : Group::kUnprivileged,
                   v.sensitivity});
  }
  return out;
}

FilteredMetrics filter(std::span<const ScoredExample> scored, double threshold) {
  if (!(threshold >= 0.0)) {
    throw Error(ErrorKind::kInvalidArgument, "threshold must be >= 0");
  }
  std::vector<int> decisions;
  std::vector<Group> groups;
  for (const ScoredExample& e : scored) {
    if (alarm(e.sensitivity, threshold)) continue;
    decisions.push_back(e.decision);
    groups.push_back(e.group);
  }
  FilteredMetrics m;
  m.threshold = threshold;
  m.kept = decisions.size();
  m.discarded = scored.size() - m.kept;
  m.kept_report = fairness_report(GroupedPredictions(std::move(decisions), std::move(groups)));
  return m;
}

FilteredMetrics filtered_metrics(const MlpModel& model, const EncodedDataset& dataset,
                                 const MonitorConfig& config) {
  const auto scored = score(model, dataset, config);
  return filter(scored, config.threshold);
}

std::vector<double> default_grid(std::span<const double> sensitivities) {
  if (sensitivities.empty()) throw Error(ErrorKind::kData, "no sensitivities to build a grid");
  std::vector<double> sorted(sensitivities.begin(), sensitivities.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> grid{kThresholdOff};
  for (int decile = 10; decile >= 1; --decile) {
    grid.push_back(quantile_sorted(sorted, decile / 10.0));
  }
  return grid;
}

SweepReport threshold_sweep(std::span<const ScoredExample> scored, std::vector<double> grid) {
  if (scored.empty()) throw Error(ErrorKind::kData, "dataset is empty");
  if (grid.empty()) {
    std::vector<double> s;
    s.reserve(scored.size());
    for (const ScoredExample& e : scored) s.push_back(e.sensitivity);
    grid = default_grid(s);
  }
  std::sort(grid.begin(), grid.end(), std::greater<>());
  SweepReport report;
  for (double tau : grid) {
    const FilteredMetrics m = filter(scored, tau);
    report.rows.push_back({tau, m.kept, m.discarded, m.kept_report.statistical_parity,
                           m.kept_report.disparate_impact});
  }
  return report;
}

SweepReport threshold_sweep(const MlpModel& model, const EncodedDataset& dataset,
                            std::vector<double> grid, const MonitorConfig& config) {
  MonitorConfig scoring = config;
  scoring.threshold = kThresholdOff;
  const auto scored = score(model, dataset, scoring);
  return threshold_sweep(scored, std::move(grid));
}

std::string sweep_csv(const SweepReport& report) {
  std::ostringstream out;
  out << "tau,kept,discarded,stat_parity,stat_parity_defined,disp_impact,disp_impact_defined\n";
  for (const SweepRow& r : report.rows) {
    out << format_real(r.threshold) << ',' << r.kept << ',' << r.discarded << ','
        << (r.statistical_parity ? format_real(*r.statistical_parity) : "") << ','
        << (r.statistical_parity ? "true" : "false") << ','
        << (r.disparate_impact ? format_real(*r.disparate_impact) : "") << ','
        << (r.disparate_impact ? "true" : "false") << '\n';
  }
  return out.str();
}

}  // namespace fairsense
