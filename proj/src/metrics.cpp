#include "fairsense/metrics.hpp"

#include <algorithm>

#include <json.hpp>

#include "fairsense/error.hpp"

namespace fairsense {

GroupedPredictions::GroupedPredictions(std::vector<int> decisions, std::vector<Group> groups)
    : decisions_(std::move(decisions)), groups_(std::move(groups)) {
  if (decisions_.size() != groups_.size()) {
    throw Error(ErrorKind::kDimension, "decisions and groups differ in length");
  }
  for (int d : decisions_) {
    if (d != 0 && d != 1) throw Error(ErrorKind::kDomain, "decisions must be 0 or 1");
  }
}

std::size_t GroupedPredictions::group_size(Group g) const {
  return static_cast<std::size_t>(std::count(groups_.begin(), groups_.end(), g));
}

std::size_t GroupedPredictions::positives(Group g) const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < decisions_.size(); ++i) {
    if (groups_[i] == g && decisions_[i] == 1) ++n;
  }
  return n;
}

double positive_rate(const GroupedPredictions& gp, Group group) {
  const std::size_t n = gp.group_size(group);
  if (n == 0) {
    throw Error(ErrorKind::kEmptyGroup, group == Group::kPrivileged ? "privileged group is empty"
                                                                    : "unprivileged group is empty");
  }
  return static_cast<double>(gp.positives(group)) / static_cast<double>(n);
}

double statistical_parity(const GroupedPredictions& gp) {
  return positive_rate(gp, Group::kUnprivileged) - positive_rate(gp, Group::kPrivileged);
}

double disparate_impact(const GroupedPredictions& gp) {
  const double unpriv = positive_rate(gp, Group::kUnprivileged);
  const double priv = positive_rate(gp, Group::kPrivileged);
  if (priv == 0.0) {
    throw Error(ErrorKind::kUndefinedRatio,
                "disparate impact is undefined: privileged positive rate is 0");
  }
  return unpriv / priv;
}

FairnessReport fairness_report(const GroupedPredictions& gp) {
  FairnessReport r;
  r.privileged_size = gp.group_size(Group::kPrivileged);
  r.unprivileged_size = gp.group_size(Group::kUnprivileged);
  if (r.privileged_size > 0) r.privileged_rate = positive_rate(gp, Group::kPrivileged);
  if (r.unprivileged_size > 0) r.unprivileged_rate = positive_rate(gp, Group::kUnprivileged);
  if (r.privileged_rate && r.unprivileged_rate) {
    r.statistical_parity = *r.unprivileged_rate - *r.privileged_rate;
    if (*r.privileged_rate > 0.0) r.disparate_impact = *r.unprivileged_rate / *r.privileged_rate;
  }
  return r;
}

namespace {

nlohmann::json optional_value(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

}  // namespace

std::string to_json(const FairnessReport& report) {
  nlohmann::json j;
  j["metrics"] = nlohmann::json::array({
      {{"metric", "statistical_parity"},
       {"value", optional_value(report.statistical_parity)},
       {"defined", report.statistical_parity.has_value()}},
      {{"metric", "disparate_impact"},
       {"value", optional_value(report.disparate_impact)},
       {"defined", report.disparate_impact.has_value()}},
  });
  j["group_sizes"] = {{"privileged", report.privileged_size},
                      {"unprivileged", report.unprivileged_size}};
  j["positive_rates"] = {{"privileged", optional_value(report.privileged_rate)},
                         {"unprivileged", optional_value(report.unprivileged_rate)}};
  return j.dump(2);
}

}  // namespace fairsense
