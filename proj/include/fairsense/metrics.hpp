#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

namespace fairsense {

enum class Group { kPrivileged, kUnprivileged };

// Hard 0/1 decisions paired with group membership.
class GroupedPredictions {
 public:
  GroupedPredictions(std::vector<int> decisions, std::vector<Group> groups);

  std::size_t size() const { return decisions_.size(); }
  const std::vector<int>& decisions() const { return decisions_; }
  const std::vector<Group>& groups() const { return groups_; }
  std::size_t group_size(Group g) const;
  std::size_t positives(Group g) const;

 private:
  std::vector<int> decisions_;
  std::vector<Group> groups_;
};

// Fraction of positive decisions within `group`. Throws kEmptyGroup.
double positive_rate(const GroupedPredictions& gp, Group group);

// P(yhat=1 | unprivileged) - P(yhat=1 | privileged). Negative values mean the
// unprivileged group receives fewer positive decisions.
double statistical_parity(const GroupedPredictions& gp);

// P(yhat=1 | unprivileged) / P(yhat=1 | privileged). Throws kEmptyGroup for an
// empty group and kUndefinedRatio when the privileged rate is 0. The
// conventional four-fifths alert line is 0.8; it is not enforced here.
double disparate_impact(const GroupedPredictions& gp);

struct FairnessReport {
  std::size_t privileged_size = 0;
  std::size_t unprivileged_size = 0;
  std::optional<double> privileged_rate;
  std::optional<double> unprivileged_rate;
  std::optional<double> statistical_parity;
  std::optional<double> disparate_impact;
};

// Both metrics with undefined values left empty instead of throwing.
FairnessReport fairness_report(const GroupedPredictions& gp);

// {"metrics":[{"metric","value","defined"}...],"group_sizes":{...},"positive_rates":{...}}
std::string to_json(const FairnessReport& report);

}  // namespace fairsense
