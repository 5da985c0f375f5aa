#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "fairsense/monitor.hpp"
#include "fairsense/stream_stats.hpp"
#include "test_support.hpp"

namespace fairsense::testing {

struct PropertyResult {
  std::size_t cases = 0;
  std::size_t failures = 0;
  std::string first_failure;

  void record(bool ok, const std::string& what) {
    ++cases;
    if (ok) return;
    if (failures == 0) first_failure = what + " (case " + std::to_string(cases) + ")";
    ++failures;
  }
  bool passed() const { return failures == 0; }
};

// Sensitivities come partly from a small lattice; thresholds drawn from the
// same lattice land exactly on observed values.
inline std::vector<ScoredExample> random_scored(Rng& rng) {
  std::vector<ScoredExample> out(rng.below(61));
  for (ScoredExample& e : out) {
    e.decision = static_cast<int>(rng.below(2));
    e.group = rng.below(2) ? Group::kPrivileged : Group::kUnprivileged;
    e.sensitivity = rng.below(2) ? 0.125 * static_cast<double>(rng.below(9)) : rng.uniform01();
  }
  return out;
}

inline double random_threshold(Rng& rng, const std::vector<ScoredExample>& scored) {
  const std::size_t pick = rng.below(4);
  if (pick == 0 && !scored.empty()) return scored[rng.below(scored.size())].sensitivity;
  if (pick == 1) return 0.125 * static_cast<double>(rng.below(9));
  if (pick == 2) return rng.below(8) == 0 ? kThresholdOff : rng.uniform(0.0, 1.1);
  return rng.uniform01();
}

inline bool same_optional(const std::optional<double>& a, const std::optional<double>& b) {
  return a.has_value() == b.has_value() && (!a || *a == *b);
}

inline bool same_report(const FairnessReport& a, const FairnessReport& b) {
  return a.privileged_size == b.privileged_size && a.unprivileged_size == b.unprivileged_size &&
         same_optional(a.privileged_rate, b.privileged_rate) &&
         same_optional(a.unprivileged_rate, b.unprivileged_rate) &&
         same_optional(a.statistical_parity, b.statistical_parity) &&
         same_optional(a.disparate_impact, b.disparate_impact);
}

inline std::vector<bool> kept_mask(const std::vector<ScoredExample>& scored, double tau) {
  std::vector<bool> kept;
  for (const ScoredExample& e : scored) kept.push_back(!alarm(e.sensitivity, tau));
  return kept;
}

// Lowering the threshold never keeps an example that a higher threshold
// discarded, and sweep rows keep non-increasing counts as tau falls.
inline PropertyResult check_monotonicity(std::size_t cases, std::uint64_t seed) {
  Rng rng(seed);
  PropertyResult r;
  while (r.cases < cases) {
    const auto scored = random_scored(rng);
    double lo = random_threshold(rng, scored);
    double hi = random_threshold(rng, scored);
    if (lo > hi) std::swap(lo, hi);
    const auto k_lo = kept_mask(scored, lo);
    const auto k_hi = kept_mask(scored, hi);
    bool subset = true;
    for (std::size_t i = 0; i < scored.size(); ++i) subset = subset && (!k_lo[i] || k_hi[i]);
    const FilteredMetrics f_lo = filter(scored, lo);
    const FilteredMetrics f_hi = filter(scored, hi);
    bool ok = subset && f_lo.kept <= f_hi.kept && f_lo.kept + f_lo.discarded == scored.size();
    if (!scored.empty()) {
      const SweepReport sweep = threshold_sweep(scored, {});
      for (std::size_t i = 1; i < sweep.rows.size(); ++i) {
        ok = ok && sweep.rows[i].threshold <= sweep.rows[i - 1].threshold &&
             sweep.rows[i].kept <= sweep.rows[i - 1].kept;
      }
    }
    r.record(ok, "monotonicity");
  }
  return r;
}

// Filtering the kept set again at the same threshold changes nothing.
inline PropertyResult check_idempotence(std::size_t cases, std::uint64_t seed) {
  Rng rng(seed);
  PropertyResult r;
  while (r.cases < cases) {
    const auto scored = random_scored(rng);
    const double tau = random_threshold(rng, scored);
    std::vector<ScoredExample> kept;
    for (const ScoredExample& e : scored) {
      if (!alarm(e.sensitivity, tau)) kept.push_back(e);
    }
    const FilteredMetrics once = filter(scored, tau);
    const FilteredMetrics twice = filter(kept, tau);
    r.record(twice.discarded == 0 && twice.kept == once.kept &&
                 same_report(once.kept_report, twice.kept_report),
             "idempotence");
  }
  return r;
}

// Sensitivity exactly at tau is kept; the next representable value above is
// flagged. Checked on real verdicts of random networks.
inline PropertyResult check_strict_boundary(std::size_t cases, std::uint64_t seed) {
  Rng rng(seed);
  PropertyResult r;
  const FeatureSchema schema = tiny_schema();
  while (r.cases < cases) {
    const MlpModel model = random_mlp(rng, {3, 1 + rng.below(6), 1});
    const auto x = random_vector(rng, 3, 2.0);
    MonitorConfig config;
    config.threshold = kThresholdOff;
    const double s = evaluate(model, schema, x, config).sensitivity;
    config.threshold = s;
    const Verdict at = evaluate(model, schema, x, config);
    config.threshold = s > 0.0 ? std::nextafter(s, 0.0) : 0.0;
    const Verdict below = evaluate(model, schema, x, config);
    config.threshold = kThresholdOff;
    const Verdict off = evaluate(model, schema, x, config);
    config.threshold = 0.0;
    const Verdict zero = evaluate(model, schema, x, config);
    r.record(!at.flagged && below.flagged == (s > 0.0) && !off.flagged && zero.flagged == (s > 0.0) &&
                 at.prediction == off.prediction && at.decision == off.decision,
             "strict boundary");
  }
  return r;
}

// filter() agrees with group metrics over the kept subset built example by
// example from individual alarms.
inline PropertyResult check_consistency(std::size_t cases, std::uint64_t seed) {
  Rng rng(seed);
  PropertyResult r;
  while (r.cases < cases) {
    const auto scored = random_scored(rng);
    const double tau = random_threshold(rng, scored);
    std::vector<int> decisions;
    std::vector<Group> groups;
    for (const ScoredExample& e : scored) {
      if (alarm(e.sensitivity, tau)) continue;
      decisions.push_back(e.decision);
      groups.push_back(e.group);
    }
    const FilteredMetrics f = filter(scored, tau);
    r.record(f.kept == decisions.size() &&
                 same_report(f.kept_report, fairness_report(GroupedPredictions(decisions, groups))),
             "consistency");
  }
  return r;
}

// Running mean and sample variance against a two-pass long-double batch
// computation, relative tolerance 1e-9.
inline PropertyResult check_streaming(std::size_t cases, std::uint64_t seed) {
  Rng rng(seed);
  PropertyResult r;
  while (r.cases < cases) {
    const std::size_t n = 1 + rng.below(400);
    const double scale = std::pow(10.0, rng.uniform(-6.0, 3.0));
    const double offset = rng.below(3) == 0 ? scale * 1e3 : 0.0;
    std::vector<double> values(n);
    StreamStats stats;
    for (double& v : values) {
      v = offset + scale * rng.uniform01();
      stats.update(v);
    }
    long double sum = 0.0L;
    for (double v : values) sum += v;
    const long double mean = sum / static_cast<long double>(n);
    long double ss = 0.0L;
    for (double v : values) ss += (v - mean) * (v - mean);
    const double variance = n > 1 ? static_cast<double>(ss / static_cast<long double>(n - 1)) : 0.0;
    const StreamSnapshot snap = stats.snapshot();
    const bool mean_ok = rel_err(snap.mean, static_cast<double>(mean), 1e-300) <= 1e-9;
    const bool var_ok = n < 2 ? (snap.variance == 0.0 && !snap.stddev_defined)
                              : rel_err(snap.variance, variance, 1e-300) <= 1e-9;
    r.record(snap.count == n && mean_ok && var_ok, "streaming vs batch");
  }
  return r;
}

}  // namespace fairsense::testing
