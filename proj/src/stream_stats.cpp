#include "fairsense/stream_stats.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "fairsense/error.hpp"
#include "fairsense/text.hpp"

namespace fairsense {

QuantileSketch::QuantileSketch(double epsilon) : epsilon_(epsilon) {
  if (!(epsilon > 0.0 && epsilon < 0.5)) {
    throw Error(ErrorKind::kInvalidArgument, "sketch epsilon must lie in (0, 0.5)");
  }
  compress_period_ = std::max<std::size_t>(1, static_cast<std::size_t>(1.0 / (2.0 * epsilon)));
}

void QuantileSketch::insert(double value) {
  const auto pos = std::upper_bound(tuples_.begin(), tuples_.end(), value,
                                    [](double v, const Tuple& t) { return v < t.value; });
  std::size_t delta = 0;
  if (pos != tuples_.begin() && pos != tuples_.end()) {
    delta = static_cast<std::size_t>(std::floor(2.0 * epsilon_ * static_cast<double>(count_)));
  }
  tuples_.insert(pos, Tuple{value, 1, delta});
  ++count_;
  if (count_ % compress_period_ == 0) compress();
}

void QuantileSketch::compress() {
  if (tuples_.size() < 3) return;
  const auto threshold = static_cast<std::size_t>(std::floor(2.0 * epsilon_ * static_cast<double>(count_)));
  std::vector<Tuple> kept;
  kept.reserve(tuples_.size());
  kept.push_back(tuples_.back());
  // The minimum and maximum are never merged away.
  for (std::size_t i = tuples_.size() - 1; i-- > 1;) {
    Tuple& right = kept.back();
    if (tuples_[i].g + right.g + right.delta <= threshold) {
      right.g += tuples_[i].g;
    } else {
      kept.push_back(tuples_[i]);
    }
  }
  kept.push_back(tuples_.front());
  std::reverse(kept.begin(), kept.end());
  tuples_ = std::move(kept);
}

double QuantileSketch::quantile(double phi) const {
  if (count_ == 0) throw Error(ErrorKind::kContract, "quantile of an empty sketch");
  phi = std::clamp(phi, 0.0, 1.0);
  const double n = static_cast<double>(count_);
  const double rank = std::max(1.0, std::ceil(phi * n));
  const double bound = rank + epsilon_ * n;
  double rmin = 0.0;
  for (std::size_t i = 0; i < tuples_.size(); ++i) {
    rmin += static_cast<double>(tuples_[i].g);
    const double rmax = rmin + static_cast<double>(tuples_[i].delta);
    if (rmax > bound && i > 0) return tuples_[i - 1].value;
  }
  return tuples_.back().value;
}

StreamStats::StreamStats(const StreamStats& other) {
  std::lock_guard lock(other.mu_);
  count_ = other.count_;
  mean_ = other.mean_;
  m2_ = other.m2_;
  sketch_ = other.sketch_;
}

StreamStats& StreamStats::operator=(const StreamStats& other) {
  if (this == &other) return *this;
  std::scoped_lock lock(mu_, other.mu_);
  count_ = other.count_;
  mean_ = other.mean_;
  m2_ = other.m2_;
  sketch_ = other.sketch_;
  return *this;
}

void StreamStats::update(double sensitivity) {
  if (!(sensitivity >= 0.0) || !std::isfinite(sensitivity)) {
    throw Error(ErrorKind::kDomain,
                "stream values must be finite and non-negative, got " + format_real(sensitivity));
  }
  std::lock_guard lock(mu_);
  ++count_;
  const double delta = sensitivity - mean_;
  mean_ += delta / static_cast<double>(count_);
  m2_ += delta * (sensitivity - mean_);
  sketch_.insert(sensitivity);
}

StreamSnapshot StreamStats::snapshot() const {
  std::lock_guard lock(mu_);
  StreamSnapshot s;
  s.count = count_;
  s.mean = mean_;
  if (count_ >= 2) {
    s.variance = m2_ / static_cast<double>(count_ - 1);
    s.stddev = std::sqrt(s.variance);
    s.stddev_defined = true;
  }
  if (count_ > 0) {
    s.q50 = sketch_.quantile(0.5);
    s.q90 = sketch_.quantile(0.9);
    s.q99 = sketch_.quantile(0.99);
  }
  return s;
}

std::string to_json(const StreamSnapshot& s) {
  const auto opt = [](const std::optional<double>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  nlohmann::ordered_json j;
  j["count"] = s.count;
  j["mean"] = s.mean;
  j["variance"] = s.variance;
  j["stddev"] = s.stddev;
  j["stddev_defined"] = s.stddev_defined;
  j["q50"] = opt(s.q50);
  j["q90"] = opt(s.q90);
  j["q99"] = opt(s.q99);
  j["quantile_rank_error"] = 0.01;
  return j.dump();
}

}  // namespace fairsense
