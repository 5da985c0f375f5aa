#pragma once

#include <cstddef>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace fairsense {

// Greenwald-Khanna quantile summary. Any quantile query is answered with rank
// error at most epsilon * count.
class QuantileSketch {
 public:
  explicit QuantileSketch(double epsilon = 0.005);

  void insert(double value);
  // phi in [0, 1]. Requires count() > 0.
  double quantile(double phi) const;
  std::size_t count() const { return count_; }
  std::size_t tuples() const { return tuples_.size(); }
  double epsilon() const { return epsilon_; }

 private:
  struct Tuple {
    double value;
    std::size_t g;      // rmin(i) - rmin(i-1)
    std::size_t delta;  // rmax(i) - rmin(i)
  };
  void compress();

  double epsilon_;
  std::size_t count_ = 0;
  std::size_t compress_period_;
  std::vector<Tuple> tuples_;
};

struct StreamSnapshot {
  std::size_t count = 0;
  double mean = 0.0;
  double variance = 0.0;  // sample variance; 0 when count < 2
  double stddev = 0.0;
  bool stddev_defined = false;  // count >= 2
  std::optional<double> q50;
  std::optional<double> q90;
  std::optional<double> q99;
};

// Running statistics of a non-negative sensitivity stream: Welford mean and
// variance plus a quantile sketch with rank error <= 0.005 (documented bound
// 0.01). One writer; snapshot() may be called from other threads.
class StreamStats {
 public:
  StreamStats() = default;
  StreamStats(const StreamStats& other);
  StreamStats& operator=(const StreamStats& other);

  // Throws Error(kDomain) for negative or non-finite input.
  void update(double sensitivity);
  StreamSnapshot snapshot() const;

 private:
  mutable std::mutex mu_;
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
  QuantileSketch sketch_;
};

std::string to_json(const StreamSnapshot& snapshot);

}  // namespace fairsense
