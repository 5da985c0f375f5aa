#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "fairsense/model.hpp"
#include "fairsense/rng.hpp"
#include "fairsense/schema.hpp"

namespace fairsense::testing {

inline std::filesystem::path data_dir() { return FAIRSENSE_DATA_DIR; }
inline std::filesystem::path adult_train() { return data_dir() / "adult.data"; }
inline std::filesystem::path adult_test() { return data_dir() / "adult.test"; }

inline double rel_err(double a, double b, double floor = 1e-7) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Weights in [-1, 1], biases in [-0.5, 0.5].
inline MlpModel random_mlp(Rng& rng, const std::vector<std::size_t>& dims) {
  std::vector<DenseLayer> layers;
  for (std::size_t l = 0; l + 1 < dims.size(); ++l) {
    std::vector<double> w(dims[l + 1] * dims[l]);
    for (double& v : w) v = rng.uniform(-1.0, 1.0);
    std::vector<double> b(dims[l + 1]);
    for (double& v : b) v = rng.uniform(-0.5, 0.5);
    layers.push_back({Tensor::matrix(dims[l + 1], dims[l], std::move(w)), Tensor::vector(std::move(b))});
  }
  return MlpModel(std::move(layers));
}

inline std::vector<double> random_vector(Rng& rng, std::size_t n, double scale = 1.0) {
  std::vector<double> x(n);
  for (double& v : x) v = rng.uniform(-scale, scale);
  return x;
}

// Smallest |pre-activation| over every hidden unit; finite differences are
// only trusted away from ReLU kinks.
inline double min_hidden_margin(const MlpModel& model, std::span<const double> x) {
  std::vector<double> a(x.begin(), x.end());
  double margin = INFINITY;
  const auto& layers = model.layers();
  for (std::size_t l = 0; l + 1 < layers.size(); ++l) {
    const Tensor& w = layers[l].weights;
    std::vector<double> z(w.dim(0));
    for (std::size_t r = 0; r < w.dim(0); ++r) {
      double s = layers[l].bias[r];
      for (std::size_t c = 0; c < w.dim(1); ++c) s += w.at(r, c) * a[c];
      margin = std::min(margin, std::abs(s));
      z[r] = std::max(s, 0.0);
    }
    a = std::move(z);
  }
  return margin;
}

inline double central_difference(const auto& f, double& slot, double h = 1e-5) {
  const double saved = slot;
  slot = saved + h;
  const double up = f();
  slot = saved - h;
  const double down = f();
  slot = saved;
  return (up - down) / (2.0 * h);
}

// Two continuous features "a", "b" and a binary protected "sex".
inline FeatureSchema tiny_schema() {
  std::vector<FeatureGroup> groups{
      {"a", GroupKind::kContinuous, 0, 1, {}, 0.0, 1.0},
      {"b", GroupKind::kContinuous, 1, 2, {}, 0.0, 1.0},
      {"sex", GroupKind::kBinaryCategorical, 2, 3, {"Female", "Male"}, 0.0, 1.0},
  };
  return FeatureSchema(std::move(groups), "sex", "Male", "y", "1", {"0", "1"});
}

}  // namespace fairsense::testing
