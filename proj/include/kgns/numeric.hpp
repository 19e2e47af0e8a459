#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

namespace kgns {

inline double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

/// log(sigmoid(z)) without overflow for large |z|.
inline double log_sigmoid(double z) {
  if (z >= 0) return -std::log1p(std::exp(-z));
  return z - std::log1p(std::exp(z));
}

/// Softmax of temperature * values, shifted by the max for stability.
inline std::vector<double> softmax(std::span<const double> values, double temperature = 1.0) {
  std::vector<double> out(values.size());
  if (values.empty()) return out;
  double top = temperature * values[0];
  for (double v : values) top = std::max(top, temperature * v);
  double total = 0;
  for (std::size_t i = 0; i < values.size(); ++i) {
    out[i] = std::exp(temperature * values[i] - top);
    total += out[i];
  }
  for (double& w : out) w /= total;
  return out;
}

inline double sign(double v) { return (v > 0) - (v < 0); }

}  // namespace kgns
