#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <vector>

namespace fevi {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Relative tolerance used for every argmax/argmin tie decision.
inline constexpr double kTieTolerance = 1e-12;

inline bool is_pos_inf(double v) { return v == kInf; }
inline bool is_neg_inf(double v) { return v == -kInf; }

inline bool ties_with(double value, double best) {
  return std::abs(value - best) <= kTieTolerance * std::max(1.0, std::abs(best));
}

/// Scaled log-partition (1/scale) * log sum_k w_k exp(scale * x_k) for finite,
/// nonzero scale. Entries with zero weight are ignored. Computed as
/// xmax + log1p(sum_k w_k expm1(scale (x_k - xmax)) + (sum w - 1)) / scale
/// where xmax is the extreme value in the direction of the scale sign, which
/// keeps every exponent <= 0 and stays accurate as scale -> 0.
inline double scaled_log_sum_exp(std::span<const double> weights, std::span<const double> x,
                                 double scale) {
  double pivot = scale > 0 ? -kInf : kInf;
  double weight_sum = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    weight_sum += weights[k];
    pivot = scale > 0 ? std::max(pivot, x[k]) : std::min(pivot, x[k]);
  }
  double acc = weight_sum - 1.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    acc += weights[k] * std::expm1(scale * (x[k] - pivot));
  }
  return pivot + std::log1p(acc) / scale;
}

/// Normalized softmax weights p_k ∝ w_k exp(scale x_k), shift-stable.
inline std::vector<double> tilted_weights(std::span<const double> weights, std::span<const double> x,
                                          double scale) {
  double pivot = scale > 0 ? -kInf : kInf;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    pivot = scale > 0 ? std::max(pivot, x[k]) : std::min(pivot, x[k]);
  }
  std::vector<double> out(x.size(), 0.0);
  double total = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    out[k] = weights[k] * std::exp(scale * (x[k] - pivot));
    total += out[k];
  }
  for (auto& v : out) v /= total;
  return out;
}

/// Uniform distribution over the entries (with positive weight) that tie with
/// the maximum (maximize = true) or the minimum of x.
inline std::vector<double> uniform_over_extremes(std::span<const double> weights,
                                                 std::span<const double> x, bool maximize) {
  double best = maximize ? -kInf : kInf;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (weights[k] <= 0.0) continue;
    best = maximize ? std::max(best, x[k]) : std::min(best, x[k]);
  }
  std::vector<double> out(x.size(), 0.0);
  std::size_t count = 0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    if (weights[k] > 0.0 && ties_with(x[k], best)) {
      out[k] = 1.0;
      ++count;
    }
  }
  for (auto& v : out) v /= static_cast<double>(count);
  return out;
}

inline double sup_norm_distance(std::span<const double> a, std::span<const double> b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

}  // namespace fevi
