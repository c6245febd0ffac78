#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "gevrey/errors.hpp"

namespace gevrey {

/// Running integral of piecewise-linear data: out[i] = int_{t_0}^{t_i} y.
inline std::vector<double> cumulative_trapezoid(std::span<const double> t, std::span<const double> y) {
  if (t.size() != y.size()) throw ParameterError("cumulative_trapezoid: size mismatch");
  std::vector<double> out(t.size(), 0.0);
  for (std::size_t i = 1; i < t.size(); ++i) out[i] = out[i - 1] + 0.5 * (t[i] - t[i - 1]) * (y[i] + y[i - 1]);
  return out;
}

/// Piecewise-linear interpolation on strictly increasing nodes, clamped at the ends.
inline double interpolate(std::span<const double> t, std::span<const double> y, double x) {
  if (t.empty()) throw ParameterError("interpolate: no samples");
  if (x <= t.front()) return y.front();
  if (x >= t.back()) return y.back();
  const auto it = std::upper_bound(t.begin(), t.end(), x);
  const auto i = static_cast<std::size_t>(it - t.begin());
  const double w = (x - t[i - 1]) / (t[i] - t[i - 1]);
  return (1.0 - w) * y[i - 1] + w * y[i];
}

/// int_{t_0}^{x} of the piecewise-linear interpolant.
inline double integrate_to(std::span<const double> t, std::span<const double> y, double x) {
  if (t.empty()) throw ParameterError("integrate_to: no samples");
  if (x < t.front() - 1e-12 || x > t.back() + 1e-12)
    throw ParameterError("integrate_to: t=" + std::to_string(x) + " outside the sampled range");
  double acc = 0.0;
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (x <= t[i - 1]) break;
    const double b = std::min(x, t[i]);
    const double yb = interpolate(t, y, b);
    acc += 0.5 * (b - t[i - 1]) * (y[i - 1] + yb);
  }
  return acc;
}

/// Checks that times are strictly increasing.
inline void require_increasing(std::span<const double> t, const char* where) {
  for (std::size_t i = 1; i < t.size(); ++i)
    if (!(t[i] > t[i - 1])) throw ParameterError(std::string(where) + ": sample times must be strictly increasing");
}

}  // namespace gevrey
