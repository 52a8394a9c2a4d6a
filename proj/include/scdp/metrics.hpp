#pragma once

// Tracking metrics: 1-Wasserstein distance between empirical scalar
// distributions and mean per-marker position error (MPJPE) in local and
// global frames.

#include <array>
#include <vector>

#include "scdp/core.hpp"

namespace scdp {

// Exact W1 between two empirical distributions (any sizes) via the
// quantile-function integral.
double wasserstein1(std::vector<double> a, std::vector<double> b);

// Mean Euclidean error over steps and markers, scaled by 1000 (mm analog).
// Trace layout: [step][marker][coordinate].
template <std::size_t Dim>
double mpjpe(const std::vector<std::array<std::array<double, Dim>,
                                          kMarkerCount>>& test,
             const std::vector<std::array<std::array<double, Dim>,
                                          kMarkerCount>>& ref) {
  const std::size_t n = std::min(test.size(), ref.size());
  if (n == 0) return 0.0;
  double acc = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    for (std::size_t m = 0; m < kMarkerCount; ++m) {
      double sq = 0.0;
      for (std::size_t d = 0; d < Dim; ++d) {
        const double e = test[t][m][d] - ref[t][m][d];
        sq += e * e;
      }
      acc += std::sqrt(sq);
    }
  }
  return 1000.0 * acc / static_cast<double>(n * kMarkerCount);
}

// Per-step speed magnitudes from a position trace (finite difference / dt),
// pooled over markers.
template <std::size_t Dim>
std::vector<double> speed_magnitudes(
    const std::vector<std::array<std::array<double, Dim>, kMarkerCount>>& trace,
    double dt) {
  std::vector<double> out;
  for (std::size_t t = 1; t < trace.size(); ++t) {
    for (std::size_t m = 0; m < kMarkerCount; ++m) {
      double sq = 0.0;
      for (std::size_t d = 0; d < Dim; ++d) {
        const double v = (trace[t][m][d] - trace[t - 1][m][d]) / dt;
        sq += v * v;
      }
      out.push_back(std::sqrt(sq));
    }
  }
  return out;
}

inline std::vector<double> accel_magnitudes(const std::vector<double>& speeds,
                                            std::size_t stride, double dt) {
  // speeds are pooled marker-major per step; stride = kMarkerCount
  std::vector<double> out;
  for (std::size_t i = stride; i < speeds.size(); ++i) {
    out.push_back(std::abs(speeds[i] - speeds[i - stride]) / dt);
  }
  return out;
}

}  // namespace scdp
