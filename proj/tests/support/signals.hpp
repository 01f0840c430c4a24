#pragma once

#include <cmath>
#include <random>
#include <vector>

namespace scopekit::testkit {

/// Smoothed random walk: broadband enough to give a sharp correlation peak.
inline std::vector<double> smooth_random_signal(std::mt19937_64& rng, std::size_t n, double smoothing = 0.7) {
  std::normal_distribution<double> g;
  std::vector<double> out(n);
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    s = smoothing * s + g(rng);
    out[i] = s;
  }
  return out;
}

/// out[i] = x[i - k], padded with fresh noise where the source is undefined.
inline std::vector<double> delayed(const std::vector<double>& x, int k, std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  std::vector<double> out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const long j = static_cast<long>(i) - k;
    out[i] = j >= 0 && j < static_cast<long>(x.size()) ? x[static_cast<std::size_t>(j)] : g(rng);
  }
  return out;
}

}  // namespace scopekit::testkit
