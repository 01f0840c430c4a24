#pragma once

#include <cmath>
#include <random>

#include "scopekit/geometry.hpp"
#include "scopekit/point_cloud.hpp"

namespace scopekit::testkit {

/// Irregular bumpy surface patch roughly 100 mm across.
inline PointCloud surface_cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-50.0, 50.0);
  PointCloud c;
  c.unit = LengthUnit::kMillimeter;
  for (std::size_t i = 0; i < n; ++i) {
    const double x = u(rng);
    const double y = u(rng);
    const double z = 12.0 * std::sin(x / 14.0) * std::cos(y / 19.0) + 0.004 * x * x - 0.003 * x * y +
                     6.0 * std::exp(-((x - 15) * (x - 15) + (y + 10) * (y + 10)) / 200.0);
    c.points.emplace_back(x, y, z);
  }
  return c;
}

inline PointCloud transformed(const PointCloud& c, const Pose& T) {
  PointCloud out = c;
  for (auto& p : out.points) p = T * p;
  return out;
}

/// Rotation up to max_deg about a random axis and translation up to max_t.
inline Pose random_rigid(std::mt19937_64& rng, double max_deg, double max_t) {
  std::normal_distribution<double> g;
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::Vector3d axis(g(rng), g(rng), g(rng));
  axis.normalize();
  Eigen::Vector3d dir(g(rng), g(rng), g(rng));
  dir.normalize();
  return Pose::from_axis_angle(axis, max_deg * u(rng) * M_PI / 180.0, dir * (max_t * u(rng)));
}

}  // namespace scopekit::testkit
