#pragma once

#include <array>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace scopekit {

enum class LengthUnit { kMillimeter, kCentimeter, kMeter };

std::string_view to_string(LengthUnit unit);
/// Accepts "mm", "cm" and "m". Throws Parse.
LengthUnit length_unit_from_string(std::string_view name);
/// Multiplier converting a length in `unit` to centimetres.
double to_centimeters(LengthUnit unit);

struct PointCloud {
  std::vector<Eigen::Vector3d> points;
  std::vector<Eigen::Vector3d> normals;  // empty or one per point
  LengthUnit unit = LengthUnit::kMillimeter;

  [[nodiscard]] std::size_t size() const { return points.size(); }
  /// Throws InvalidArgument for non-finite coordinates or a normals count mismatch.
  void validate() const;
};

struct TriMesh {
  std::vector<Eigen::Vector3d> vertices;
  std::vector<std::array<int, 3>> faces;
  LengthUnit unit = LengthUnit::kMillimeter;

  /// Throws InvalidArgument for non-finite vertices or out-of-range indices.
  void validate() const;
};

/// Rescales coordinates into another unit.
PointCloud convert_units(const PointCloud& cloud, LengthUnit unit);
TriMesh convert_units(const TriMesh& mesh, LengthUnit unit);

/// Closest point to p on triangle (a, b, c).
Eigen::Vector3d closest_point_on_triangle(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                                          const Eigen::Vector3d& b, const Eigen::Vector3d& c);

}  // namespace scopekit
