#include "scopekit/point_cloud.hpp"

#include <cmath>
#include <string>

#include "scopekit/error.hpp"

namespace scopekit {

std::string_view to_string(LengthUnit unit) {
  switch (unit) {
    case LengthUnit::kMillimeter:
      return "mm";
    case LengthUnit::kCentimeter:
      return "cm";
    case LengthUnit::kMeter:
      return "m";
  }
  return "mm";
}

LengthUnit length_unit_from_string(std::string_view name) {
  if (name == "mm") return LengthUnit::kMillimeter;
  if (name == "cm") return LengthUnit::kCentimeter;
  if (name == "m") return LengthUnit::kMeter;
  fail(ErrorCode::kParse, "unknown length unit '" + std::string(name) + "'");
}

double to_centimeters(LengthUnit unit) {
  switch (unit) {
    case LengthUnit::kMillimeter:
      return 0.1;
    case LengthUnit::kCentimeter:
      return 1.0;
    case LengthUnit::kMeter:
      return 100.0;
  }
  return 1.0;
}

void PointCloud::validate() const {
  if (!normals.empty() && normals.size() != points.size()) {
    fail(ErrorCode::kInvalidArgument, "normals must match points one to one");
  }
  for (const auto& p : points) {
    if (!p.allFinite()) fail(ErrorCode::kInvalidArgument, "point cloud holds a non-finite coordinate");
  }
}

void TriMesh::validate() const {
  for (const auto& v : vertices) {
    if (!v.allFinite()) fail(ErrorCode::kInvalidArgument, "mesh holds a non-finite vertex");
  }
  const auto n = static_cast<long>(vertices.size());
  for (const auto& f : faces) {
    for (int i : f) {
      if (i < 0 || i >= n) fail(ErrorCode::kInvalidArgument, "mesh face index out of range");
    }
  }
}

PointCloud convert_units(const PointCloud& cloud, LengthUnit unit) {
  PointCloud out = cloud;
  const double s = to_centimeters(cloud.unit) / to_centimeters(unit);
  out.unit = unit;
  if (s != 1.0) {
    for (auto& p : out.points) p *= s;
  }
  return out;
}

TriMesh convert_units(const TriMesh& mesh, LengthUnit unit) {
  TriMesh out = mesh;
  const double s = to_centimeters(mesh.unit) / to_centimeters(unit);
  out.unit = unit;
  if (s != 1.0) {
    for (auto& v : out.vertices) v *= s;
  }
  return out;
}

Eigen::Vector3d closest_point_on_triangle(const Eigen::Vector3d& p, const Eigen::Vector3d& a,
                                          const Eigen::Vector3d& b, const Eigen::Vector3d& c) {
  const Eigen::Vector3d ab = b - a;
  const Eigen::Vector3d ac = c - a;
  const Eigen::Vector3d ap = p - a;
  const double d1 = ab.dot(ap);
  const double d2 = ac.dot(ap);
  if (d1 <= 0.0 && d2 <= 0.0) return a;

  const Eigen::Vector3d bp = p - b;
  const double d3 = ab.dot(bp);
  const double d4 = ac.dot(bp);
  if (d3 >= 0.0 && d4 <= d3) return b;

  const double vc = d1 * d4 - d3 * d2;
  if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return a + ab * (d1 / (d1 - d3));

  const Eigen::Vector3d cp = p - c;
  const double d5 = ab.dot(cp);
  const double d6 = ac.dot(cp);
  if (d6 >= 0.0 && d5 <= d6) return c;

  const double vb = d5 * d2 - d1 * d6;
  if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return a + ac * (d2 / (d2 - d6));

  const double va = d3 * d6 - d5 * d4;
  if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {
    return b + (c - b) * ((d4 - d3) / ((d4 - d3) + (d5 - d6)));
  }
  const double denom = va + vb + vc;
  if (!(std::abs(denom) > 0.0)) return a;
  return a + ab * (vb / denom) + ac * (vc / denom);
}

}  // namespace scopekit
