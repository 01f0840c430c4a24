#pragma once

#include <memory>
#include <span>
#include <vector>

#include "scopekit/geometry.hpp"
#include "scopekit/point_cloud.hpp"

namespace scopekit {

/// Nearest-point queries against a fixed cloud or triangle mesh.
class NearestTarget {
 public:
  virtual ~NearestTarget() = default;
  [[nodiscard]] virtual Eigen::Vector3d closest(const Eigen::Vector3d& p) const = 0;
  [[nodiscard]] virtual LengthUnit unit() const = 0;
};

/// Exact nearest target point via a k-d tree.
std::unique_ptr<NearestTarget> make_cloud_target(const PointCloud& target);
/// Exact closest point on the mesh surface via a bounding-volume hierarchy.
std::unique_ptr<NearestTarget> make_mesh_target(const TriMesh& target);

struct IcpOptions {
  int max_iterations = 200;
  /// Stop once consecutive RMSE values differ by less than this (cm).
  double rmse_delta_cm = 0.001;
  /// Consecutive RMSE increases tolerated before Diverged is raised.
  int max_increases = 3;
};

struct IcpResult {
  /// Maps source coordinates onto the target (source units).
  Pose transform;
  /// RMSE at each correspondence step, in centimetres. An exact fit ends the run.
  std::vector<double> rmse_cm;
  /// RMSE under `transform`, in source units.
  double rmse = 0.0;
  /// Per-point distances to the target under `transform`, in source units.
  std::vector<double> distances;
  bool converged = false;
};

/// Point-to-point ICP with closed-form rigid updates. Each iteration finds
/// correspondences, records the RMSE, stops when it changed by less than
/// rmse_delta_cm, and otherwise applies the least-squares rigid update.
/// The target is expressed in the source unit. Throws TooFewPoints, Diverged.
IcpResult icp(const PointCloud& source, const NearestTarget& target, const Pose& init = {},
              const IcpOptions& opts = {});
IcpResult icp(const PointCloud& source, const PointCloud& target, const Pose& init = {}, const IcpOptions& opts = {});
IcpResult icp(const PointCloud& source, const TriMesh& target, const Pose& init = {}, const IcpOptions& opts = {});

/// Coarse alignment from labelled point pairs: with two pairs, the segment is
/// rotated minimally onto the target segment and the midpoints are matched;
/// with three or more, the least-squares rigid fit is used.
/// Throws TooFewPoints or DegenerateGeometry.
Pose initial_alignment(std::span<const Eigen::Vector3d> source, std::span<const Eigen::Vector3d> target);

}  // namespace scopekit
