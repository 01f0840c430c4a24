#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "scopekit/geometry.hpp"
#include "scopekit/imaging.hpp"
#include "scopekit/warp_loss.hpp"

namespace scopekit::testkit {

/// Smooth band-limited texture on a plane, coordinates in metres.
class PlaneTexture {
 public:
  explicit PlaneTexture(std::uint64_t seed, double min_wavelength = 0.004, double max_wavelength = 0.012) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> angle(0.0, 2.0 * M_PI);
    std::uniform_real_distribution<double> wl(min_wavelength, max_wavelength);
    for (int i = 0; i < 8; ++i) {
      const double a = angle(rng);
      const double k = 2.0 * M_PI / wl(rng);
      waves_.push_back({k * std::cos(a), k * std::sin(a), angle(rng)});
    }
  }

  /// Values lie in [0.15, 0.65].
  [[nodiscard]] double operator()(double X, double Y) const {
    double s = 0.0;
    for (const Wave& w : waves_) s += std::sin(w.kx * X + w.ky * Y + w.phase);
    return 0.4 + 0.25 * s / static_cast<double>(waves_.size());
  }

 private:
  struct Wave {
    double kx, ky, phase;
  };
  std::vector<Wave> waves_;
};

/// Small wide-angle pinhole camera without distortion, principal point at the
/// image centre so that a 180 degree roll maps pixels onto pixels.
inline CameraIntrinsics render_camera(int width = 128, int height = 96, double f = 80.0) {
  CameraIntrinsics K;
  K.fx = f;
  K.fy = f;
  K.cx = (width - 1) / 2.0;
  K.cy = (height - 1) / 2.0;
  K.width = width;
  K.height = height;
  return K;
}

/// Renders the plane Z = z0 (reference frame) as seen by a camera whose pose
/// maps reference-frame points into its own frame. `plane_to_ref` moves the
/// textured plane before rendering.
inline ImageBuffer render_plane(const PlaneTexture& tex, const CameraIntrinsics& K, double z0,
                                const Pose& ref_to_cam = Pose::identity(),
                                const Pose& plane_to_ref = Pose::identity(), double gain = 1.0) {
  ImageBuffer img(K.width, K.height, 1);
  const Pose cam_to_ref = inverse(ref_to_cam);
  const Pose ref_to_plane = inverse(plane_to_ref);
  const Pose cam_to_plane = compose(ref_to_plane, cam_to_ref);
  const Eigen::Vector3d C = cam_to_plane.translation();
  const Eigen::Matrix3d R = cam_to_plane.rotation_matrix();
  for (int y = 0; y < K.height; ++y) {
    for (int x = 0; x < K.width; ++x) {
      const Eigen::Vector3d ray((x - K.cx) / K.fx, (y - K.cy) / K.fy, 1.0);
      const Eigen::Vector3d d = R * ray;
      const double lambda = (z0 - C.z()) / d.z();
      const Eigen::Vector3d P = C + lambda * d;
      img.at(x, y) = std::clamp(gain * tex(P.x(), P.y()), 0.0, 1.0);
    }
  }
  return img;
}

/// Depth (Z in the camera frame) of the plane rendered by render_plane.
inline DepthMap render_plane_depth(const CameraIntrinsics& K, double z0, const Pose& plane_to_ref = Pose::identity()) {
  DepthMap d(K.width, K.height);
  const Eigen::Vector3d n = plane_to_ref.rotation() * Eigen::Vector3d::UnitZ();
  const Eigen::Vector3d p0 = plane_to_ref * Eigen::Vector3d(0, 0, z0);
  for (int y = 0; y < K.height; ++y) {
    for (int x = 0; x < K.width; ++x) {
      const Eigen::Vector3d ray((x - K.cx) / K.fx, (y - K.cy) / K.fy, 1.0);
      const double lambda = n.dot(p0) / n.dot(ray);
      d.depth(x, y) = lambda;
      d.valid(x, y) = lambda > 0.0;
    }
  }
  return d;
}

}  // namespace scopekit::testkit
