#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace scopekit {

using Vector6d = Eigen::Matrix<double, 6, 1>;

/// Rigid motion in SE(3): unit quaternion + translation.
///
/// Quaternion components are exchanged in (x, y, z, w) order everywhere in
/// this library (files, CLI, accessors), matching the dataset pose files.
/// Note that Eigen's own Quaterniond(w, x, y, z) constructor is w-first; use
/// from_xyzw() to avoid mixing the two conventions.
class Pose {
 public:
  Pose();  // identity
  Pose(const Eigen::Quaterniond& q, const Eigen::Vector3d& t);
  Pose(const Eigen::Matrix3d& R, const Eigen::Vector3d& t);

  static Pose identity() { return {}; }
  static Pose from_xyzw(double qx, double qy, double qz, double qw, const Eigen::Vector3d& t);
  static Pose from_axis_angle(const Eigen::Vector3d& axis, double angle_rad,
                              const Eigen::Vector3d& t = Eigen::Vector3d::Zero());
  /// Rotation block is projected onto SO(3) before conversion.
  static Pose from_matrix(const Eigen::Matrix4d& T);

  [[nodiscard]] const Eigen::Quaterniond& rotation() const { return q_; }
  [[nodiscard]] const Eigen::Vector3d& translation() const { return t_; }
  [[nodiscard]] Eigen::Matrix3d rotation_matrix() const { return q_.toRotationMatrix(); }
  [[nodiscard]] Eigen::Matrix4d matrix() const;
  /// (qx, qy, qz, qw)
  [[nodiscard]] Eigen::Vector4d xyzw() const;

  Eigen::Vector3d operator*(const Eigen::Vector3d& X) const { return q_ * X + t_; }

 private:
  Eigen::Quaterniond q_;
  Eigen::Vector3d t_;
};

/// a∘b: applies b first, then a.
Pose compose(const Pose& a, const Pose& b);
Pose inverse(const Pose& p);
inline Pose operator*(const Pose& a, const Pose& b) { return compose(a, b); }

/// Positive rotation angle in [0, pi].
double rotation_angle(const Pose& p);

/// Left perturbation used by the optimizers: xi = (rotation vector, translation).
/// Returns (exp(xi_rot), xi_trans) ∘ p.
Pose perturb(const Pose& p, const Vector6d& xi);

// ---------------------------------------------------------------------------
// Camera models

enum class CameraModel { kPinhole, kFisheye };

std::string_view to_string(CameraModel model);
CameraModel camera_model_from_string(std::string_view name);

/// Intrinsics in pixels. Pinhole uses r_d = r (1 + k1 r^2 + k2 r^4) on the
/// normalized radius; fisheye is equidistant, r_d = theta (1 + k1 theta^2 + k2 theta^4).
struct CameraIntrinsics {
  CameraModel model = CameraModel::kPinhole;
  double fx = 1.0;
  double fy = 1.0;
  double skew = 0.0;
  double cx = 0.0;
  double cy = 0.0;
  double k1 = 0.0;
  double k2 = 0.0;
  int width = 1;
  int height = 1;

  /// Throws InvalidArgument unless fx, fy, width and height are positive.
  void validate() const;

  [[nodiscard]] bool has_distortion() const { return k1 != 0.0 || k2 != 0.0; }

  /// Intrinsics for an image resampled by `factor` (0.5 = half resolution),
  /// using pixel-centre alignment.
  [[nodiscard]] CameraIntrinsics scaled(double factor) const;
};

/// Radial distortion polynomial u (1 + k1 u^2 + k2 u^4).
double radial_distortion(const CameraIntrinsics& K, double u);

/// Largest undistorted radius (or angle, for fisheye) on which the distortion
/// polynomial is strictly increasing; +inf when it is monotone everywhere.
double max_monotone_radius(const CameraIntrinsics& K);

/// Undistorted normalized coordinates (X/Z, Y/Z) -> distorted normalized coordinates.
Eigen::Vector2d distort(const CameraIntrinsics& K, const Eigen::Vector2d& normalized);

/// Inverse of distort() by damped Newton on the radius (50 iterations, 1e-10 step
/// tolerance). Throws DistortionInversionFailed outside the monotone region.
Eigen::Vector2d undistort(const CameraIntrinsics& K, const Eigen::Vector2d& distorted);

/// Camera-frame point -> pixel. Throws NonPositiveDepth for pinhole with Z <= 0.
Eigen::Vector2d project(const CameraIntrinsics& K, const Eigen::Vector3d& X);

/// Pixel + depth (Z, same unit as the returned point) -> camera-frame point.
Eigen::Vector3d unproject(const CameraIntrinsics& K, const Eigen::Vector2d& pixel, double depth);

/// True when the pixel lies inside the region where the distortion model is invertible.
bool in_calibrated_fov(const CameraIntrinsics& K, const Eigen::Vector2d& pixel);

/// Intrinsics of the cameras tabulated for the dataset (pinhole calibrations).
/// Names: HighCam, LowCam, HighModified, LowModified, MiroCam, PillCamCam1, PillCamCam2.
CameraIntrinsics camera_preset(std::string_view name);
std::vector<std::string> camera_preset_names();

// ---------------------------------------------------------------------------
// Hand-eye

/// Camera-to-gripper transform X_g = R X_c + t, translation in millimetres.
class HandEye {
 public:
  HandEye();
  /// R is replaced by its nearest rotation (tabulated matrices are rounded to
  /// four decimals). Throws InvalidArgument when R is further than 5e-3 from SO(3).
  HandEye(const Eigen::Matrix3d& R, const Eigen::Vector3d& t_mm);

  [[nodiscard]] const Eigen::Matrix3d& rotation() const { return R_; }
  [[nodiscard]] const Eigen::Vector3d& translation_mm() const { return t_; }

 private:
  Eigen::Matrix3d R_;
  Eigen::Vector3d t_;
};

Eigen::Vector3d apply_hand_eye(const HandEye& h, const Eigen::Vector3d& Xc_mm);

/// Names: MiroCam, HighCam, LowCam.
HandEye hand_eye_preset(std::string_view name);

inline double mm_to_m(double mm) { return mm * 1e-3; }
inline double m_to_mm(double m) { return m * 1e3; }

// ---------------------------------------------------------------------------
// Point-set registration

/// x -> scale * R x + t
struct Similarity {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  double scale = 1.0;

  Eigen::Vector3d operator()(const Eigen::Vector3d& x) const { return scale * (R * x) + t; }
  [[nodiscard]] Eigen::Matrix4d matrix() const;
};

/// Closed-form least-squares fit of dst ≈ S(src) (Umeyama/SVD). Throws
/// DegenerateGeometry when fewer than 3 points are given or the source points
/// are collinear or coincident.
Similarity fit_similarity(std::span<const Eigen::Vector3d> src,
                          std::span<const Eigen::Vector3d> dst, bool with_scale);

/// Nearest rotation matrix in the Frobenius sense.
Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& M);

}  // namespace scopekit
