#include "scopekit/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

#include "scopekit/error.hpp"

namespace scopekit {

// ---------------------------------------------------------------------------
// Pose

Pose::Pose() : q_(Eigen::Quaterniond::Identity()), t_(Eigen::Vector3d::Zero()) {}

Pose::Pose(const Eigen::Quaterniond& q, const Eigen::Vector3d& t) : q_(q), t_(t) {
  const double n = q_.norm();
  if (!(n > 0.0) || !std::isfinite(n)) fail(ErrorCode::kInvalidArgument, "quaternion has zero norm");
  q_.coeffs() /= n;
}

Pose::Pose(const Eigen::Matrix3d& R, const Eigen::Vector3d& t)
    : Pose(Eigen::Quaterniond(nearest_rotation(R)), t) {}

Pose Pose::from_xyzw(double qx, double qy, double qz, double qw, const Eigen::Vector3d& t) {
  return {Eigen::Quaterniond(qw, qx, qy, qz), t};
}

Pose Pose::from_axis_angle(const Eigen::Vector3d& axis, double angle_rad, const Eigen::Vector3d& t) {
  const double n = axis.norm();
  if (!(n > 0.0)) return {Eigen::Quaterniond::Identity(), t};
  return {Eigen::Quaterniond(Eigen::AngleAxisd(angle_rad, axis / n)), t};
}

Pose Pose::from_matrix(const Eigen::Matrix4d& T) {
  return {Eigen::Matrix3d(T.topLeftCorner<3, 3>()), Eigen::Vector3d(T.topRightCorner<3, 1>())};
}

Eigen::Matrix4d Pose::matrix() const {
  Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
  T.topLeftCorner<3, 3>() = q_.toRotationMatrix();
  T.topRightCorner<3, 1>() = t_;
  return T;
}

Eigen::Vector4d Pose::xyzw() const { return {q_.x(), q_.y(), q_.z(), q_.w()}; }

Pose compose(const Pose& a, const Pose& b) {
  return {a.rotation() * b.rotation(), a.rotation() * b.translation() + a.translation()};
}

Pose inverse(const Pose& p) {
  const Eigen::Quaterniond qi = p.rotation().conjugate();
  return {qi, -(qi * p.translation())};
}

double rotation_angle(const Pose& p) {
  // 2 acos(|w|), evaluated through atan2 to stay accurate near 0 and pi.
  const Eigen::Quaterniond& q = p.rotation();
  return 2.0 * std::atan2(q.vec().norm(), std::abs(q.w()));
}

Pose perturb(const Pose& p, const Vector6d& xi) {
  const Eigen::Vector3d w = xi.head<3>();
  const double angle = w.norm();
  const Eigen::Quaterniond dq =
      angle > 0.0 ? Eigen::Quaterniond(Eigen::AngleAxisd(angle, w / angle)) : Eigen::Quaterniond::Identity();
  return compose(Pose(dq, xi.tail<3>()), p);
}

// ---------------------------------------------------------------------------
// Camera models

std::string_view to_string(CameraModel model) {
  return model == CameraModel::kFisheye ? "fisheye" : "pinhole";
}

CameraModel camera_model_from_string(std::string_view name) {
  if (name == "pinhole") return CameraModel::kPinhole;
  if (name == "fisheye") return CameraModel::kFisheye;
  fail(ErrorCode::kParse, "unknown camera model '" + std::string(name) + "'");
}

void CameraIntrinsics::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0)) fail(ErrorCode::kInvalidArgument, "focal lengths must be positive");
  if (width <= 0 || height <= 0) fail(ErrorCode::kInvalidArgument, "sensor size must be positive");
  for (double v : {fx, fy, skew, cx, cy, k1, k2}) {
    if (!std::isfinite(v)) fail(ErrorCode::kInvalidArgument, "intrinsics must be finite");
  }
}

CameraIntrinsics CameraIntrinsics::scaled(double factor) const {
  CameraIntrinsics out = *this;
  out.fx *= factor;
  out.fy *= factor;
  out.skew *= factor;
  out.cx = (cx + 0.5) * factor - 0.5;
  out.cy = (cy + 0.5) * factor - 0.5;
  out.width = std::max(1, static_cast<int>(std::floor(width * factor)));
  out.height = std::max(1, static_cast<int>(std::floor(height * factor)));
  return out;
}

double radial_distortion(const CameraIntrinsics& K, double u) {
  const double u2 = u * u;
  return u * (1.0 + K.k1 * u2 + K.k2 * u2 * u2);
}

double max_monotone_radius(const CameraIntrinsics& K) {
  // d/du [u (1 + k1 u^2 + k2 u^4)] = 1 + 3 k1 s + 5 k2 s^2 with s = u^2.
  const double a = 5.0 * K.k2;
  const double b = 3.0 * K.k1;
  constexpr double inf = std::numeric_limits<double>::infinity();
  double s_min = inf;
  if (a == 0.0) {
    if (b < 0.0) s_min = -1.0 / b;
  } else {
    const double disc = b * b - 4.0 * a;
    if (disc >= 0.0) {
      const double sq = std::sqrt(disc);
      for (double s : {(-b - sq) / (2.0 * a), (-b + sq) / (2.0 * a)}) {
        if (s > 0.0) s_min = std::min(s_min, s);
      }
    }
  }
  double limit = std::isfinite(s_min) ? std::sqrt(s_min) : inf;
  if (K.model == CameraModel::kFisheye) limit = std::min(limit, M_PI);
  return limit;
}

namespace {

// Solves radial_distortion(K, u) = target for u in [0, limit).
double invert_radius(const CameraIntrinsics& K, double target) {
  if (target == 0.0) return 0.0;
  if (!K.has_distortion()) return target;
  const double limit = max_monotone_radius(K);
  if (std::isfinite(limit) && target >= radial_distortion(K, limit)) {
    fail(ErrorCode::kDistortionInversionFailed, "distorted radius outside the invertible field of view");
  }
  double u = target;
  if (std::isfinite(limit) && u >= limit) u = 0.5 * limit;
  for (int iter = 0; iter < 50; ++iter) {
    const double u2 = u * u;
    const double g = radial_distortion(K, u) - target;
    const double dg = 1.0 + 3.0 * K.k1 * u2 + 5.0 * K.k2 * u2 * u2;
    if (!(dg > 0.0)) break;
    double step = g / dg;
    double lambda = 1.0;
    double next = u - step;
    // Damping: halve until the residual shrinks and the iterate stays in range.
    for (int k = 0; k < 30; ++k) {
      next = u - lambda * step;
      const bool in_range = next >= 0.0 && (!std::isfinite(limit) || next < limit);
      if (in_range && std::abs(radial_distortion(K, next) - target) <= std::abs(g)) break;
      lambda *= 0.5;
    }
    const double moved = std::abs(next - u);
    u = next;
    if (moved < 1e-10) return u;
  }
  fail(ErrorCode::kDistortionInversionFailed, "radial distortion Newton iteration did not converge");
}

}  // namespace

Eigen::Vector2d distort(const CameraIntrinsics& K, const Eigen::Vector2d& n) {
  const double r = n.norm();
  if (r == 0.0) return n;
  if (K.model == CameraModel::kPinhole) return n * (radial_distortion(K, r) / r);
  const double theta = std::atan(r);
  return n * (radial_distortion(K, theta) / r);
}

Eigen::Vector2d undistort(const CameraIntrinsics& K, const Eigen::Vector2d& d) {
  const double rd = d.norm();
  if (rd == 0.0) return d;
  const double u = invert_radius(K, rd);
  if (K.model == CameraModel::kPinhole) return d * (u / rd);
  if (u >= M_PI_2) {
    fail(ErrorCode::kDistortionInversionFailed, "fisheye ray at or beyond 90 degrees has no finite normalized point");
  }
  return d * (std::tan(u) / rd);
}

namespace {

Eigen::Vector2d apply_affine(const CameraIntrinsics& K, const Eigen::Vector2d& d) {
  return {K.fx * d.x() + K.skew * d.y() + K.cx, K.fy * d.y() + K.cy};
}

Eigen::Vector2d remove_affine(const CameraIntrinsics& K, const Eigen::Vector2d& p) {
  const double yd = (p.y() - K.cy) / K.fy;
  const double xd = (p.x() - K.cx - K.skew * yd) / K.fx;
  return {xd, yd};
}

}  // namespace

Eigen::Vector2d project(const CameraIntrinsics& K, const Eigen::Vector3d& X) {
  if (K.model == CameraModel::kPinhole) {
    if (!(X.z() > 0.0)) fail(ErrorCode::kNonPositiveDepth, "pinhole projection needs Z > 0");
    return apply_affine(K, distort(K, Eigen::Vector2d(X.x() / X.z(), X.y() / X.z())));
  }
  const double rho = std::hypot(X.x(), X.y());
  if (rho == 0.0) {
    if (!(X.z() > 0.0)) fail(ErrorCode::kNonPositiveDepth, "fisheye projection of a degenerate ray");
    return {K.cx, K.cy};
  }
  const double theta = std::atan2(rho, X.z());
  const double rd = radial_distortion(K, theta);
  return apply_affine(K, Eigen::Vector2d(X.x(), X.y()) * (rd / rho));
}

Eigen::Vector3d unproject(const CameraIntrinsics& K, const Eigen::Vector2d& pixel, double depth) {
  const Eigen::Vector2d n = undistort(K, remove_affine(K, pixel));
  return {n.x() * depth, n.y() * depth, depth};
}

bool in_calibrated_fov(const CameraIntrinsics& K, const Eigen::Vector2d& pixel) {
  const double limit = max_monotone_radius(K);
  double bound = std::isfinite(limit) ? radial_distortion(K, limit) : std::numeric_limits<double>::infinity();
  if (K.model == CameraModel::kFisheye) bound = std::min(bound, radial_distortion(K, M_PI_2));
  return remove_affine(K, pixel).norm() < bound;
}

CameraIntrinsics camera_preset(std::string_view name) {
  // fx, fy, s, cx, cy, k1, k2, width, height
  struct Row {
    double fx, fy, s, cx, cy, k1, k2;
    int w, h;
  };
  static const std::map<std::string, Row, std::less<>> table = {
      {"HighCam", {957.4119, 959.3861, 5.6242, 282.1921, 170.7316, 0.2533, -0.2085, 640, 480}},
      {"LowCam", {816.8598, 814.8223, 0.2072, 308.2864, 158.3971, 0.2345, -0.7908, 640, 480}},
      {"HighModified", {603.5105, 807.6887, 4.2831, 173.7160, 133.7022, 0.2645, -0.4186, 400, 400}},
      {"LowModified", {317.6319, 423.1068, -0.3334, 121.3764, 82.5754, 0.2265, -0.8877, 250, 250}},
      {"MiroCam", {156.0418, 155.7529, 0.0, 178.5604, 181.8043, -0.2486, 0.0614, 320, 320}},
      {"PillCamCam1", {74.2002, 74.4184, 0.0, 129.9724, 129.1209, 0.1994, -0.1279, 256, 256}},
      {"PillCamCam2", {76.0535, 75.4967, 0.0, 130.9419, 128.4882, 0.1985, -0.1317, 256, 256}},
  };
  const auto it = table.find(name);
  if (it == table.end()) fail(ErrorCode::kInvalidArgument, "unknown camera preset '" + std::string(name) + "'");
  const Row& r = it->second;
  CameraIntrinsics K;
  K.model = CameraModel::kPinhole;
  K.fx = r.fx;
  K.fy = r.fy;
  K.skew = r.s;
  K.cx = r.cx;
  K.cy = r.cy;
  K.k1 = r.k1;
  K.k2 = r.k2;
  K.width = r.w;
  K.height = r.h;
  return K;
}

std::vector<std::string> camera_preset_names() {
  return {"HighCam", "LowCam", "HighModified", "LowModified", "MiroCam", "PillCamCam1", "PillCamCam2"};
}

// ---------------------------------------------------------------------------
// Hand-eye

HandEye::HandEye() : R_(Eigen::Matrix3d::Identity()), t_(Eigen::Vector3d::Zero()) {}

HandEye::HandEye(const Eigen::Matrix3d& R, const Eigen::Vector3d& t_mm) : t_(t_mm) {
  R_ = nearest_rotation(R);
  if ((R_ - R).cwiseAbs().maxCoeff() > 5e-3) {
    fail(ErrorCode::kInvalidArgument, "hand-eye rotation is not close to a rotation matrix");
  }
}

Eigen::Vector3d apply_hand_eye(const HandEye& h, const Eigen::Vector3d& Xc_mm) {
  return h.rotation() * Xc_mm + h.translation_mm();
}

HandEye hand_eye_preset(std::string_view name) {
  Eigen::Matrix3d R;
  Eigen::Vector3d t;
  if (name == "MiroCam") {
    R << -0.9366, -0.3242, -0.1325, 0.1738, -0.1017, -0.9795, 0.3041, -0.9405, 0.1516;
    t << 2.9793, -27.0224, 72.1070;
  } else if (name == "HighCam") {
    R << 0.9463, -0.0921, -0.3098, -0.1389, 0.7495, -0.6472, 0.2918, -0.6555, 0.8965;
    t << -46.2017, 20.9074, 94.6349;
    // The tabulated third row is not orthogonal to the first two; rebuild it.
    R.row(2) = R.row(0).cross(R.row(1));
  } else if (name == "LowCam") {
    R << 0.8294, 0.5577, 0.0322, -0.5586, 0.8286, 0.0379, -0.0056, -0.0495, 0.9988;
    t << 6.0169, 39.5114, 101.6431;
  } else {
    fail(ErrorCode::kInvalidArgument, "unknown hand-eye preset '" + std::string(name) + "'");
  }
  return {R, t};
}

// ---------------------------------------------------------------------------
// Registration

Eigen::Matrix4d Similarity::matrix() const {
  Eigen::Matrix4d T = Eigen::Matrix4d::Identity();
  T.topLeftCorner<3, 3>() = scale * R;
  T.topRightCorner<3, 1>() = t;
  return T;
}

Eigen::Matrix3d nearest_rotation(const Eigen::Matrix3d& M) {
  Eigen::JacobiSVD<Eigen::Matrix3d> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d D = Eigen::Matrix3d::Identity();
  if ((svd.matrixU() * svd.matrixV().transpose()).determinant() < 0.0) D(2, 2) = -1.0;
  return svd.matrixU() * D * svd.matrixV().transpose();
}

Similarity fit_similarity(std::span<const Eigen::Vector3d> src, std::span<const Eigen::Vector3d> dst,
                          bool with_scale) {
  if (src.size() != dst.size()) fail(ErrorCode::kDimensionMismatch, "point sets differ in size");
  const std::size_t n = src.size();
  if (n < 3) fail(ErrorCode::kDegenerateGeometry, "need at least 3 point pairs");

  Eigen::Vector3d mu_s = Eigen::Vector3d::Zero();
  Eigen::Vector3d mu_d = Eigen::Vector3d::Zero();
  for (std::size_t i = 0; i < n; ++i) {
    mu_s += src[i];
    mu_d += dst[i];
  }
  mu_s /= static_cast<double>(n);
  mu_d /= static_cast<double>(n);

  Eigen::Matrix3d cov = Eigen::Matrix3d::Zero();
  Eigen::Matrix3d src_scatter = Eigen::Matrix3d::Zero();
  double var_s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::Vector3d a = src[i] - mu_s;
    const Eigen::Vector3d b = dst[i] - mu_d;
    cov += b * a.transpose();
    src_scatter += a * a.transpose();
    var_s += a.squaredNorm();
  }
  cov /= static_cast<double>(n);
  var_s /= static_cast<double>(n);

  // Collinear or coincident sources leave the rotation about the line undetermined.
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(src_scatter);
  const Eigen::Vector3d ev = es.eigenvalues();
  if (!(ev(2) > 0.0) || ev(1) <= 1e-12 * ev(2)) {
    fail(ErrorCode::kDegenerateGeometry, "source points are collinear or coincident");
  }

  Eigen::JacobiSVD<Eigen::Matrix3d> svd(cov, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Eigen::Matrix3d S = Eigen::Matrix3d::Identity();
  if (svd.matrixU().determinant() * svd.matrixV().determinant() < 0.0) S(2, 2) = -1.0;

  Similarity out;
  out.R = svd.matrixU() * S * svd.matrixV().transpose();
  out.scale = with_scale ? (svd.singularValues().asDiagonal() * S).trace() / var_s : 1.0;
  out.t = mu_d - out.scale * out.R * mu_s;
  return out;
}

}  // namespace scopekit
