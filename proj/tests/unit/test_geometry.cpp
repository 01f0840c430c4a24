#include <gtest/gtest.h>

#include <random>

#include "scopekit/calibration_io.hpp"
#include "scopekit/error.hpp"
#include "scopekit/geometry.hpp"

using namespace scopekit;

namespace {

Pose random_pose(std::mt19937_64& rng) {
  std::normal_distribution<double> g;
  return Pose::from_axis_angle(Eigen::Vector3d(g(rng), g(rng), g(rng)).normalized(), g(rng),
                               Eigen::Vector3d(g(rng), g(rng), g(rng)));
}

}  // namespace

TEST(Pose, QuaternionOrderIsXyzw) {
  const Pose p = Pose::from_xyzw(0.0, 0.0, std::sin(0.25), std::cos(0.25), Eigen::Vector3d(1, 2, 3));
  EXPECT_NEAR(p.xyzw()[2], std::sin(0.25), 1e-15);
  EXPECT_NEAR(p.xyzw()[3], std::cos(0.25), 1e-15);
  EXPECT_NEAR(rotation_angle(p), 0.5, 1e-12);
}

TEST(Pose, ComposeAndInverseAgreeWithMatrices) {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 50; ++i) {
    const Pose a = random_pose(rng);
    const Pose b = random_pose(rng);
    EXPECT_LT((compose(a, b).matrix() - a.matrix() * b.matrix()).norm(), 1e-12);
    EXPECT_LT((inverse(a).matrix() - a.matrix().inverse()).norm(), 1e-10);
  }
}

TEST(Pose, PerturbIsLeftMultiplication) {
  const Pose p = Pose::from_axis_angle(Eigen::Vector3d::UnitY(), 0.3, Eigen::Vector3d(1, 0, 0));
  Vector6d xi;
  xi << 0, 0, 0.2, 0.1, -0.2, 0.3;
  const Pose q = perturb(p, xi);
  const Pose step = Pose::from_axis_angle(Eigen::Vector3d::UnitZ(), 0.2, Eigen::Vector3d(0.1, -0.2, 0.3));
  EXPECT_LT((q.matrix() - step.matrix() * p.matrix()).norm(), 1e-12);
}

TEST(Camera, ProjectUnprojectRoundTrip) {
  for (const std::string& name : camera_preset_names()) {
    const CameraIntrinsics K = camera_preset(name);
    for (int y = 0; y < K.height; y += 23) {
      for (int x = 0; x < K.width; x += 23) {
        const Eigen::Vector2d px(x, y);
        if (!in_calibrated_fov(K, px)) continue;
        const Eigen::Vector3d X = unproject(K, px, 0.05);
        EXPECT_NEAR(X.z(), 0.05, 1e-15);
        EXPECT_LT((project(K, X) - px).norm(), 1e-6) << name;
      }
    }
  }
}

TEST(Camera, DistortionMatchesPolynomial) {
  const CameraIntrinsics K = camera_preset("MiroCam");
  const Eigen::Vector2d n(0.3, -0.4);
  const double r = n.norm();
  const Eigen::Vector2d d = distort(K, n);
  EXPECT_NEAR(d.norm(), r * (1 + K.k1 * r * r + K.k2 * r * r * r * r), 1e-15);
  EXPECT_LT((undistort(K, d) - n).norm(), 1e-9);
}

TEST(Camera, FisheyeIsEquidistant) {
  CameraIntrinsics K;
  K.model = CameraModel::kFisheye;
  K.fx = K.fy = 100;
  K.cx = K.cy = 50;
  K.width = K.height = 101;
  const double theta = 0.6;
  const Eigen::Vector2d px = project(K, Eigen::Vector3d(std::sin(theta), 0, std::cos(theta)));
  EXPECT_NEAR(px.x() - K.cx, 100 * theta, 1e-9);
}

TEST(Camera, NonPositiveDepthIsRejected) {
  const CameraIntrinsics K = camera_preset("HighCam");
  try {
    project(K, Eigen::Vector3d(0, 0, -1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonPositiveDepth);
  }
}

TEST(Camera, ScaledIntrinsicsFollowPixelCentres) {
  const CameraIntrinsics K = camera_preset("HighCam");
  const CameraIntrinsics H = K.scaled(0.5);
  const Eigen::Vector3d X(0.01, -0.02, 0.07);
  const Eigen::Vector2d full = project(K, X);
  const Eigen::Vector2d half = project(H, X);
  EXPECT_LT(((full + Eigen::Vector2d(0.5, 0.5)) * 0.5 - Eigen::Vector2d(0.5, 0.5) - half).norm(), 1e-6);
}

TEST(Calibration, KeyValueRoundTrip) {
  const CameraIntrinsics K = camera_preset("LowCam");
  const CameraIntrinsics back = parse_intrinsics(format_intrinsics(K));
  EXPECT_EQ(back.fx, K.fx);
  EXPECT_EQ(back.k2, K.k2);
  EXPECT_EQ(back.width, K.width);
  const CameraIntrinsics over = parse_intrinsics("preset = MiroCam\nfx = 200\n");
  EXPECT_EQ(over.fx, 200.0);
  EXPECT_EQ(over.cx, camera_preset("MiroCam").cx);
  EXPECT_THROW(parse_intrinsics("fx = abc\n"), Error);
}

TEST(HandEye, TabulatedOriginsMapToTranslations) {
  const std::vector<std::pair<std::string, Eigen::Vector3d>> table{
      {"MiroCam", {2.9793, -27.0224, 72.1070}},
      {"HighCam", {-46.2017, 20.9074, 94.6349}},
      {"LowCam", {6.0169, 39.5114, 101.6431}},
  };
  for (const auto& [name, t] : table) {
    const Eigen::Vector3d o = apply_hand_eye(hand_eye_preset(name), Eigen::Vector3d::Zero());
    for (int k = 0; k < 3; ++k) EXPECT_NEAR(o[k], t[k], 5e-5) << name;
  }
}

TEST(HandEye, PresetsAreRotations) {
  for (const std::string name : {"MiroCam", "HighCam", "LowCam"}) {
    const Eigen::Matrix3d R = hand_eye_preset(name).rotation();
    EXPECT_LT((R * R.transpose() - Eigen::Matrix3d::Identity()).norm(), 1e-12) << name;
    EXPECT_NEAR(R.determinant(), 1.0, 1e-12) << name;
  }
}

TEST(HandEye, PreservesDistances) {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-50, 50);
  const HandEye h = hand_eye_preset("HighCam");
  for (int i = 0; i < 100; ++i) {
    const Eigen::Vector3d a(u(rng), u(rng), u(rng)), b(u(rng), u(rng), u(rng));
    EXPECT_NEAR((apply_hand_eye(h, a) - apply_hand_eye(h, b)).norm(), (a - b).norm(), 1e-9);
  }
}

TEST(HandEye, FarFromRotationIsRejected) {
  EXPECT_THROW(HandEye(Eigen::Matrix3d::Identity() * 1.1, Eigen::Vector3d::Zero()), Error);
  EXPECT_NO_THROW(parse_hand_eye("preset = LowCam\n"));
}

TEST(Similarity, RecoversScaledMotion) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  std::vector<Eigen::Vector3d> src, dst;
  const Pose T = Pose::from_axis_angle(Eigen::Vector3d(1, 2, 3).normalized(), 0.7, Eigen::Vector3d(0.3, -1, 2));
  for (int i = 0; i < 20; ++i) {
    src.emplace_back(u(rng), u(rng), u(rng));
    dst.push_back(2.5 * (T.rotation_matrix() * src.back()) + T.translation());
  }
  const Similarity s = fit_similarity(src, dst, true);
  EXPECT_NEAR(s.scale, 2.5, 1e-12);
  EXPECT_LT((s.R - T.rotation_matrix()).norm(), 1e-12);
  const std::vector<Eigen::Vector3d> line{{0, 0, 0}, {1, 1, 1}, {2, 2, 2}};
  EXPECT_THROW(fit_similarity(line, line, false), Error);
}
