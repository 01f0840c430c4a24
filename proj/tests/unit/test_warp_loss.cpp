#include <gtest/gtest.h>

#include <random>

#include "render.hpp"
#include "scopekit/error.hpp"
#include "scopekit/warp_loss.hpp"

using namespace scopekit;
using testkit::PlaneTexture;

namespace {

ImageBuffer random_image(int w, int h, int channels, std::uint64_t seed, double lo = 0.1, double hi = 0.9) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(lo, hi);
  ImageBuffer img(w, h, channels);
  for (double& v : img.data()) v = u(rng);
  return img;
}

}  // namespace

TEST(Warp, IdentityPoseIsIdentity) {
  const CameraIntrinsics K = testkit::render_camera(40, 30, 30);
  const ImageBuffer src = random_image(40, 30, 3, 1);
  const WarpResult w = warp_image(src, DepthMap::constant(40, 30, 0.05), Pose::identity(), K);
  EXPECT_EQ(count_set(w.valid), 40u * 30u);
  for (std::size_t i = 0; i < src.data().size(); ++i) EXPECT_NEAR(w.image.data()[i], src.data()[i], 1e-9);
}

TEST(Warp, FrontoParallelTranslationIsUniformShift) {
  const CameraIntrinsics K = testkit::render_camera(60, 40, 50);
  const double Z = 0.05, tx = 0.002;  // shift = fx tx / Z = 2 px
  ImageBuffer src(60, 40, 1);
  for (int y = 0; y < 40; ++y) {
    for (int x = 0; x < 60; ++x) src.at(x, y) = 0.01 * x + 0.003 * y;
  }
  const WarpResult w = warp_image(src, DepthMap::constant(60, 40, Z), Pose(Eigen::Matrix3d::Identity(), {tx, 0, 0}), K);
  for (int y = 0; y < 40; ++y) {
    for (int x = 0; x < 60; ++x) {
      const bool inside = x + 2 <= 59;
      ASSERT_EQ(w.valid(x, y) != 0, inside) << x << "," << y;
      if (inside) EXPECT_NEAR(w.image.at(x, y), src.at(x + 2, y), 1e-12);
    }
  }
}

TEST(Brightness, ExactAffinePair) {
  const ImageBuffer s = random_image(16, 12, 3, 2);
  ImageBuffer t = s;
  for (double& v : t.data()) v = 0.5 * v + 0.1;
  const Mask m(16, 12, 1);
  const BrightnessParams bp = estimate_brightness(s, t, m);
  EXPECT_NEAR(bp.a, 0.5, 1e-9);
  EXPECT_NEAR(bp.c, 0.1, 1e-9);
  EXPECT_NEAR(photometric_terms(s, t, m, bp, 1.0, 0.0).l2, 0.0, 1e-9);
  const BrightnessParams id = estimate_brightness(s, s, m);
  EXPECT_NEAR(id.a, 1.0, 1e-12);
  EXPECT_NEAR(id.c, 0.0, 1e-12);
}

TEST(Brightness, NormalEquationsOracle) {
  const ImageBuffer s = random_image(20, 10, 1, 3);
  ImageBuffer t = random_image(20, 10, 1, 4, -0.05, 0.05);
  for (std::size_t i = 0; i < t.data().size(); ++i) t.data()[i] += 0.8 * s.data()[i] + 0.05;
  Mask m(20, 10, 1);
  m(3, 3) = 0;
  Eigen::Matrix2d A = Eigen::Matrix2d::Zero();
  Eigen::Vector2d b = Eigen::Vector2d::Zero();
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 20; ++x) {
      if (!m(x, y)) continue;
      const Eigen::Vector2d r(s.at(x, y), 1.0);
      A += r * r.transpose();
      b += r * t.at(x, y);
    }
  }
  const Eigen::Vector2d sol = A.ldlt().solve(b);
  const BrightnessParams bp = estimate_brightness(s, t, m);
  EXPECT_NEAR(bp.a, sol[0], 1e-9);
  EXPECT_NEAR(bp.c, sol[1], 1e-9);
}

TEST(Brightness, ConstantSynthFallsBackToOffset) {
  const ImageBuffer s(8, 8, 1, 0.3);
  const ImageBuffer t = random_image(8, 8, 1, 5);
  double mean = 0;
  for (double v : t.data()) mean += v / 64;
  const BrightnessParams bp = estimate_brightness(s, t, Mask(8, 8, 1));
  EXPECT_TRUE(bp.degenerate);
  EXPECT_EQ(bp.a, 1.0);
  EXPECT_NEAR(bp.c, mean - 0.3, 1e-12);
}

TEST(Photometric, IdentityAndGainAbsorption) {
  const ImageBuffer s = random_image(12, 12, 3, 6, 0.1, 0.45);
  const Mask m(12, 12, 1);
  EXPECT_NEAR(photometric_loss(s, s, m, {}, 0.15, 0.85), 0.0, 1e-9);
  ImageBuffer t = s;
  for (double& v : t.data()) v *= 2.0;
  EXPECT_NEAR(photometric_loss(s, t, m, {2.0, 0.0}, 0.15, 0.85), 0.0, 1e-9);
  EXPECT_THROW(photometric_loss(s, t, Mask(12, 12, 0), {}, 0.15, 0.85), Error);
}

TEST(Photometric, PerPixelOracle) {
  const ImageBuffer s = random_image(8, 8, 3, 7);
  const ImageBuffer t = random_image(8, 8, 3, 8);
  Mask m(8, 8, 1);
  for (int x = 0; x < 8; ++x) m(x, 0) = 0;
  const BrightnessParams bp{1.1, -0.05};
  double l2 = 0.0;
  for (int y = 1; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      double sq = 0.0;
      for (int c = 0; c < 3; ++c) {
        const double r = std::clamp(1.1 * s.at(x, y, c) - 0.05, 0.0, 1.0) - t.at(x, y, c);
        sq += r * r;
      }
      l2 += std::sqrt(sq);
    }
  }
  l2 /= 56.0;
  const PhotometricTerms terms = photometric_terms(s, t, m, bp, 0.15, 0.0);
  EXPECT_NEAR(terms.l2, 0.15 * l2, 1e-9);
  EXPECT_EQ(terms.ssim, 0.0);
}

TEST(Photometric, LeastSquaresNeverWorseOnL2Residual) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const ImageBuffer s = random_image(10, 10, 1, 100 + seed, 0.2, 0.6);
    ImageBuffer t = random_image(10, 10, 1, 200 + seed, -0.05, 0.05);
    for (std::size_t i = 0; i < t.data().size(); ++i) t.data()[i] += 1.2 * s.data()[i];
    const Mask m(10, 10, 1);
    const BrightnessParams bp = estimate_brightness(s, t, m);
    auto sse = [&](const BrightnessParams& p) {
      double e = 0;
      for (std::size_t i = 0; i < s.data().size(); ++i) {
        const double r = p.a * s.data()[i] + p.c - t.data()[i];
        e += r * r;
      }
      return e;
    };
    EXPECT_LE(sse(bp), sse({}) + 1e-15);
  }
}

TEST(Smoothness, ClosedFormCases) {
  const ImageBuffer img = random_image(6, 5, 1, 9);
  EXPECT_EQ(smoothness_loss(img, DepthMap::constant(6, 5, 0.2)), 0.0);
  DepthMap ramp(6, 5);
  double mean = 0;
  for (int y = 0; y < 5; ++y) {
    for (int x = 0; x < 6; ++x) {
      ramp.depth(x, y) = 1.0 + 0.1 * x;
      ramp.valid(x, y) = 1;
      mean += ramp.depth(x, y) / 30;
    }
  }
  // Constant image: unit edge weights, 5 x-differences per row.
  const double g = 0.1 / mean;
  EXPECT_NEAR(smoothness_loss(ImageBuffer(6, 5, 1, 0.5), ramp), 5 * 5 * g * g, 1e-12);
}

TEST(Smoothness, PerPixelOracle) {
  const ImageBuffer img = random_image(8, 8, 1, 10);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.5, 2.0);
  DepthMap d(8, 8);
  double mean = 0;
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      d.depth(x, y) = u(rng);
      d.valid(x, y) = 1;
      mean += d.depth(x, y) / 64;
    }
  }
  double sum = 0;
  for (int y = 0; y < 8; ++y) {
    for (int x = 0; x < 8; ++x) {
      if (x < 7) {
        const double t = std::exp(-std::abs(img.at(x + 1, y) - img.at(x, y))) * (d.depth(x + 1, y) - d.depth(x, y)) / mean;
        sum += t * t;
      }
      if (y < 7) {
        const double t = std::exp(-std::abs(img.at(x, y + 1) - img.at(x, y))) * (d.depth(x, y + 1) - d.depth(x, y)) / mean;
        sum += t * t;
      }
    }
  }
  EXPECT_NEAR(smoothness_loss(img, d), sum, 1e-12);
}

TEST(DepthDifference, ArithmeticAndRange) {
  EXPECT_DOUBLE_EQ(depth_difference(3, 1), 0.5);
  EXPECT_DOUBLE_EQ(depth_difference(2, 2), 0.0);
  std::mt19937_64 rng(12);
  std::uniform_real_distribution<double> u(1e-6, 1e3);
  for (int i = 0; i < 10000; ++i) {
    const double v = depth_difference(u(rng), u(rng));
    EXPECT_GE(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(Geometry, ConsistentDepthsGiveZero) {
  const CameraIntrinsics K = testkit::render_camera(48, 36, 40);
  const Pose motion(Eigen::Matrix3d::Identity(), {0.0, 0.0, -0.01});
  const DepthMap ref = DepthMap::constant(48, 36, 0.06);
  const DepthMap src = DepthMap::constant(48, 36, 0.05);
  const DepthConsistency dc = depth_consistency(ref, src, motion, K);
  ASSERT_GT(count_set(dc.valid), 0u);
  for (std::size_t i = 0; i < dc.valid.size(); ++i) {
    if (dc.valid[i]) EXPECT_NEAR(dc.diff[i], 0.0, 1e-12);
  }
  EXPECT_NEAR(geometry_consistency_loss(dc.diff, dc.valid), 0.0, 1e-12);
}

TEST(Geometry, MeanOverMask) {
  ScalarField diff(4, 2);
  for (int x = 0; x < 4; ++x) diff(x, 1) = 0.5;
  EXPECT_DOUBLE_EQ(geometry_consistency_loss(diff, Mask(4, 2, 1)), 0.25);
  EXPECT_THROW(geometry_consistency_loss(diff, Mask(4, 2, 0)), Error);
}

TEST(TotalLoss, ConsistentPairVanishes) {
  const CameraIntrinsics K = testkit::render_camera(64, 48, 40);
  const PlaneTexture tex(13);
  const Pose motion(Eigen::Matrix3d::Identity(), {0.0025, 0, 0});  // 2 px shift
  const ImageBuffer ref = testkit::render_plane(tex, K, 0.05);
  const ImageBuffer src = testkit::render_plane(tex, K, 0.05, motion);
  const DepthMap dref = testkit::render_plane_depth(K, 0.05);
  LossInputs in{&ref, &src, &dref, nullptr, motion, K};
  LossWeights w;
  w.beta = 0.0;
  const LossReport r = total_loss(in, w);
  EXPECT_LT(r.total, 1e-6);
  w.alpha = w.beta = w.gamma = 0.0;
  in.pose_ref_to_src = Pose::identity();
  EXPECT_EQ(total_loss(in, w).total, 0.0);
}

TEST(TotalLoss, WeightedSumOfTerms) {
  const CameraIntrinsics K = testkit::render_camera(32, 24, 25);
  const ImageBuffer ref = random_image(32, 24, 3, 14);
  const ImageBuffer src = random_image(32, 24, 3, 15);
  DepthMap dref = DepthMap::constant(32, 24, 0.05);
  dref.depth(4, 4) = 0.07;
  const DepthMap dsrc = DepthMap::constant(32, 24, 0.055);
  const Pose motion(Eigen::Matrix3d::Identity(), {0.0005, 0, 0});
  const LossInputs in{&ref, &src, &dref, &dsrc, motion, K};
  const LossWeights w{0.7, 0.2, 0.4, 0.3, 0.6};
  const LossReport r = total_loss(in, w);
  EXPECT_GT(r.geometry, 0.0);
  EXPECT_GT(r.smoothness, 0.0);
  EXPECT_NEAR(r.total, 0.7 * r.photometric + 0.2 * r.smoothness + 0.4 * r.geometry, 1e-12);
  EXPECT_NEAR(r.smoothness, smoothness_loss(ref, dref), 1e-15);
  LossWeights more = w;
  more.gamma = 0.8;
  EXPECT_GE(total_loss(in, more).total, r.total);
}

TEST(TotalLoss, UnitConsistencyWeightReducesToPlainLoss) {
  const CameraIntrinsics K = testkit::render_camera(32, 24, 25);
  const ImageBuffer ref = random_image(32, 24, 1, 16);
  const ImageBuffer src = random_image(32, 24, 1, 17);
  const DepthMap d = DepthMap::constant(32, 24, 0.05);
  const LossInputs with_src{&ref, &src, &d, &d, Pose::identity(), K};
  const LossInputs without{&ref, &src, &d, nullptr, Pose::identity(), K};
  const LossWeights w;
  EXPECT_NEAR(total_loss(with_src, w).photometric, total_loss(without, w).photometric, 1e-12);
}

TEST(LossWeights, RejectsNegative) {
  LossWeights w;
  w.beta = -1;
  EXPECT_THROW(w.validate(), Error);
}
