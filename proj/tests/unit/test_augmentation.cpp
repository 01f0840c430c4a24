#include <gtest/gtest.h>

#include <random>

#include "scenes.hpp"
#include "scopekit/augmentation.hpp"
#include "scopekit/error.hpp"

using namespace scopekit;

namespace {

double variance(const ImageBuffer& img, int x0, int x1) {
  double s = 0, s2 = 0;
  int n = 0;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = x0; x < x1; ++x) {
      s += img.at(x, y);
      s2 += img.at(x, y) * img.at(x, y);
      ++n;
    }
  }
  return s2 / n - (s / n) * (s / n);
}

}  // namespace

TEST(Resize, OutputSizeAndIdentity) {
  const ImageBuffer img = testkit::textured_image(64, 48, 1, 3);
  const ImageBuffer small = resize(img, 100, 100);
  EXPECT_EQ(small.width(), 100);
  EXPECT_EQ(small.height(), 100);
  EXPECT_EQ(small.channels(), 3);
  const ImageBuffer same = resize(img, 64, 48);
  for (std::size_t i = 0; i < img.data().size(); ++i) EXPECT_NEAR(same.data()[i], img.data()[i], 1e-9);
  EXPECT_THROW(resize(img, 0, 10), Error);
}

TEST(Resize, HalvingMatchesAreaAverage) {
  ImageBuffer board(16, 12, 1);
  for (int y = 0; y < 12; ++y) {
    for (int x = 0; x < 16; ++x) board.at(x, y) = ((x / 3 + y / 3) % 2) ? 0.9 : 0.1;
  }
  const ImageBuffer half = resize(board, 8, 6);
  for (int y = 0; y < 6; ++y) {
    for (int x = 0; x < 8; ++x) {
      const double area = (board.at(2 * x, 2 * y) + board.at(2 * x + 1, 2 * y) + board.at(2 * x, 2 * y + 1) +
                           board.at(2 * x + 1, 2 * y + 1)) /
                          4.0;
      EXPECT_NEAR(half.at(x, y), area, 1e-6);
    }
  }
}

TEST(Blur, RepeatedMatchesSequentialConvolution) {
  const int n = 41, c = 20;
  ImageBuffer impulse(n, n, 1);
  impulse.at(c, c) = 1.0;
  std::vector<double> k(5);
  double ks = 0;
  for (int i = 0; i < 5; ++i) ks += k[i] = std::exp(-(i - 2) * (i - 2) / (2.0 * 25.0));
  for (double& v : k) v /= ks;
  std::vector<double> cur(n * n, 0.0);
  cur[c * n + c] = 1.0;
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<double> next(n * n, 0.0);
    for (int y = 2; y < n - 2; ++y) {
      for (int x = 2; x < n - 2; ++x) {
        for (int j = -2; j <= 2; ++j) {
          for (int i = -2; i <= 2; ++i) next[y * n + x] += k[i + 2] * k[j + 2] * cur[(y + j) * n + x + i];
        }
      }
    }
    cur = next;
  }
  const ImageBuffer out = gaussian_blur_repeated(impulse, 5, 5.0, 5);
  for (int i = 0; i < n * n; ++i) EXPECT_NEAR(out.data()[i], cur[i], 1e-9);
  const ImageBuffer flat(9, 9, 3, 0.3);
  const ImageBuffer fb = gaussian_blur_repeated(flat, 7, 2.0, 3);
  for (double v : fb.data()) EXPECT_NEAR(v, 0.3, 1e-12);
  EXPECT_EQ(gaussian_blur_repeated(impulse, 5, 5.0, 1), gaussian_blur(impulse, 5, 5.0));
  EXPECT_THROW(gaussian_blur_repeated(impulse, 4, 1.0, 1), Error);
}

TEST(Vignette, ClosedFormMask) {
  const ImageBuffer img(31, 21, 1, 0.8);
  EXPECT_EQ(vignette(img, 0.0), img);
  const ImageBuffer v = vignette(img, 0.6);
  EXPECT_NEAR(v.at(15, 10), 0.8, 1e-15);
  // Corners sit at r = r_max, so cos^4(atan 1) = 1/4.
  EXPECT_NEAR(v.at(0, 0), 0.8 * (1 - 0.6 + 0.6 * 0.25), 1e-9);
  EXPECT_NEAR(v.at(30, 20), 0.8 * (1 - 0.6 + 0.6 * 0.25), 1e-9);
  EXPECT_THROW(vignette(img, 1.5), Error);
}

TEST(Fisheye, CentreAndRetainedDisc) {
  const ImageBuffer img(101, 81, 1, 0.5);
  const ImageBuffer full = fisheye(img, 1.0);
  EXPECT_NEAR(full.at(50, 40), 0.5, 1e-12);
  EXPECT_GT(full.at(50, 1), 0.0);
  const ImageBuffer cut = fisheye(img, 0.7);
  const double R = 0.7 * 81 / 2.0;
  int edge = 0;
  for (int x = 50; x < 101 && cut.at(x, 40) > 0.0; ++x) edge = x;
  EXPECT_NEAR(edge - 50, R, 1.0);
  ImageBuffer ramp(41, 41, 1);
  for (int y = 0; y < 41; ++y) {
    for (int x = 0; x < 41; ++x) ramp.at(x, y) = 0.01 * x + 0.005 * y;
  }
  EXPECT_NEAR(fisheye(ramp, 0.8).at(20, 20), ramp.at(20, 20), 1e-12);
  EXPECT_THROW(fisheye(img, 0.0), Error);
  EXPECT_THROW(fisheye(img, 1.2), Error);
}

TEST(DepthOfField, UniformFocusedDepthIsSharp) {
  const ImageBuffer img = testkit::textured_image(32, 24, 7);
  const ImageBuffer out = depth_of_field(img, DepthMap::constant(32, 24, 0.04), 0.0);
  for (std::size_t i = 0; i < img.data().size(); ++i) EXPECT_NEAR(out.data()[i], img.data()[i], 1e-6);
}

TEST(DepthOfField, TwoPlaneScene) {
  ImageBuffer img(64, 32, 1);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.1, 0.9);
  for (double& v : img.data()) v = u(rng);
  DepthMap d(64, 32);
  for (int y = 0; y < 32; ++y) {
    for (int x = 0; x < 64; ++x) {
      d.depth(x, y) = x < 32 ? 0.02 : 0.10;
      d.valid(x, y) = 1;
    }
  }
  const ImageBuffer near_focus = depth_of_field(img, d, 0.0821);
  EXPECT_GT(variance(near_focus, 4, 28), variance(near_focus, 36, 60));
  const ImageBuffer far_focus = depth_of_field(img, d, 1.0);
  const ImageBuffer zero_focus = depth_of_field(img, d, 0.0);
  EXPECT_LT(variance(far_focus, 4, 28), variance(far_focus, 36, 60));
  EXPECT_NEAR(variance(zero_focus, 4, 28), variance(img, 4, 28), 1e-12);
  EXPECT_NEAR(variance(far_focus, 36, 60), variance(img, 36, 60), 1e-12);
  EXPECT_THROW(depth_of_field(img, DepthMap::constant(8, 8, 1.0), 0.5), Error);
}

TEST(Subsample, Indices) {
  EXPECT_EQ(subsample_indices(5, 1), (std::vector<std::size_t>{0, 1, 2, 3, 4}));
  EXPECT_EQ(subsample_indices(21, 5).size(), 5u);
  EXPECT_EQ(subsample_indices(7, 7), (std::vector<std::size_t>{0}));
  const std::vector<int> frames{10, 11, 12, 13, 14, 15};
  EXPECT_EQ(framerate_subsample(frames, 4), (std::vector<int>{10, 14}));
}

TEST(AugmentSpec, ParseAndApply) {
  const AugmentSpec spec = parse_augment_spec(
      "# pipeline\nresize width=40 height=30\nblur kernel=5 sigma=5 repeat=5\nvignette strength=0.3\n"
      "fisheye nu=0.7\nsubsample factor=2\nsubsample factor=3\n");
  ASSERT_EQ(spec.steps.size(), 6u);
  EXPECT_EQ(spec.subsample_factor(), 6);
  EXPECT_FALSE(spec.needs_depth());
  const ImageBuffer img = testkit::textured_image(64, 48, 9);
  const ImageBuffer a = apply_augment_spec(img, spec);
  const ImageBuffer b = apply_augment_spec(img, spec);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a.width(), 40);
  EXPECT_TRUE(a.in_unit_range());
  EXPECT_TRUE(parse_augment_spec("dof focus=0.5\n").needs_depth());
  EXPECT_THROW(parse_augment_spec("warp amount=2\n"), Error);
  EXPECT_THROW(parse_augment_spec("fisheye nu=1.5\n"), Error);
  EXPECT_THROW(apply_augment_spec(img, parse_augment_spec("dof focus=0.5\n")), Error);
}

TEST(AugmentSpec, IdentityParametersAreNoOps) {
  const ImageBuffer img = testkit::textured_image(48, 36, 10);
  const AugmentSpec spec = parse_augment_spec("resize width=48 height=36\nvignette strength=0\nsubsample factor=1\n");
  const ImageBuffer out = apply_augment_spec(img, spec);
  for (std::size_t i = 0; i < img.data().size(); ++i) EXPECT_NEAR(out.data()[i], img.data()[i], 1e-9);
}
