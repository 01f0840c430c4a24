#include <gtest/gtest.h>

#include <random>

#include "scenes.hpp"
#include "scopekit/error.hpp"
#include "scopekit/imaging.hpp"

using namespace scopekit;

TEST(Imaging, LumaWeights) {
  ImageBuffer rgb(1, 1, 3);
  rgb.at(0, 0, 0) = 1.0;
  EXPECT_DOUBLE_EQ(to_gray(rgb).at(0, 0), 0.299);
  rgb.at(0, 0, 1) = 1.0;
  rgb.at(0, 0, 2) = 1.0;
  EXPECT_NEAR(to_gray(rgb).at(0, 0), 1.0, 1e-15);
}

TEST(Imaging, BilinearSampling) {
  ImageBuffer img(2, 2, 1);
  img.at(1, 0) = 1.0;
  img.at(0, 1) = 2.0;
  img.at(1, 1) = 3.0;
  EXPECT_DOUBLE_EQ(*bilinear_sample(img, 0.5, 0.5), 1.5);
  EXPECT_DOUBLE_EQ(*bilinear_sample(img, 1.0, 1.0), 3.0);
  EXPECT_FALSE(bilinear_sample(img, 1.5, 0.0).has_value());
  EXPECT_FALSE(bilinear_sample(img, -0.1, 0.0).has_value());
}

TEST(Imaging, ForwardGradients) {
  ScalarField f(3, 2);
  for (int y = 0; y < 2; ++y) {
    for (int x = 0; x < 3; ++x) f(x, y) = x * x + 10 * y;
  }
  const GradientField g = gradients(f);
  EXPECT_EQ(g.gx(0, 0), 1.0);
  EXPECT_EQ(g.gx(1, 0), 3.0);
  EXPECT_EQ(g.gx(2, 0), 0.0);
  EXPECT_EQ(g.gy(1, 0), 10.0);
  EXPECT_EQ(g.gy(1, 1), 0.0);
}

TEST(Ssim, IdentityAndBounds) {
  const ImageBuffer a = testkit::textured_image(32, 24, 1);
  EXPECT_NEAR(ssim(a, a), 1.0, 1e-12);
  ImageBuffer b = a;
  for (double& v : b.data()) v = 1.0 - v;
  const double s = ssim(a, b);
  EXPECT_LT(s, 1.0);
  EXPECT_GE(s, -1.0);
  const ScalarField m = ssim_map(a, a);
  for (double v : m.data()) EXPECT_NEAR(v, 1.0, 1e-12);
}

TEST(Ssim, MatchesHandComputedWindow) {
  ImageBuffer a(3, 3, 1), b(3, 3, 1);
  std::mt19937 rng(2);
  std::uniform_real_distribution<double> u(0, 1);
  for (double& v : a.data()) v = u(rng);
  for (double& v : b.data()) v = u(rng);
  double ma = 0, mb = 0;
  for (int i = 0; i < 9; ++i) {
    ma += a.data()[i] / 9;
    mb += b.data()[i] / 9;
  }
  double va = 0, vb = 0, cov = 0;
  for (int i = 0; i < 9; ++i) {
    va += (a.data()[i] - ma) * (a.data()[i] - ma) / 9;
    vb += (b.data()[i] - mb) * (b.data()[i] - mb) / 9;
    cov += (a.data()[i] - ma) * (b.data()[i] - mb) / 9;
  }
  const double expected =
      ((2 * ma * mb + kSsimC1) * (2 * cov + kSsimC2)) / ((ma * ma + mb * mb + kSsimC1) * (va + vb + kSsimC2));
  EXPECT_NEAR(ssim(a, b), expected, 1e-12);
}

TEST(Ssim, RejectsBadInput) {
  const ImageBuffer a(8, 8, 1), b(8, 9, 1);
  try {
    ssim(a, b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
  try {
    ssim(a, a, 4);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kBadKernel);
  }
}

TEST(Otsu, SeparatesTwoLevels) {
  ImageBuffer img(10, 10, 1, 0.2);
  for (int x = 0; x < 10; ++x) img.at(x, 0) = 0.9;
  const OtsuResult r = otsu_threshold(img);
  EXPECT_FALSE(r.degenerate);
  EXPECT_GT(r.threshold, 0.2);
  EXPECT_LT(r.threshold, 0.9);
  EXPECT_EQ(r.bin, intensity_bin(0.2));
}

TEST(Otsu, ConstantImageIsDegenerate) {
  const OtsuResult r = otsu_threshold(ImageBuffer(4, 4, 1, 0.37));
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.threshold, 0.37);
}

TEST(Inpaint, ReproducesHarmonicFunctions) {
  // A linear ramp is harmonic, so filling any hole must reproduce it.
  ImageBuffer img(30, 20, 1);
  for (int y = 0; y < 20; ++y) {
    for (int x = 0; x < 30; ++x) img.at(x, y) = 0.01 * x + 0.02 * y;
  }
  Mask m(30, 20, 0);
  for (int y = 5; y < 15; ++y) {
    for (int x = 8; x < 20; ++x) m(x, y) = 1;
  }
  ImageBuffer holed = img;
  for (int y = 5; y < 15; ++y) {
    for (int x = 8; x < 20; ++x) holed.at(x, y) = 1.0;
  }
  const ImageBuffer out = inpaint_diffusion(holed, m);
  for (std::size_t i = 0; i < img.data().size(); ++i) EXPECT_NEAR(out.data()[i], img.data()[i], 1e-9);
}

TEST(Inpaint, EmptyAndFullMasks) {
  const ImageBuffer img = testkit::textured_image(8, 8, 3);
  EXPECT_EQ(inpaint_diffusion(img, Mask(8, 8, 0)), img);
  try {
    inpaint_diffusion(img, Mask(8, 8, 1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kMaskCoversEverything);
  }
}

TEST(Blur, KernelAndConstantPreservation) {
  const auto k = gaussian_kernel(7, 1.5);
  double s = 0;
  for (double v : k) s += v;
  EXPECT_NEAR(s, 1.0, 1e-15);
  EXPECT_DOUBLE_EQ(k[0], k[6]);
  const ImageBuffer c(9, 9, 3, 0.4);
  const ImageBuffer b = gaussian_blur(c, 5, 2.0);
  for (double v : b.data()) EXPECT_NEAR(v, 0.4, 1e-15);
}

TEST(Dilate, DiscShape) {
  Mask m(9, 9, 0);
  m(4, 4) = 1;
  const Mask d = dilate(m, 2);
  EXPECT_EQ(count_set(d), 13u);
  EXPECT_TRUE(d(6, 4));
  EXPECT_FALSE(d(6, 6));
}
