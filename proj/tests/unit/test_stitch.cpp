#include <gtest/gtest.h>

#include "scenes.hpp"
#include "stats.hpp"
#include "scopekit/error.hpp"
#include "scopekit/stitch.hpp"

using namespace scopekit;

namespace {

ImageBuffer crop(const ImageBuffer& src, int x0, int y0, int w, int h) {
  ImageBuffer out(w, h, src.channels());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < src.channels(); ++c) out.at(x, y, c) = src.at(x0 + x, y0 + y, c);
    }
  }
  return out;
}

}  // namespace

TEST(Stitch, SingleFrameIsReturnedUnchanged) {
  const ImageBuffer f = testkit::textured_image(40, 30, 1);
  const StitchResult r = stitch({f});
  ASSERT_EQ(r.panoramas.size(), 1u);
  EXPECT_EQ(r.panoramas[0].image, f);
  EXPECT_EQ(count_set(r.panoramas[0].coverage), f.data().size());
}

TEST(Stitch, IdenticalFramesReproduceTheFrame) {
  const ImageBuffer f = testkit::textured_image(50, 40, 2, 3);
  const Panorama p = stitch_with_homographies({f, f}, {Homography{}, Homography{}});
  EXPECT_EQ(p.image, f);
}

TEST(Stitch, TranslationWidensCanvas) {
  const ImageBuffer f = testkit::textured_image(60, 40, 3);
  for (double tx : {25.0, -17.0, 12.4}) {
    const Panorama p = stitch_with_homographies({f, f}, {Homography{}, Homography::translation(tx, 0.0)});
    EXPECT_NEAR(p.image.width(), f.width() + std::abs(tx), 1.0);
    EXPECT_EQ(p.image.height(), f.height());
  }
}

TEST(Stitch, MismatchedChannelsAreRejected) {
  const ImageBuffer a(10, 10, 1), b(10, 10, 3);
  EXPECT_THROW(stitch_with_homographies({a, b}, {Homography{}, Homography{}}), Error);
}

TEST(Stitch, OverlappingCropsReassembleSource) {
  const ImageBuffer src = testkit::textured_image(260, 140, 4);
  const std::vector<int> offsets{0, 70, 140};
  std::vector<ImageBuffer> frames;
  for (int x0 : offsets) frames.push_back(crop(src, x0, 0, 120, 140));
  const StitchResult r = stitch(frames);
  ASSERT_EQ(r.panoramas.size(), 1u);
  const Panorama& p = r.panoramas[0];
  EXPECT_EQ(p.frames.size(), 3u);
  EXPECT_NEAR(p.image.width(), 260, 2);

  const Homography to_src = p.frame_to_canvas[0].inverse();
  std::vector<double> a, b;
  for (int y = 0; y < p.image.height(); ++y) {
    for (int x = 0; x < p.image.width(); ++x) {
      if (!p.coverage(x, y)) continue;
      const Eigen::Vector2d s = to_src(Eigen::Vector2d(x, y));
      const int sx = static_cast<int>(std::lround(s.x()));
      const int sy = static_cast<int>(std::lround(s.y()));
      if (!src.contains(sx, sy)) continue;
      a.push_back(p.image.at(x, y));
      b.push_back(src.at(sx, sy));
    }
  }
  ASSERT_GT(a.size(), 20000u);
  EXPECT_GT(testkit::pearson(a, b), 0.98);
}

TEST(Stitch, UnrelatedFramesFormSeparateComponents) {
  const ImageBuffer a = testkit::textured_image(100, 80, 5);
  const ImageBuffer b = testkit::textured_image(100, 80, 6);
  const StitchResult r = stitch({a, b});
  EXPECT_TRUE(r.disconnected());
  ASSERT_EQ(r.panoramas.size(), 2u);
  EXPECT_EQ(r.panoramas[0].frames, std::vector<std::size_t>{0});
  EXPECT_EQ(r.panoramas[1].frames, std::vector<std::size_t>{1});
}
