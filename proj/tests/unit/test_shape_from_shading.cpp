#include <gtest/gtest.h>

#include "scenes.hpp"
#include "stats.hpp"
#include "scopekit/error.hpp"
#include "scopekit/shape_from_shading.hpp"

using namespace scopekit;

namespace {

std::vector<double> interior(const testkit::Hemisphere& h, const DepthMap& d) {
  std::vector<double> v;
  for (int y = 0; y < h.size; ++y) {
    for (int x = 0; x < h.size; ++x) {
      if (h.interior(x, y)) v.push_back(d.depth(x, y));
    }
  }
  return v;
}

}  // namespace

TEST(ShapeFromShading, UniformImageIsFlat) {
  const DepthMap d = tsai_shah_sfs(ImageBuffer(20, 15, 1, 0.6));
  for (std::size_t i = 0; i < d.depth.size(); ++i) {
    EXPECT_EQ(d.depth[i], 1.0);
    EXPECT_TRUE(d.valid[i]);
  }
}

TEST(ShapeFromShading, HemisphereDepthOrdering) {
  const testkit::Hemisphere h;
  const DepthMap d = tsai_shah_sfs(h.render());
  std::vector<double> truth;
  for (int y = 0; y < h.size; ++y) {
    for (int x = 0; x < h.size; ++x) {
      if (h.interior(x, y)) truth.push_back(h.depth(x, y));
    }
  }
  EXPECT_GE(testkit::spearman(interior(h, d), truth), 0.9);
}

TEST(ShapeFromShading, ContrastScalingKeepsOrdering) {
  const testkit::Hemisphere h;
  const DepthMap a = tsai_shah_sfs(h.render(0.5));
  const DepthMap b = tsai_shah_sfs(h.render(1.0));
  const auto va = interior(h, a);
  const auto vb = interior(h, b);
  EXPECT_EQ(testkit::spearman(va, vb), 1.0);
  EXPECT_EQ(std::min_element(va.begin(), va.end()) - va.begin(), std::min_element(vb.begin(), vb.end()) - vb.begin());
  EXPECT_EQ(std::max_element(va.begin(), va.end()) - va.begin(), std::max_element(vb.begin(), vb.end()) - vb.begin());
}

TEST(ShapeFromShading, SlightlyObliqueLightStillRecoversDome) {
  const testkit::Hemisphere h;
  const Eigen::Vector3d l = Eigen::Vector3d(0.05, 0.025, 1.0).normalized();
  ImageBuffer img(h.size, h.size, 1);
  for (int y = 0; y < h.size; ++y) {
    for (int x = 0; x < h.size; ++x) {
      const double rr = h.r(x, y);
      if (rr >= h.radius) continue;
      const Eigen::Vector3d n((x - h.cx()) / h.radius, (y - h.cx()) / h.radius, h.height(x, y) / h.radius);
      img.at(x, y) = std::max(0.0, n.dot(l));
    }
  }
  SfsOptions opts;
  opts.light = l;
  const DepthMap d = tsai_shah_sfs(img, opts);
  std::vector<double> truth;
  for (int y = 0; y < h.size; ++y) {
    for (int x = 0; x < h.size; ++x) {
      if (h.interior(x, y)) truth.push_back(h.depth(x, y));
    }
  }
  EXPECT_GE(testkit::spearman(interior(h, d), truth), 0.9);
}

TEST(ShapeFromShading, LightMustBeUnit) {
  SfsOptions opts;
  opts.light = {0.0, 0.0, 2.0};
  try {
    tsai_shah_sfs(ImageBuffer(4, 4, 1, 0.5), opts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNonUnitLight);
  }
}
