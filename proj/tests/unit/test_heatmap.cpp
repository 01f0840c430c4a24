#include <gtest/gtest.h>

#include "scopekit/error.hpp"
#include "scopekit/heatmap.hpp"

using namespace scopekit;

TEST(Heatmap, ColourRampEndpoints) {
  EXPECT_TRUE(heat_color(0.0).isApprox(Eigen::Vector3d(0, 0, 1)));
  EXPECT_TRUE(heat_color(1.0).isApprox(Eigen::Vector3d(1, 0, 0)));
  EXPECT_TRUE(heat_color(-3.0).isApprox(heat_color(0.0)));
}

TEST(Heatmap, PointsAreColouredByDistance) {
  const std::vector<Eigen::Vector3d> pts{{0, 0, 0}, {100, 100, 0}};
  const std::vector<double> d{0.0, 2.0};
  HeatmapOptions opts;
  opts.point_radius = 0;
  const ImageBuffer img = render_distance_heatmap(pts, d, opts);
  EXPECT_EQ(img.width(), opts.width);
  EXPECT_EQ(img.channels(), 3);
  // Square extent: the plot height limits the scale.
  const int plot_h = opts.height - 20;
  EXPECT_EQ(img.at(10, 10 + plot_h - 1, 2), 1.0);
  EXPECT_EQ(img.at(10, 10 + plot_h - 1, 0), 0.0);
  EXPECT_EQ(img.at(10 + plot_h - 1, 10, 0), 1.0);
  EXPECT_EQ(img.at(10 + plot_h - 1, 10, 2), 0.0);
}

TEST(Heatmap, SizeMismatchIsRejected) {
  const std::vector<Eigen::Vector3d> pts{{0, 0, 0}};
  const std::vector<double> d{};
  EXPECT_THROW(render_distance_heatmap(pts, d), Error);
}
