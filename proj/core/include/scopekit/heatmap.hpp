#pragma once

#include <span>
#include <string>

#include <Eigen/Core>

#include "scopekit/imaging.hpp"

namespace scopekit {

struct HeatmapOptions {
  int width = 640;
  int height = 480;
  /// Upper end of the colour scale in cm; non-positive means the largest distance.
  double max_cm = 0.0;
  int point_radius = 1;
};

/// Maps a value in [0, 1] to RGB along a blue-cyan-yellow-red ramp.
Eigen::Vector3d heat_color(double t);

/// Top-down (x, y) scatter of points coloured by distance in cm, with a
/// labelled colour bar on the right. Throws InvalidArgument on size mismatch.
ImageBuffer render_distance_heatmap(std::span<const Eigen::Vector3d> points, std::span<const double> distances_cm,
                                    const HeatmapOptions& opts = {});

/// Draws `text` (digits, '.', '-', 'c', 'm') with a 3x5 bitmap font scaled by `scale`.
void draw_text(ImageBuffer& img, int x, int y, const std::string& text, int scale, const Eigen::Vector3d& color);

}  // namespace scopekit
