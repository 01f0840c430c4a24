#include "scopekit/heatmap.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "scopekit/error.hpp"

namespace scopekit {
namespace {

// 3x5 glyphs, one row per entry, bit 2 = left column.
struct Glyph {
  char c;
  std::array<std::uint8_t, 5> rows;
};

constexpr std::array<Glyph, 15> kFont{{
    {'0', {7, 5, 5, 5, 7}}, {'1', {2, 6, 2, 2, 7}}, {'2', {7, 1, 7, 4, 7}}, {'3', {7, 1, 7, 1, 7}},
    {'4', {5, 5, 7, 1, 1}}, {'5', {7, 4, 7, 1, 7}}, {'6', {7, 4, 7, 5, 7}}, {'7', {7, 1, 1, 1, 1}},
    {'8', {7, 5, 7, 5, 7}}, {'9', {7, 5, 7, 1, 7}}, {'.', {0, 0, 0, 0, 2}}, {'-', {0, 0, 7, 0, 0}},
    {'c', {0, 0, 7, 4, 7}}, {'m', {0, 0, 7, 7, 5}}, {' ', {0, 0, 0, 0, 0}},
}};

void put(ImageBuffer& img, int x, int y, const Eigen::Vector3d& rgb) {
  if (!img.contains(x, y)) return;
  for (int c = 0; c < 3; ++c) img.at(x, y, c) = rgb[c];
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

Eigen::Vector3d heat_color(double t) {
  t = std::clamp(std::isfinite(t) ? t : 1.0, 0.0, 1.0);
  static constexpr std::array<std::array<double, 3>, 4> kStops{{{0, 0, 1}, {0, 1, 1}, {1, 1, 0}, {1, 0, 0}}};
  const double s = t * 3.0;
  const int i = std::min(static_cast<int>(s), 2);
  const double f = s - i;
  Eigen::Vector3d out;
  for (int c = 0; c < 3; ++c) {
    out[c] = (1.0 - f) * kStops[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)] +
             f * kStops[static_cast<std::size_t>(i + 1)][static_cast<std::size_t>(c)];
  }
  return out;
}

void draw_text(ImageBuffer& img, int x, int y, const std::string& text, int scale, const Eigen::Vector3d& color) {
  int cx = x;
  for (char ch : text) {
    const auto it = std::find_if(kFont.begin(), kFont.end(), [&](const Glyph& g) { return g.c == ch; });
    if (it != kFont.end()) {
      for (int r = 0; r < 5; ++r) {
        for (int col = 0; col < 3; ++col) {
          if (!((it->rows[static_cast<std::size_t>(r)] >> (2 - col)) & 1)) continue;
          for (int dy = 0; dy < scale; ++dy) {
            for (int dx = 0; dx < scale; ++dx) put(img, cx + col * scale + dx, y + r * scale + dy, color);
          }
        }
      }
    }
    cx += 4 * scale;
  }
}

ImageBuffer render_distance_heatmap(std::span<const Eigen::Vector3d> points, std::span<const double> distances_cm,
                                    const HeatmapOptions& opts) {
  if (points.size() != distances_cm.size()) fail(ErrorCode::kInvalidArgument, "one distance per point required");
  if (opts.width < 160 || opts.height < 80) fail(ErrorCode::kBadSize, "heatmap canvas too small");
  const Eigen::Vector3d black(0, 0, 0);
  ImageBuffer img(opts.width, opts.height, 3, 1.0);

  double vmax = opts.max_cm;
  if (!(vmax > 0.0)) {
    vmax = 0.0;
    for (double d : distances_cm) {
      if (std::isfinite(d)) vmax = std::max(vmax, d);
    }
    if (!(vmax > 0.0)) vmax = 1.0;
  }

  const int bar_w = 16;
  const int label_w = 60;
  const int margin = 10;
  const int plot_w = opts.width - bar_w - label_w - 3 * margin;
  const int plot_h = opts.height - 2 * margin;

  if (!points.empty()) {
    Eigen::Vector2d lo = Eigen::Vector2d::Constant(std::numeric_limits<double>::infinity());
    Eigen::Vector2d hi = -lo;
    for (const auto& p : points) {
      lo = lo.cwiseMin(p.head<2>());
      hi = hi.cwiseMax(p.head<2>());
    }
    const Eigen::Vector2d span = (hi - lo).cwiseMax(1e-12);
    const double s = std::min((plot_w - 1) / span.x(), (plot_h - 1) / span.y());
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return points[a].z() < points[b].z(); });
    for (std::size_t i : order) {
      const int px = margin + static_cast<int>(std::lround((points[i].x() - lo.x()) * s));
      const int py = margin + plot_h - 1 - static_cast<int>(std::lround((points[i].y() - lo.y()) * s));
      const Eigen::Vector3d c = heat_color(distances_cm[i] / vmax);
      for (int dy = -opts.point_radius; dy <= opts.point_radius; ++dy) {
        for (int dx = -opts.point_radius; dx <= opts.point_radius; ++dx) put(img, px + dx, py + dy, c);
      }
    }
  }

  const int bx = opts.width - bar_w - label_w - margin;
  for (int y = 0; y < plot_h; ++y) {
    const Eigen::Vector3d c = heat_color(1.0 - static_cast<double>(y) / std::max(1, plot_h - 1));
    for (int x = 0; x < bar_w; ++x) put(img, bx + x, margin + y, c);
  }
  const int lx = bx + bar_w + 4;
  draw_text(img, lx, margin, label(vmax), 2, black);
  draw_text(img, lx, margin + plot_h / 2 - 5, label(vmax / 2.0), 2, black);
  draw_text(img, lx, margin + plot_h - 10, label(0.0), 2, black);
  draw_text(img, lx, margin + plot_h / 2 + 10, "cm", 2, black);
  return img;
}

}  // namespace scopekit
