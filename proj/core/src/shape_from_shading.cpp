#include "scopekit/shape_from_shading.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "scopekit/error.hpp"

namespace scopekit {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kMinReflectance = 1e-6;
constexpr double kGrid = 1e12;

struct Upwind {
  double E;
  Eigen::Vector3d l;
  int newton_steps;

  // Solves E sqrt(1 + p^2 + q^2) = lz - lx p - ly q for Z with p = sx (Z - a)
  // and q = sy (Z - b); a NaN neighbour drops its term.
  [[nodiscard]] double solve(double a, int sx, double b, int sy, double start) const {
    const bool use_x = !std::isnan(a);
    const bool use_y = !std::isnan(b);
    double z = start;
    for (int k = 0; k < newton_steps; ++k) {
      const double p = use_x ? sx * (z - a) : 0.0;
      const double q = use_y ? sy * (z - b) : 0.0;
      const double s = std::sqrt(1.0 + p * p + q * q);
      const double f = E * s - (l.z() - l.x() * p - l.y() * q);
      const double dp = use_x ? sx : 0.0;
      const double dq = use_y ? sy : 0.0;
      const double df = E * (p * dp + q * dq) / s + l.x() * dp + l.y() * dq;
      if (!(std::abs(df) > 1e-15)) break;
      const double step = f / df;
      z -= step;
      if (std::abs(step) <= 1e-13 * std::max(1.0, std::abs(z))) break;
    }
    return z;
  }
};

}  // namespace

DepthMap tsai_shah_sfs(const ImageBuffer& img, const SfsOptions& opts) {
  if (std::abs(opts.light.norm() - 1.0) > 1e-9) fail(ErrorCode::kNonUnitLight, "light direction must be a unit vector");
  if (opts.light.z() <= 0.0) fail(ErrorCode::kInvalidArgument, "light must face the scene");
  if (opts.iterations < 1 || opts.newton_steps < 1) fail(ErrorCode::kInvalidArgument, "iteration counts must be positive");
  if (img.empty()) fail(ErrorCode::kBadSize, "empty image");
  if (img.channels() != 1) fail(ErrorCode::kInvalidArgument, "shape from shading expects one channel");

  const int w = img.width();
  const int h = img.height();
  const auto [lo, hi] = std::minmax_element(img.data().begin(), img.data().end());
  const double range = *hi - *lo;

  ScalarField E(w, h, 1.0);
  if (range > 0.0) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        const double e = std::round((img.at(x, y) - *lo) / range * kGrid) / kGrid;
        E(x, y) = std::max(e, kMinReflectance);
      }
    }
  }

  ScalarField Z(w, h, kInf);
  for (std::size_t i = 0; i < Z.size(); ++i) {
    if (E[i] >= 1.0) Z[i] = 0.0;
  }

  static constexpr std::array<std::array<int, 2>, 4> kDirs{{{1, 1}, {-1, 1}, {1, -1}, {-1, -1}}};
  for (int round = 0; round < opts.iterations; ++round) {
    bool changed = false;
    for (const auto& dir : kDirs) {
      const int sx = dir[0];
      const int sy = dir[1];
      for (int yi = 0; yi < h; ++yi) {
        const int y = sy > 0 ? yi : h - 1 - yi;
        for (int xi = 0; xi < w; ++xi) {
          const int x = sx > 0 ? xi : w - 1 - xi;
          const double a = (x - sx >= 0 && x - sx < w) ? Z(x - sx, y) : kInf;
          const double b = (y - sy >= 0 && y - sy < h) ? Z(x, y - sy) : kInf;
          if (a == kInf && b == kInf) continue;
          const Upwind u{E(x, y), opts.light, opts.newton_steps};
          const double g = std::sqrt(1.0 / (E(x, y) * E(x, y)) - 1.0);
          double best = kInf;
          if (a != kInf) {
            const double z = u.solve(a, sx, std::nan(""), sy, a + g);
            if (std::isfinite(z) && z >= a) best = std::min(best, z);
          }
          if (b != kInf) {
            const double z = u.solve(std::nan(""), sx, b, sy, b + g);
            if (std::isfinite(z) && z >= b) best = std::min(best, z);
          }
          if (a != kInf && b != kInf) {
            const double z = u.solve(a, sx, b, sy, std::max(a, b) + g);
            if (std::isfinite(z) && z >= a && z >= b) best = std::min(best, z);
          }
          if (best < Z(x, y)) {
            Z(x, y) = best;
            changed = true;
          }
        }
      }
    }
    if (!changed) break;
  }

  DepthMap out = DepthMap::constant(w, h, 1.0);
  double zmin = kInf;
  for (double z : Z.data()) zmin = std::min(zmin, z);
  if (!std::isfinite(zmin)) return out;
  for (std::size_t i = 0; i < Z.size(); ++i) {
    if (std::isfinite(Z[i])) {
      out.depth[i] = Z[i] - zmin + 1.0;
    } else {
      out.valid[i] = 0;
    }
  }
  return out;
}

}  // namespace scopekit
