#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Core>

namespace scopekit {

/// Planar projective map normalized so that h33 = 1.
struct Homography {
  Eigen::Matrix3d H = Eigen::Matrix3d::Identity();

  /// Scales `M` so its bottom-right entry is 1. Throws DegenerateGeometry when
  /// that entry vanishes or the matrix is singular.
  static Homography from_matrix(const Eigen::Matrix3d& M);
  static Homography translation(double tx, double ty);

  [[nodiscard]] Eigen::Vector2d operator()(const Eigen::Vector2d& p) const;
  [[nodiscard]] Homography inverse() const;
  /// (*this) after b.
  [[nodiscard]] Homography operator*(const Homography& b) const;
};

struct PointMatch {
  Eigen::Vector2d src;
  Eigen::Vector2d dst;
};

/// Direct linear transform with Hartley normalization on all matches.
/// Throws InsufficientMatches below 4 and DegenerateGeometry for collinear sets.
Homography fit_homography_dlt(std::span<const PointMatch> matches);

/// |H(src) - dst| in pixels.
double transfer_error(const Homography& h, const PointMatch& m);

struct RansacOptions {
  double threshold = 3.0;
  std::size_t max_iterations = 2000;
  double confidence = 0.999;
  std::uint64_t seed = 0;
};

struct RansacResult {
  Homography homography;
  std::vector<std::size_t> inliers;  // ascending
  std::size_t iterations = 0;
};

/// Four-point RANSAC with an adaptive iteration bound, followed by repeated
/// least-squares refits on the inlier set until it stops changing.
/// Throws InsufficientMatches below 4 matches and NoConsensus when no
/// non-degenerate sample yields at least 4 inliers.
RansacResult ransac_homography(std::span<const PointMatch> matches, const RansacOptions& opts = {});

}  // namespace scopekit
