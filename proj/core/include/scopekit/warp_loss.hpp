#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "scopekit/geometry.hpp"
#include "scopekit/imaging.hpp"

namespace scopekit {

/// Per-pixel depth in metres with an explicit validity raster. Valid depths are
/// finite and strictly positive.
struct DepthMap {
  ScalarField depth;
  Mask valid;

  DepthMap() = default;
  DepthMap(int width, int height) : depth(width, height), valid(width, height) {}
  /// Marks every finite, positive sample as valid.
  static DepthMap from_field(const ScalarField& d);
  static DepthMap constant(int width, int height, double z);

  [[nodiscard]] int width() const { return depth.width(); }
  [[nodiscard]] int height() const { return depth.height(); }
  [[nodiscard]] bool is_valid(int x, int y) const { return valid(x, y) != 0; }
  [[nodiscard]] std::size_t valid_count() const { return count_set(valid); }
};

/// Affine intensity transform T_b(I) = a I + c.
struct BrightnessParams {
  double a = 1.0;
  double c = 0.0;
  /// Set when the synthesized intensities were constant under the mask (or the
  /// fit had non-positive gain) and the offset-only fallback was used.
  bool degenerate = false;
};

struct LossWeights {
  double alpha = 1.0;
  double beta = 0.1;
  double gamma = 0.5;
  double lambda_p = 0.15;
  double lambda_s = 0.85;

  /// Throws InvalidArgument for negative or non-finite weights.
  void validate() const;
};

struct WarpResult {
  ImageBuffer image;
  /// Reference pixels whose projection landed inside the source image.
  Mask valid;
};

/// Valid reference pixels back-projected to camera-frame points, reusable
/// across pose evaluations.
struct BackProjection {
  int width = 0;
  int height = 0;
  std::vector<Eigen::Vector3d> points;
  std::vector<std::size_t> pixel;  // row-major pixel index of each point
};

/// Pixels whose distortion cannot be inverted are skipped.
BackProjection back_project(const DepthMap& depth, const CameraIntrinsics& K);

/// Inverse warp: samples `src` at the projection of each reference pixel
/// back-projected with `depth_ref` and moved by `pose_ref_to_src`.
WarpResult warp_image(const ImageBuffer& src, const DepthMap& depth_ref, const Pose& pose_ref_to_src,
                      const CameraIntrinsics& K);
WarpResult warp_image(const ImageBuffer& src, const BackProjection& ref_points, const Pose& pose_ref_to_src,
                      const CameraIntrinsics& K);

/// Least-squares (a, c) minimizing sum_mask (a synth + c - target)^2, pooled
/// over channels.
BrightnessParams estimate_brightness(const ImageBuffer& synth, const ImageBuffer& target, const Mask& mask);

/// a I + c, clamped to [0, 1].
ImageBuffer apply_brightness(const ImageBuffer& img, const BrightnessParams& bp);

struct PhotometricTerms {
  /// Mean weighted per-pixel L2 norm of the channel residual, times lambda_p.
  double l2 = 0.0;
  /// Mean weight times lambda_s (1 - SSIM) / 2, with SSIM taken over the mask.
  double ssim = 0.0;
  [[nodiscard]] double total() const { return l2 + ssim; }
};

/// Brightness-aware photometric loss. `weight` (values in [0, 1]) scales
/// each pixel's contribution; null means unit weight. Throws EmptyMask.
PhotometricTerms photometric_terms(const ImageBuffer& synth, const ImageBuffer& target, const Mask& mask,
                                   const BrightnessParams& bp, double lambda_p, double lambda_s,
                                   const ScalarField* weight = nullptr);

double photometric_loss(const ImageBuffer& synth, const ImageBuffer& target, const Mask& mask,
                        const BrightnessParams& bp, double lambda_p, double lambda_s,
                        const ScalarField* weight = nullptr);

/// Sum over pixels of (exp(-|dI|) dD)^2 in x and y, with D divided by its mean
/// over valid pixels. Differences touching an invalid depth are skipped.
double smoothness_loss(const ImageBuffer& img, const DepthMap& depth);

/// |a - b| / (a + b)
double depth_difference(double a, double b);

struct DepthConsistency {
  ScalarField diff;
  /// Depth of each reference point in the source frame.
  ScalarField warped_depth;
  Mask valid;
};

DepthConsistency depth_consistency(const DepthMap& depth_ref, const DepthMap& depth_src, const Pose& pose_ref_to_src,
                                   const CameraIntrinsics& K);

/// Mean of `diff` over `mask`. Throws EmptyMask.
double geometry_consistency_loss(const ScalarField& diff, const Mask& mask);

struct LossReport {
  double photometric = 0.0;
  double photometric_l2 = 0.0;
  double photometric_ssim = 0.0;
  double smoothness = 0.0;
  double geometry = 0.0;
  double total = 0.0;
  BrightnessParams brightness;
  std::size_t valid_count = 0;
};

struct LossInputs {
  const ImageBuffer* ref = nullptr;
  const ImageBuffer* src = nullptr;
  const DepthMap* depth_ref = nullptr;
  /// Optional; without it the geometry term is 0 and every pixel has unit weight.
  const DepthMap* depth_src = nullptr;
  Pose pose_ref_to_src;
  CameraIntrinsics K;
  /// Optional cached back_project(*depth_ref, K).
  const BackProjection* ref_points = nullptr;
  /// Optional cached smoothness_loss(*ref, *depth_ref); it does not depend on the pose.
  std::optional<double> smoothness;
};

/// alpha L_bp^M + beta L_s + gamma L_GC, with M = 1 - D_diff weighting the
/// photometric term. Brightness parameters are estimated when
/// `brightness_alignment` is set and fixed to (1, 0) otherwise.
LossReport total_loss(const LossInputs& in, const LossWeights& w, bool brightness_alignment = true);

}  // namespace scopekit
