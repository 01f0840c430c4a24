#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "scopekit/imaging.hpp"
#include "scopekit/warp_loss.hpp"

namespace scopekit {

/// Bilinear resampling with pixel-centre alignment. Throws BadSize.
ImageBuffer resize(const ImageBuffer& img, int width, int height);

/// gaussian_blur applied `repetitions` times.
ImageBuffer gaussian_blur_repeated(const ImageBuffer& img, int kernel_size, double sigma, int repetitions);

/// Multiplies by 1 - s + s cos^4(atan(r / r_max)), r measured from the image
/// centre and r_max the half diagonal. Throws BadRatio unless s is in [0, 1].
ImageBuffer vignette(const ImageBuffer& img, double strength);

/// Vignette factor at a pixel, as used by vignette().
double vignette_factor(int width, int height, double x, double y, double strength);

inline constexpr double kFisheyeMaxAngle = M_PI / 4.0;

/// Equidistant fisheye remap about the image centre. With R = min(w, h) / 2
/// and rho = |p - c| / R, output pixels with rho <= nu sample the input at
/// radius R tan(theta) / tan(theta_max), theta = theta_max rho / nu; the rest
/// are black. Throws BadRatio unless nu is in (0, 1].
ImageBuffer fisheye(const ImageBuffer& img, double nu);

struct DofOptions {
  double max_sigma = 8.0;
  /// Depth range mapped to [0, 1]; defaults to the valid min/max.
  std::optional<double> near;
  std::optional<double> far;
};

/// Shift-variant Gaussian gather with sigma = max_sigma |d_n - focus|, where
/// d_n is the normalized depth (0 for a degenerate range). Invalid depths stay
/// sharp. Throws DimensionMismatch and BadRatio (focus outside [0, 1]).
ImageBuffer depth_of_field(const ImageBuffer& img, const DepthMap& depth, double focus, const DofOptions& opts = {});

/// Indices kept when keeping every `factor`-th frame from 0.
std::vector<std::size_t> subsample_indices(std::size_t count, int factor);

template <typename T>
std::vector<T> framerate_subsample(const std::vector<T>& frames, int factor) {
  std::vector<T> out;
  for (std::size_t i : subsample_indices(frames.size(), factor)) out.push_back(frames[i]);
  return out;
}

/// One line of an augmentation spec file: `<op> key=value ...`.
struct AugmentStep {
  std::string op;
  std::map<std::string, double> params;
  [[nodiscard]] double get(const std::string& key) const;
  [[nodiscard]] double get_or(const std::string& key, double fallback) const;
};

struct AugmentSpec {
  std::vector<AugmentStep> steps;
  /// Product of all `subsample factor=` steps (1 when absent).
  [[nodiscard]] int subsample_factor() const;
  [[nodiscard]] bool needs_depth() const;
};

/// Ops: resize width height | blur kernel sigma repeat | vignette strength |
/// fisheye nu | dof focus [max_sigma near far] | subsample factor.
/// '#' starts a comment. Throws Parse or the op's range error.
AugmentSpec parse_augment_spec(std::string_view text);

/// Runs the per-image steps in order (subsample is a sequence-level step and
/// is skipped here). `depth` is required by dof and is resized alongside.
ImageBuffer apply_augment_spec(const ImageBuffer& img, const AugmentSpec& spec, const DepthMap* depth = nullptr);

}  // namespace scopekit
