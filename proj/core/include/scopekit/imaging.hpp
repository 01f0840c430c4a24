#pragma once

#include <optional>
#include <vector>

#include "scopekit/raster.hpp"

namespace scopekit {

/// Row-major interleaved image with 1 or 3 channels. Intensities are doubles;
/// images read from disk are normalized to [0, 1] (8-bit values / 255).
class ImageBuffer {
 public:
  ImageBuffer() = default;
  ImageBuffer(int width, int height, int channels, double fill = 0.0);

  [[nodiscard]] int width() const { return width_; }
  [[nodiscard]] int height() const { return height_; }
  [[nodiscard]] int channels() const { return channels_; }
  [[nodiscard]] bool empty() const { return data_.empty(); }
  [[nodiscard]] bool contains(int x, int y) const { return x >= 0 && y >= 0 && x < width_ && y < height_; }

  double& at(int x, int y, int c = 0) { return data_[index(x, y, c)]; }
  [[nodiscard]] double at(int x, int y, int c = 0) const { return data_[index(x, y, c)]; }

  [[nodiscard]] std::vector<double>& data() { return data_; }
  [[nodiscard]] const std::vector<double>& data() const { return data_; }

  [[nodiscard]] bool same_shape(const ImageBuffer& o) const {
    return width_ == o.width_ && height_ == o.height_ && channels_ == o.channels_;
  }
  template <typename T>
  [[nodiscard]] bool same_size(const Raster<T>& r) const {
    return width_ == r.width() && height_ == r.height();
  }

  /// True when every sample lies in [0, 1].
  [[nodiscard]] bool in_unit_range() const;
  /// Clamps every sample into [0, 1] in place.
  void clamp_unit();

  bool operator==(const ImageBuffer&) const = default;

 private:
  [[nodiscard]] std::size_t index(int x, int y, int c) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  int width_ = 0;
  int height_ = 0;
  int channels_ = 1;
  std::vector<double> data_;
};

/// ITU-R 601 luma (0.299, 0.587, 0.114); single-channel input is copied.
ImageBuffer to_gray(const ImageBuffer& img);
ImageBuffer from_field(const ScalarField& f);
ScalarField to_field(const ImageBuffer& img, int channel = 0);

/// Bilinear interpolation of one channel. Returns nullopt when a tap with a
/// non-zero weight falls outside the image (integer coordinates need only one tap).
std::optional<double> bilinear_sample(const ImageBuffer& img, double x, double y, int channel = 0);

/// Bilinear interpolation of a scalar field whose taps must all be marked valid.
std::optional<double> bilinear_sample(const ScalarField& f, const Mask* valid, double x, double y);

/// Forward first differences d/dx = I(x+1) - I(x), d/dy = I(y+1) - I(y); the
/// last column (row) has no forward neighbour and holds 0.
struct GradientField {
  ScalarField gx;
  ScalarField gy;
};
GradientField gradients(const ScalarField& f);
/// Channel-averaged image gradients.
GradientField gradients(const ImageBuffer& img);

inline constexpr double kSsimC1 = 0.01 * 0.01;
inline constexpr double kSsimC2 = 0.03 * 0.03;

/// Mean SSIM over all window positions that lie fully inside the image, with
/// uniform box windows. Multi-channel inputs are averaged over channels.
/// Throws DimensionMismatch for different shapes and BadKernel for an even
/// window or one larger than the image.
double ssim(const ImageBuffer& a, const ImageBuffer& b, int window = 3);

/// Per-pixel SSIM whose statistics use the window pixels that are inside the
/// image and (when given) inside `mask`. Pixels outside the mask are 0.
ScalarField ssim_map(const ImageBuffer& a, const ImageBuffer& b, int window = 3, const Mask* mask = nullptr);

/// 256-level histogram bin of an intensity in [0, 1].
int intensity_bin(double v);

struct OtsuResult {
  /// Intensities strictly above this value form the upper class.
  double threshold = 0.0;
  /// Last histogram bin of the lower class.
  int bin = 0;
  /// Set when the image holds a single intensity; threshold is then that intensity.
  bool degenerate = false;
};

/// Maximizes the between-class variance over the 256-bin histogram; ties go to
/// the lowest bin. The returned threshold sits half a level above that bin.
OtsuResult otsu_threshold(const ImageBuffer& gray);

/// Harmonic fill of masked pixels from the unmasked boundary (Dirichlet on
/// known pixels, reflective at the image border) by SOR sweeps until the
/// largest update is below `tolerance` or `max_iters` is reached.
ImageBuffer inpaint_diffusion(const ImageBuffer& img, const Mask& mask, int max_iters = 20000,
                              double tolerance = 1e-13);

/// Sampled Gaussian normalized to unit sum.
std::vector<double> gaussian_kernel(int size, double sigma);

/// Separable Gaussian blur with edge replication at the borders.
ImageBuffer gaussian_blur(const ImageBuffer& img, int kernel_size, double sigma);

/// Binary dilation with a disc of the given radius.
Mask dilate(const Mask& m, int radius);

}  // namespace scopekit
