#pragma once

#include "scopekit/imaging.hpp"

namespace scopekit {

struct SpecularOptions {
  int dilation_radius = 2;
  /// The upper Otsu class only counts as specular above this luma.
  double min_intensity = 0.8;
};

struct SpecularResult {
  ImageBuffer image;
  Mask mask;
  double threshold = 0.0;
};

/// Otsu split of the luma; upper-class pixels brighter than min_intensity,
/// dilated, are filled by diffusion inpainting. Throws DegenerateHistogram for
/// single-intensity images.
SpecularResult suppress_specular(const ImageBuffer& img, const SpecularOptions& opts = {});

}  // namespace scopekit
