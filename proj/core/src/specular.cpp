#include "scopekit/specular.hpp"

#include <algorithm>

#include "scopekit/error.hpp"

namespace scopekit {

SpecularResult suppress_specular(const ImageBuffer& img, const SpecularOptions& opts) {
  if (img.empty()) fail(ErrorCode::kBadSize, "empty image");
  if (opts.dilation_radius < 0) fail(ErrorCode::kInvalidArgument, "negative dilation radius");
  const ImageBuffer gray = to_gray(img);
  const OtsuResult otsu = otsu_threshold(gray);
  if (otsu.degenerate) fail(ErrorCode::kDegenerateHistogram, "image has a single intensity");

  SpecularResult out;
  out.threshold = std::max(otsu.threshold, opts.min_intensity);
  Mask seed(img.width(), img.height(), 0);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) seed(x, y) = gray.at(x, y) > out.threshold ? 1 : 0;
  }
  if (count_set(seed) == 0) {
    out.image = img;
    out.mask = std::move(seed);
    return out;
  }
  out.mask = dilate(seed, opts.dilation_radius);
  out.image = inpaint_diffusion(img, out.mask);
  return out;
}

}  // namespace scopekit
