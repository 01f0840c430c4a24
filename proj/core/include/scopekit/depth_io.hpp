#pragma once

#include <filesystem>

#include "scopekit/warp_loss.hpp"

namespace scopekit {

/// 16-bit depth PNGs store metres * 5000; 0 marks an invalid pixel.
inline constexpr double kDepthPngScale = 5000.0;

/// Reads a depth map from a 16-bit PNG or a raw float file (".depth"):
///
///   SKDEPTH1\n
///   <width> <height>\n
///   <width*height little-endian float32, row-major>
///
/// Non-finite or non-positive raw samples are invalid.
DepthMap read_depth(const std::filesystem::path& path);

/// Writes by extension (.png or .depth). Invalid pixels become 0 (PNG) or NaN (raw).
/// Throws InvalidArgument when a depth does not fit the 16-bit PNG range.
void write_depth(const std::filesystem::path& path, const DepthMap& depth);

}  // namespace scopekit
