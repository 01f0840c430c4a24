#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "scopekit/imaging.hpp"

namespace scopekit {

/// Raw 16-bit samples, used for depth PNGs.
struct Image16 {
  int width = 0;
  int height = 0;
  std::vector<std::uint16_t> data;
};

/// Reads PNG (8/16-bit; alpha dropped, palettes expanded) or binary/ASCII
/// PGM/PPM. Samples are divided by the format's max value.
ImageBuffer read_image(const std::filesystem::path& path);

/// Writes 8-bit PNG, PGM or PPM depending on the extension. Samples are
/// clamped to [0, 1] and rounded to 255 levels.
void write_image(const std::filesystem::path& path, const ImageBuffer& img);

/// Encodes an 8-bit PNG into memory.
std::string encode_png(const ImageBuffer& img);

Image16 read_png16(const std::filesystem::path& path);
void write_png16(const std::filesystem::path& path, const Image16& img);

/// Quantizes a [0, 1] sample to 8 bits.
std::uint8_t to_byte(double v);

}  // namespace scopekit
