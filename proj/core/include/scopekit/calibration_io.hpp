#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "scopekit/geometry.hpp"

namespace scopekit {

/// Parses a plain-text calibration file:
///
///   # HighCam, pinhole
///   model = pinhole
///   fx = 957.4119
///   fy = 959.3861
///   s = 5.6242
///   cx = 282.1921
///   cy = 170.7316
///   k1 = 0.2533
///   k2 = -0.2085
///   width = 640
///   height = 480
///
/// `key: value` and `key value` are accepted too. A `preset = <name>` line
/// seeds all fields from camera_preset() and later keys override it.
CameraIntrinsics parse_intrinsics(std::string_view text);
CameraIntrinsics load_intrinsics(const std::filesystem::path& path);
std::string format_intrinsics(const CameraIntrinsics& K);

/// Hand-eye file with keys r11..r33 and tx, ty, tz (millimetres), or `preset = <name>`.
HandEye parse_hand_eye(std::string_view text);
HandEye load_hand_eye(const std::filesystem::path& path);

/// Shared "key = value" tokenizer; comments start with '#'.
std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text);

std::string read_text_file(const std::filesystem::path& path);

}  // namespace scopekit
