#pragma once

#include <filesystem>
#include <string_view>

namespace scopekit {

/// Writes `bytes` to a sibling temporary file and renames it over `path`, so a
/// failure never leaves a truncated file behind. Throws Io.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace scopekit
