#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "scopekit/point_cloud.hpp"

namespace scopekit {

enum class PlyFormat { kAscii, kBinaryLittleEndian };

/// Vertices (with normals when nx/ny/nz are present) and triangulated faces.
/// The unit comes from a `comment unit <mm|cm|m>` header line, else `fallback`.
struct PlyData {
  PointCloud cloud;
  std::vector<std::array<int, 3>> faces;

  [[nodiscard]] TriMesh mesh() const { return {cloud.points, faces, cloud.unit}; }
};

/// Parses ASCII or binary little-endian PLY. Throws Parse.
PlyData parse_ply(std::string_view bytes, LengthUnit fallback = LengthUnit::kMillimeter);
PlyData read_ply(const std::filesystem::path& path, LengthUnit fallback = LengthUnit::kMillimeter);

std::string encode_ply(const PointCloud& cloud, PlyFormat format);
std::string encode_ply(const TriMesh& mesh, PlyFormat format);
void write_ply(const std::filesystem::path& path, const PointCloud& cloud, PlyFormat format = PlyFormat::kBinaryLittleEndian);
void write_ply(const std::filesystem::path& path, const TriMesh& mesh, PlyFormat format = PlyFormat::kBinaryLittleEndian);

}  // namespace scopekit
