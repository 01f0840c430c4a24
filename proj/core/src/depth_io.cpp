#include "scopekit/depth_io.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "scopekit/calibration_io.hpp"
#include "scopekit/image_io.hpp"
#include "scopekit/io_util.hpp"

namespace scopekit {
namespace {

constexpr const char* kRawMagic = "SKDEPTH1";

float load_le_float(const unsigned char* p) {
  std::uint32_t bits = static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
                       (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
  return std::bit_cast<float>(bits);
}

void store_le_float(float v, std::string& out) {
  const auto bits = std::bit_cast<std::uint32_t>(v);
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((bits >> (8 * i)) & 0xff));
}

DepthMap read_raw(const std::filesystem::path& path) {
  const std::string file = read_text_file(path);
  std::istringstream header(file);
  std::string magic;
  int w = 0, h = 0;
  header >> magic >> w >> h;
  if (magic != kRawMagic || !header || w <= 0 || h <= 0) fail(ErrorCode::kParse, path.string() + ": bad depth header");
  std::size_t offset = static_cast<std::size_t>(header.tellg());
  if (offset >= file.size() || file[offset] != '\n') fail(ErrorCode::kParse, path.string() + ": bad depth header");
  ++offset;
  const std::size_t n = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  if (file.size() != offset + 4 * n) fail(ErrorCode::kParse, path.string() + ": depth payload has the wrong size");
  ScalarField d(w, h);
  const auto* p = reinterpret_cast<const unsigned char*>(file.data()) + offset;
  for (std::size_t i = 0; i < n; ++i) d[i] = load_le_float(p + 4 * i);
  return DepthMap::from_field(d);
}

}  // namespace

DepthMap read_depth(const std::filesystem::path& path) {
  if (path.extension() == ".depth") return read_raw(path);
  const Image16 img = read_png16(path);
  DepthMap out(img.width, img.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    out.depth[i] = img.data[i] / kDepthPngScale;
    out.valid[i] = img.data[i] != 0;
  }
  return out;
}

void write_depth(const std::filesystem::path& path, const DepthMap& depth) {
  if (depth.depth.empty()) fail(ErrorCode::kInvalidArgument, "refusing to write an empty depth map");
  if (path.extension() == ".depth") {
    std::ostringstream header;
    header << kRawMagic << '\n' << depth.width() << ' ' << depth.height() << '\n';
    std::string out = header.str();
    out.reserve(out.size() + 4 * depth.depth.size());
    for (std::size_t i = 0; i < depth.depth.size(); ++i) {
      store_le_float(depth.valid[i] ? static_cast<float>(depth.depth[i]) : std::numeric_limits<float>::quiet_NaN(),
                     out);
    }
    write_file_atomic(path, out);
    return;
  }
  Image16 img{depth.width(), depth.height(), std::vector<std::uint16_t>(depth.depth.size(), 0)};
  for (std::size_t i = 0; i < depth.depth.size(); ++i) {
    if (!depth.valid[i]) continue;
    const double v = std::round(depth.depth[i] * kDepthPngScale);
    if (!(v >= 1.0 && v <= 65535.0)) fail(ErrorCode::kInvalidArgument, "depth outside the 16-bit PNG range");
    img.data[i] = static_cast<std::uint16_t>(v);
  }
  write_png16(path, img);
}

}  // namespace scopekit
