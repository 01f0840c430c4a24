#include "scopekit/ply.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <iomanip>
#include <optional>
#include <sstream>
#include <vector>

#include "scopekit/calibration_io.hpp"
#include "scopekit/error.hpp"
#include "scopekit/io_util.hpp"

static_assert(std::endian::native == std::endian::little, "binary PLY support assumes a little-endian host");

namespace scopekit {
namespace {

enum class Scalar { kI8, kU8, kI16, kU16, kI32, kU32, kF32, kF64 };

Scalar scalar_from_name(const std::string& s) {
  if (s == "char" || s == "int8") return Scalar::kI8;
  if (s == "uchar" || s == "uint8") return Scalar::kU8;
  if (s == "short" || s == "int16") return Scalar::kI16;
  if (s == "ushort" || s == "uint16") return Scalar::kU16;
  if (s == "int" || s == "int32") return Scalar::kI32;
  if (s == "uint" || s == "uint32") return Scalar::kU32;
  if (s == "float" || s == "float32") return Scalar::kF32;
  if (s == "double" || s == "float64") return Scalar::kF64;
  fail(ErrorCode::kParse, "unknown PLY scalar type '" + s + "'");
}

std::size_t scalar_size(Scalar s) {
  switch (s) {
    case Scalar::kI8:
    case Scalar::kU8:
      return 1;
    case Scalar::kI16:
    case Scalar::kU16:
      return 2;
    case Scalar::kI32:
    case Scalar::kU32:
    case Scalar::kF32:
      return 4;
    case Scalar::kF64:
      return 8;
  }
  return 0;
}

struct Property {
  std::string name;
  Scalar type = Scalar::kF32;
  bool is_list = false;
  Scalar count_type = Scalar::kU8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> props;
};

template <typename T>
T load(const char* p) {
  T v;
  std::memcpy(&v, p, sizeof(T));
  return v;
}

class BinaryReader {
 public:
  BinaryReader(std::string_view data, std::size_t pos) : data_(data), pos_(pos) {}

  double read(Scalar s) {
    const std::size_t n = scalar_size(s);
    if (pos_ + n > data_.size()) fail(ErrorCode::kParse, "PLY body is truncated");
    const char* p = data_.data() + pos_;
    pos_ += n;
    switch (s) {
      case Scalar::kI8:
        return load<std::int8_t>(p);
      case Scalar::kU8:
        return load<std::uint8_t>(p);
      case Scalar::kI16:
        return load<std::int16_t>(p);
      case Scalar::kU16:
        return load<std::uint16_t>(p);
      case Scalar::kI32:
        return load<std::int32_t>(p);
      case Scalar::kU32:
        return load<std::uint32_t>(p);
      case Scalar::kF32:
        return load<float>(p);
      case Scalar::kF64:
        return load<double>(p);
    }
    return 0.0;
  }

 private:
  std::string_view data_;
  std::size_t pos_;
};

class AsciiReader {
 public:
  AsciiReader(std::string_view data, std::size_t pos) : in_(std::string(data.substr(pos))) {}

  double read(Scalar) {
    double v = 0.0;
    if (!(in_ >> v)) fail(ErrorCode::kParse, "PLY body is truncated or malformed");
    return v;
  }

 private:
  std::istringstream in_;
};

template <typename Reader>
void read_body(Reader& r, const std::vector<Element>& elements, PlyData& out) {
  for (const Element& e : elements) {
    if (e.name == "vertex") {
      int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1;
      for (std::size_t k = 0; k < e.props.size(); ++k) {
        const auto& n = e.props[k].name;
        const int kk = static_cast<int>(k);
        if (n == "x") ix = kk;
        if (n == "y") iy = kk;
        if (n == "z") iz = kk;
        if (n == "nx") inx = kk;
        if (n == "ny") iny = kk;
        if (n == "nz") inz = kk;
      }
      if (ix < 0 || iy < 0 || iz < 0) fail(ErrorCode::kParse, "PLY vertex element lacks x/y/z");
      const bool normals = inx >= 0 && iny >= 0 && inz >= 0;
      std::vector<double> vals(e.props.size());
      for (std::size_t i = 0; i < e.count; ++i) {
        for (std::size_t k = 0; k < e.props.size(); ++k) {
          const Property& p = e.props[k];
          if (p.is_list) {
            const auto m = static_cast<std::size_t>(r.read(p.count_type));
            for (std::size_t j = 0; j < m; ++j) r.read(p.type);
            vals[k] = 0.0;
          } else {
            vals[k] = r.read(p.type);
          }
        }
        const auto at = [&](int k) { return vals[static_cast<std::size_t>(k)]; };
        out.cloud.points.emplace_back(at(ix), at(iy), at(iz));
        if (normals) out.cloud.normals.emplace_back(at(inx), at(iny), at(inz));
      }
    } else {
      const bool faces = e.name == "face";
      for (std::size_t i = 0; i < e.count; ++i) {
        for (const Property& p : e.props) {
          if (!p.is_list) {
            r.read(p.type);
            continue;
          }
          const double mc = r.read(p.count_type);
          if (mc < 0.0) fail(ErrorCode::kParse, "negative PLY list length");
          const auto m = static_cast<std::size_t>(mc);
          std::vector<int> idx(m);
          for (std::size_t j = 0; j < m; ++j) idx[j] = static_cast<int>(r.read(p.type));
          if (faces && (p.name == "vertex_indices" || p.name == "vertex_index")) {
            for (std::size_t j = 2; j < m; ++j) out.faces.push_back({idx[0], idx[j - 1], idx[j]});
          }
        }
      }
    }
  }
}

}  // namespace

PlyData parse_ply(std::string_view bytes, LengthUnit fallback) {
  std::size_t pos = 0;
  const auto next_line = [&]() -> std::optional<std::string> {
    if (pos >= bytes.size()) return std::nullopt;
    std::size_t end = bytes.find('\n', pos);
    if (end == std::string_view::npos) end = bytes.size();
    std::string line(bytes.substr(pos, end - pos));
    pos = end + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };

  const auto magic = next_line();
  if (!magic || *magic != "ply") fail(ErrorCode::kParse, "missing PLY magic");
  std::optional<PlyFormat> format;
  std::vector<Element> elements;
  PlyData out;
  out.cloud.unit = fallback;
  bool ended = false;
  while (auto line = next_line()) {
    std::istringstream ls(*line);
    std::string key;
    ls >> key;
    if (key.empty()) continue;
    if (key == "format") {
      std::string f, version;
      ls >> f >> version;
      if (f == "ascii") {
        format = PlyFormat::kAscii;
      } else if (f == "binary_little_endian") {
        format = PlyFormat::kBinaryLittleEndian;
      } else {
        fail(ErrorCode::kParse, "unsupported PLY format '" + f + "'");
      }
    } else if (key == "comment" || key == "obj_info") {
      std::string word, unit;
      ls >> word >> unit;
      if (key == "comment" && word == "unit") out.cloud.unit = length_unit_from_string(unit);
    } else if (key == "element") {
      Element e;
      long long count = -1;
      ls >> e.name >> count;
      if (e.name.empty() || count < 0) fail(ErrorCode::kParse, "malformed PLY element line");
      e.count = static_cast<std::size_t>(count);
      elements.push_back(std::move(e));
    } else if (key == "property") {
      if (elements.empty()) fail(ErrorCode::kParse, "PLY property before any element");
      Property p;
      std::string type;
      ls >> type;
      if (type == "list") {
        std::string ct, vt;
        ls >> ct >> vt >> p.name;
        p.is_list = true;
        p.count_type = scalar_from_name(ct);
        p.type = scalar_from_name(vt);
      } else {
        p.type = scalar_from_name(type);
        ls >> p.name;
      }
      if (p.name.empty()) fail(ErrorCode::kParse, "PLY property without a name");
      elements.back().props.push_back(p);
    } else if (key == "end_header") {
      ended = true;
      break;
    } else {
      fail(ErrorCode::kParse, "unexpected PLY header keyword '" + key + "'");
    }
  }
  if (!ended) fail(ErrorCode::kParse, "PLY header is not terminated");
  if (!format) fail(ErrorCode::kParse, "PLY format line missing");

  if (*format == PlyFormat::kAscii) {
    AsciiReader r(bytes, pos);
    read_body(r, elements, out);
  } else {
    BinaryReader r(bytes, pos);
    read_body(r, elements, out);
  }
  out.cloud.validate();
  out.mesh().validate();
  return out;
}

PlyData read_ply(const std::filesystem::path& path, LengthUnit fallback) {
  return parse_ply(read_text_file(path), fallback);
}

namespace {

template <typename T>
void append(std::string& s, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  s.append(buf, sizeof(T));
}

std::string encode(const std::vector<Eigen::Vector3d>& pts, const std::vector<Eigen::Vector3d>& normals,
                   const std::vector<std::array<int, 3>>& faces, LengthUnit unit, PlyFormat format) {
  const bool with_normals = !normals.empty();
  std::ostringstream h;
  h << "ply\nformat " << (format == PlyFormat::kAscii ? "ascii" : "binary_little_endian") << " 1.0\n";
  h << "comment unit " << to_string(unit) << "\n";
  h << "element vertex " << pts.size() << "\n";
  h << "property double x\nproperty double y\nproperty double z\n";
  if (with_normals) h << "property double nx\nproperty double ny\nproperty double nz\n";
  if (!faces.empty()) h << "element face " << faces.size() << "\nproperty list uchar int vertex_indices\n";
  h << "end_header\n";
  std::string out = h.str();
  if (format == PlyFormat::kAscii) {
    std::ostringstream b;
    b << std::setprecision(17);
    for (std::size_t i = 0; i < pts.size(); ++i) {
      b << pts[i].x() << ' ' << pts[i].y() << ' ' << pts[i].z();
      if (with_normals) b << ' ' << normals[i].x() << ' ' << normals[i].y() << ' ' << normals[i].z();
      b << '\n';
    }
    for (const auto& f : faces) b << "3 " << f[0] << ' ' << f[1] << ' ' << f[2] << '\n';
    out += b.str();
  } else {
    for (std::size_t i = 0; i < pts.size(); ++i) {
      for (int k = 0; k < 3; ++k) append(out, pts[i][k]);
      if (with_normals) {
        for (int k = 0; k < 3; ++k) append(out, normals[i][k]);
      }
    }
    for (const auto& f : faces) {
      append(out, std::uint8_t{3});
      for (int v : f) append(out, static_cast<std::int32_t>(v));
    }
  }
  return out;
}

}  // namespace

std::string encode_ply(const PointCloud& cloud, PlyFormat format) {
  cloud.validate();
  return encode(cloud.points, cloud.normals, {}, cloud.unit, format);
}

std::string encode_ply(const TriMesh& mesh, PlyFormat format) {
  mesh.validate();
  return encode(mesh.vertices, {}, mesh.faces, mesh.unit, format);
}

void write_ply(const std::filesystem::path& path, const PointCloud& cloud, PlyFormat format) {
  write_file_atomic(path, encode_ply(cloud, format));
}

void write_ply(const std::filesystem::path& path, const TriMesh& mesh, PlyFormat format) {
  write_file_atomic(path, encode_ply(mesh, format));
}

}  // namespace scopekit
