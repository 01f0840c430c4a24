#include "scopekit/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstring>
#include <sstream>

#include "scopekit/calibration_io.hpp"
#include "scopekit/error.hpp"
#include "scopekit/io_util.hpp"

namespace scopekit {
namespace {

struct RawImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  int depth = 8;  // bits per sample; 16-bit samples are big-endian
  std::vector<std::uint8_t> bytes;
};

struct MemReader {
  const std::uint8_t* data;
  std::size_t size;
  std::size_t pos;
};

void read_from_memory(png_structp png, png_bytep out, png_size_t n) {
  auto* r = static_cast<MemReader*>(png_get_io_ptr(png));
  if (r->pos + n > r->size) png_error(png, "unexpected end of PNG data");
  std::memcpy(out, r->data + r->pos, n);
  r->pos += n;
}

void append_to_string(png_structp png, png_bytep in, png_size_t n) {
  auto* s = static_cast<std::string*>(png_get_io_ptr(png));
  s->append(reinterpret_cast<const char*>(in), n);
}

void flush_noop(png_structp) {}

bool decode_png(const std::string& file, RawImage& out, std::string& error) {
  if (file.size() < 8 || png_sig_cmp(reinterpret_cast<png_const_bytep>(file.data()), 0, 8) != 0) {
    error = "not a PNG file";
    return false;
  }
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_read_struct(&png, &info, nullptr);
    error = "libpng initialization failed";
    return false;
  }
  MemReader reader{reinterpret_cast<const std::uint8_t*>(file.data()), file.size(), 0};
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    error = "corrupt PNG data";
    return false;
  }
  png_set_read_fn(png, &reader, read_from_memory);
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color == PNG_COLOR_TYPE_GRAY && png_get_bit_depth(png, info) < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
  png_read_update_info(png, info);

  out.width = static_cast<int>(png_get_image_width(png, info));
  out.height = static_cast<int>(png_get_image_height(png, info));
  out.channels = png_get_channels(png, info);
  out.depth = png_get_bit_depth(png, info);
  const std::size_t stride = png_get_rowbytes(png, info);
  out.bytes.resize(stride * static_cast<std::size_t>(out.height));
  rows.resize(static_cast<std::size_t>(out.height));
  for (int y = 0; y < out.height; ++y) rows[static_cast<std::size_t>(y)] = out.bytes.data() + stride * static_cast<std::size_t>(y);
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

bool encode_raw_png(const RawImage& img, std::string& out) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  const std::size_t stride =
      static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.channels) * (img.depth / 8);
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y) {
    rows[static_cast<std::size_t>(y)] = const_cast<png_bytep>(img.bytes.data()) + stride * static_cast<std::size_t>(y);
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_set_write_fn(png, &out, append_to_string, flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), img.depth,
               img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

std::string lower_extension(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

// Netpbm header token, skipping whitespace and '#' comments.
std::string pnm_token(const std::string& s, std::size_t& pos) {
  while (pos < s.size()) {
    if (s[pos] == '#') {
      while (pos < s.size() && s[pos] != '\n') ++pos;
    } else if (std::isspace(static_cast<unsigned char>(s[pos]))) {
      ++pos;
    } else {
      break;
    }
  }
  std::size_t start = pos;
  while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos])) && s[pos] != '#') ++pos;
  return s.substr(start, pos - start);
}

int pnm_int(const std::string& s, std::size_t& pos, const std::string& what) {
  const std::string tok = pnm_token(s, pos);
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::kParse, "bad netpbm " + what + ": '" + tok + "'");
  }
}

ImageBuffer decode_pnm(const std::string& s, const std::filesystem::path& path) {
  std::size_t pos = 0;
  const std::string magic = pnm_token(s, pos);
  const bool ascii = magic == "P2" || magic == "P3";
  const int channels = (magic == "P3" || magic == "P6") ? 3 : 1;
  if (magic != "P2" && magic != "P3" && magic != "P5" && magic != "P6") {
    fail(ErrorCode::kParse, path.string() + ": unsupported netpbm type '" + magic + "'");
  }
  const int w = pnm_int(s, pos, "width");
  const int h = pnm_int(s, pos, "height");
  const int maxval = pnm_int(s, pos, "maxval");
  if (w <= 0 || h <= 0 || maxval <= 0 || maxval > 65535) fail(ErrorCode::kParse, path.string() + ": bad netpbm header");
  ImageBuffer img(w, h, channels);
  const std::size_t count = static_cast<std::size_t>(w) * h * channels;
  if (ascii) {
    for (std::size_t i = 0; i < count; ++i) img.data()[i] = static_cast<double>(pnm_int(s, pos, "sample")) / maxval;
    return img;
  }
  ++pos;  // single whitespace after maxval
  const std::size_t bps = maxval > 255 ? 2 : 1;
  if (s.size() < pos + count * bps) fail(ErrorCode::kParse, path.string() + ": truncated netpbm data");
  const auto* p = reinterpret_cast<const unsigned char*>(s.data()) + pos;
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned v = bps == 2 ? (static_cast<unsigned>(p[2 * i]) << 8) | p[2 * i + 1] : p[i];
    img.data()[i] = static_cast<double>(v) / maxval;
  }
  return img;
}

std::string encode_pnm(const ImageBuffer& img) {
  std::ostringstream os;
  os << (img.channels() == 3 ? "P6" : "P5") << '\n' << img.width() << ' ' << img.height() << "\n255\n";
  std::string out = os.str();
  out.reserve(out.size() + img.data().size());
  for (double v : img.data()) out.push_back(static_cast<char>(to_byte(v)));
  return out;
}

}  // namespace

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

ImageBuffer read_image(const std::filesystem::path& path) {
  const std::string file = read_text_file(path);
  const std::string ext = lower_extension(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return decode_pnm(file, path);

  RawImage raw;
  std::string error;
  if (!decode_png(file, raw, error)) fail(ErrorCode::kParse, path.string() + ": " + error);
  if (raw.channels != 1 && raw.channels != 3) fail(ErrorCode::kParse, path.string() + ": unsupported channel layout");
  ImageBuffer img(raw.width, raw.height, raw.channels);
  const std::size_t n = img.data().size();
  if (raw.depth == 16) {
    for (std::size_t i = 0; i < n; ++i) {
      img.data()[i] = static_cast<double>((raw.bytes[2 * i] << 8) | raw.bytes[2 * i + 1]) / 65535.0;
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) img.data()[i] = raw.bytes[i] / 255.0;
  }
  return img;
}

std::string encode_png(const ImageBuffer& img) {
  RawImage raw{img.width(), img.height(), img.channels(), 8, {}};
  raw.bytes.resize(img.data().size());
  std::transform(img.data().begin(), img.data().end(), raw.bytes.begin(), to_byte);
  std::string out;
  if (!encode_raw_png(raw, out)) fail(ErrorCode::kIo, "PNG encoding failed");
  return out;
}

void write_image(const std::filesystem::path& path, const ImageBuffer& img) {
  if (img.empty()) fail(ErrorCode::kInvalidArgument, "refusing to write an empty image");
  const std::string ext = lower_extension(path);
  if (ext == ".png") {
    write_file_atomic(path, encode_png(img));
  } else if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") {
    if ((ext == ".pgm" && img.channels() != 1) || (ext == ".ppm" && img.channels() != 3)) {
      fail(ErrorCode::kInvalidArgument, path.string() + ": channel count does not match extension");
    }
    write_file_atomic(path, encode_pnm(img));
  } else {
    fail(ErrorCode::kInvalidArgument, path.string() + ": unknown image extension");
  }
}

Image16 read_png16(const std::filesystem::path& path) {
  RawImage raw;
  std::string error;
  if (!decode_png(read_text_file(path), raw, error)) fail(ErrorCode::kParse, path.string() + ": " + error);
  if (raw.channels != 1) fail(ErrorCode::kParse, path.string() + ": expected a single-channel PNG");
  Image16 out{raw.width, raw.height, std::vector<std::uint16_t>(static_cast<std::size_t>(raw.width) * raw.height)};
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    out.data[i] = raw.depth == 16 ? static_cast<std::uint16_t>((raw.bytes[2 * i] << 8) | raw.bytes[2 * i + 1])
                                  : raw.bytes[i];
  }
  return out;
}

void write_png16(const std::filesystem::path& path, const Image16& img) {
  if (img.width <= 0 || img.height <= 0 || img.data.size() != static_cast<std::size_t>(img.width) * img.height) {
    fail(ErrorCode::kInvalidArgument, "inconsistent 16-bit image");
  }
  RawImage raw{img.width, img.height, 1, 16, std::vector<std::uint8_t>(img.data.size() * 2)};
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    raw.bytes[2 * i] = static_cast<std::uint8_t>(img.data[i] >> 8);
    raw.bytes[2 * i + 1] = static_cast<std::uint8_t>(img.data[i] & 0xff);
  }
  std::string out;
  if (!encode_raw_png(raw, out)) fail(ErrorCode::kIo, "PNG encoding failed");
  write_file_atomic(path, out);
}

}  // namespace scopekit
