#include "scopekit/calibration_io.hpp"

#include <fstream>
#include <iomanip>
#include <sstream>

#include "scopekit/error.hpp"

namespace scopekit {
namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    const double v = std::stod(value, &used);
    if (used != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    fail(ErrorCode::kParse, "bad numeric value for '" + key + "': '" + value + "'");
  }
}

int to_int(const std::string& key, const std::string& value) {
  const double v = to_double(key, value);
  if (v != static_cast<double>(static_cast<int>(v))) fail(ErrorCode::kParse, "'" + key + "' must be an integer");
  return static_cast<int>(v);
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_key_values(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = trim(line);
    if (t.empty()) continue;
    auto sep = t.find_first_of("=:");
    std::string key;
    std::string value;
    if (sep != std::string::npos) {
      key = trim(std::string_view(t).substr(0, sep));
      value = trim(std::string_view(t).substr(sep + 1));
    } else {
      sep = t.find_first_of(" \t");
      if (sep == std::string::npos) fail(ErrorCode::kParse, "line " + std::to_string(lineno) + ": missing value");
      key = trim(std::string_view(t).substr(0, sep));
      value = trim(std::string_view(t).substr(sep + 1));
    }
    if (key.empty() || value.empty()) fail(ErrorCode::kParse, "line " + std::to_string(lineno) + ": empty key or value");
    out.emplace_back(std::move(key), std::move(value));
  }
  return out;
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::kIo, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

CameraIntrinsics parse_intrinsics(std::string_view text) {
  CameraIntrinsics K;
  K.width = 0;
  K.height = 0;
  for (const auto& [key, value] : parse_key_values(text)) {
    if (key == "preset") K = camera_preset(value);
    else if (key == "model") K.model = camera_model_from_string(value);
    else if (key == "fx") K.fx = to_double(key, value);
    else if (key == "fy") K.fy = to_double(key, value);
    else if (key == "s" || key == "skew") K.skew = to_double(key, value);
    else if (key == "cx") K.cx = to_double(key, value);
    else if (key == "cy") K.cy = to_double(key, value);
    else if (key == "k1") K.k1 = to_double(key, value);
    else if (key == "k2") K.k2 = to_double(key, value);
    else if (key == "width") K.width = to_int(key, value);
    else if (key == "height") K.height = to_int(key, value);
    else fail(ErrorCode::kParse, "unknown calibration key '" + key + "'");
  }
  K.validate();
  return K;
}

CameraIntrinsics load_intrinsics(const std::filesystem::path& path) {
  return parse_intrinsics(read_text_file(path));
}

std::string format_intrinsics(const CameraIntrinsics& K) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "model = " << to_string(K.model) << "\n"
      << "fx = " << K.fx << "\nfy = " << K.fy << "\ns = " << K.skew << "\ncx = " << K.cx << "\ncy = " << K.cy
      << "\nk1 = " << K.k1 << "\nk2 = " << K.k2 << "\nwidth = " << K.width << "\nheight = " << K.height << "\n";
  return out.str();
}

HandEye parse_hand_eye(std::string_view text) {
  Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
  Eigen::Vector3d t = Eigen::Vector3d::Zero();
  for (const auto& [key, value] : parse_key_values(text)) {
    if (key == "preset") {
      const HandEye h = hand_eye_preset(value);
      R = h.rotation();
      t = h.translation_mm();
    } else if (key.size() == 3 && key[0] == 'r' && key[1] >= '1' && key[1] <= '3' && key[2] >= '1' && key[2] <= '3') {
      R(key[1] - '1', key[2] - '1') = to_double(key, value);
    } else if (key == "tx") {
      t.x() = to_double(key, value);
    } else if (key == "ty") {
      t.y() = to_double(key, value);
    } else if (key == "tz") {
      t.z() = to_double(key, value);
    } else {
      fail(ErrorCode::kParse, "unknown hand-eye key '" + key + "'");
    }
  }
  return {R, t};
}

HandEye load_hand_eye(const std::filesystem::path& path) { return parse_hand_eye(read_text_file(path)); }

}  // namespace scopekit
