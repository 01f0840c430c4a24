#include <array>
#include <charconv>
#include <sstream>

#include "scopekit/calibration_io.hpp"
#include "scopekit/error.hpp"
#include "scopekit/io_util.hpp"
#include "scopekit/traj_metrics.hpp"

namespace scopekit {
namespace {

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ',' || line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ',' && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

bool to_double(std::string_view s, double& v) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size();
}

}  // namespace

Trajectory parse_trajectory_csv(std::string_view text, int decimate) {
  if (decimate < 1) fail(ErrorCode::kInvalidArgument, "decimation factor must be at least 1");
  Trajectory traj;
  std::size_t line_no = 0;
  std::size_t row = 0;
  bool first_content = true;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto fields = split_fields(line);
    if (fields.empty() || fields.front().front() == '#') continue;
    std::array<double, 8> v{};
    bool numeric = fields.size() == 8;
    for (std::size_t k = 0; numeric && k < 8; ++k) numeric = to_double(fields[k], v[k]);
    if (!numeric) {
      if (first_content) {
        first_content = false;
        continue;
      }
      fail(ErrorCode::kParse, "trajectory line " + std::to_string(line_no) +
                                  ": expected timestamp,tx,ty,tz,qx,qy,qz,qw");
    }
    first_content = false;
    if (row++ % static_cast<std::size_t>(decimate) != 0) continue;
    const Eigen::Vector4d q(v[4], v[5], v[6], v[7]);
    if (!(q.norm() > 1e-12)) fail(ErrorCode::kParse, "trajectory line " + std::to_string(line_no) + ": zero quaternion");
    try {
      traj.push_back(v[0], Pose::from_xyzw(v[4], v[5], v[6], v[7], {v[1], v[2], v[3]}));
    } catch (const Error& e) {
      fail(ErrorCode::kParse, "trajectory line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return traj;
}

Trajectory read_trajectory_csv(const std::filesystem::path& path, int decimate) {
  try {
    return parse_trajectory_csv(read_text_file(path), decimate);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kParse) fail(ErrorCode::kParse, path.string() + ": " + e.what());
    throw;
  }
}

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj) {
  std::ostringstream out;
  out.precision(17);
  out << "timestamp,tx,ty,tz,qx,qy,qz,qw\n";
  for (const TimedPose& s : traj.samples()) {
    const Eigen::Vector3d& t = s.pose.translation();
    const Eigen::Vector4d q = s.pose.xyzw();
    out << s.timestamp << ',' << t.x() << ',' << t.y() << ',' << t.z() << ',' << q[0] << ',' << q[1] << ',' << q[2]
        << ',' << q[3] << '\n';
  }
  write_file_atomic(path, out.str());
}

}  // namespace scopekit
