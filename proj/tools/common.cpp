#include "common.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "scopekit/calibration_io.hpp"
#include "scopekit/error.hpp"
#include "scopekit/image_io.hpp"
#include "scopekit/io_util.hpp"

namespace scopekit::cli {

namespace {

void dump(const Json& j, std::string& out, int indent) {
  const std::string pad(static_cast<std::size_t>(indent + 2), ' ');
  const std::string close(static_cast<std::size_t>(indent), ' ');
  switch (j.type()) {
    case Json::value_t::number_float: {
      const double v = j.get<double>();
      if (!std::isfinite(v)) {
        out += "null";
      } else {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out += buf;
      }
      return;
    }
    case Json::value_t::array: {
      if (j.empty()) {
        out += "[]";
        return;
      }
      out += "[\n";
      for (std::size_t i = 0; i < j.size(); ++i) {
        out += pad;
        dump(j[i], out, indent + 2);
        out += i + 1 < j.size() ? ",\n" : "\n";
      }
      out += close + "]";
      return;
    }
    case Json::value_t::object: {
      if (j.empty()) {
        out += "{}";
        return;
      }
      out += "{\n";
      std::size_t i = 0;
      for (const auto& [key, value] : j.items()) {
        out += pad + Json(key).dump() + ": ";
        dump(value, out, indent + 2);
        out += ++i < j.size() ? ",\n" : "\n";
      }
      out += close + "}";
      return;
    }
    default:
      out += j.dump();
  }
}

void draw_line(ImageBuffer& img, double x0, double y0, double x1, double y1, const Eigen::Vector3d& c) {
  const int steps = std::max(1, static_cast<int>(std::ceil(std::max(std::abs(x1 - x0), std::abs(y1 - y0)))));
  for (int s = 0; s <= steps; ++s) {
    const double t = static_cast<double>(s) / steps;
    const int x = static_cast<int>(std::lround(x0 + t * (x1 - x0)));
    const int y = static_cast<int>(std::lround(y0 + t * (y1 - y0)));
    if (!img.contains(x, y)) continue;
    for (int k = 0; k < 3; ++k) img.at(x, y, k) = c[k];
  }
}

}  // namespace

std::string dump_json(const Json& j) {
  std::string out;
  dump(j, out, 0);
  out += '\n';
  return out;
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

void add_output_options(CLI::App& cmd, Outputs& o, bool with_plot) {
  cmd.add_option("--json", o.json, "Write the machine-readable report here");
  cmd.add_option("--summary", o.summary, "Also write the text summary here");
  if (with_plot) cmd.add_option("--plot", o.plot, "Write a PNG plot here");
}

void check_outputs(const Outputs& o) {
  if (!o.json.empty()) require_writable(o.json, "--json");
  if (!o.summary.empty()) require_writable(o.summary, "--summary");
  if (!o.plot.empty()) require_writable(o.plot, "--plot");
}

void finish(Context& ctx, const Outputs& o, const Json& report, const std::string& summary) {
  if (!o.json.empty()) write_file_atomic(o.json, dump_json(report));
  if (!o.summary.empty()) write_file_atomic(o.summary, summary);
  ctx.out << summary;
}

Json stats_json(const MetricStats& s) {
  Json j;
  j["rmse"] = s.rmse;
  j["mean"] = s.mean;
  j["std"] = s.std;
  j["min"] = s.min;
  j["max"] = s.max;
  j["median"] = s.median;
  j["count"] = s.count;
  return j;
}

Json pose_json(const Pose& p) {
  Json j;
  j["translation"] = {p.translation().x(), p.translation().y(), p.translation().z()};
  const Eigen::Vector4d q = p.xyzw();
  j["quaternion_xyzw"] = {q[0], q[1], q[2], q[3]};
  return j;
}

Json matrix_json(const Eigen::MatrixXd& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

void require_file(const fs::path& p, const std::string& what) {
  if (!fs::is_regular_file(p)) fail(ErrorCode::kIo, what + ": no such file '" + p.string() + "'");
}

void require_dir(const fs::path& p, const std::string& what) {
  if (!fs::is_directory(p)) fail(ErrorCode::kIo, what + ": no such directory '" + p.string() + "'");
}

void require_writable(const fs::path& p, const std::string& what) {
  const fs::path parent = p.has_parent_path() ? p.parent_path() : fs::path(".");
  if (!fs::is_directory(parent)) fail(ErrorCode::kIo, what + ": directory '" + parent.string() + "' does not exist");
  if (fs::is_directory(p)) fail(ErrorCode::kIo, what + ": '" + p.string() + "' is a directory");
}

std::vector<fs::path> list_images(const fs::path& dir) {
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (!e.is_regular_file()) continue;
    std::string ext = e.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    if (ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm") out.push_back(e.path());
  }
  std::sort(out.begin(), out.end(), [](const fs::path& a, const fs::path& b) { return a.filename() < b.filename(); });
  return out;
}

CameraIntrinsics resolve_camera(const std::string& preset, const fs::path& file) {
  if (preset.empty() == file.empty()) fail(ErrorCode::kInvalidArgument, "give exactly one of --camera or --intrinsics");
  if (!preset.empty()) return camera_preset(preset);
  require_file(file, "--intrinsics");
  return load_intrinsics(file);
}

Pose pose_from_values(const std::vector<double>& v) {
  if (v.empty()) return Pose::identity();
  if (v.size() != 7) fail(ErrorCode::kInvalidArgument, "a pose needs 7 values: tx ty tz qx qy qz qw");
  return Pose::from_xyzw(v[3], v[4], v[5], v[6], {v[0], v[1], v[2]});
}

std::vector<double> read_signal(const fs::path& path) {
  const std::string text = read_text_file(path);
  std::vector<double> values;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    const auto end = line.find_first_of(", \t\r", start);
    const std::string field = line.substr(start, end == std::string::npos ? std::string::npos : end - start);
    try {
      std::size_t used = 0;
      values.push_back(std::stod(field, &used));
      if (used != field.size()) throw std::invalid_argument(field);
    } catch (const std::exception&) {
      if (values.empty() && line_no == 1) continue;  // header
      fail(ErrorCode::kParse, path.string() + ":" + std::to_string(line_no) + ": not a number");
    }
  }
  return values;
}

ImageBuffer line_plot(const std::vector<Series>& series, int width, int height) {
  ImageBuffer img(width, height, 3, 1.0);
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  for (const Series& s : series) {
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      x0 = std::min(x0, s.x[i]);
      x1 = std::max(x1, s.x[i]);
      y0 = std::min(y0, s.y[i]);
      y1 = std::max(y1, s.y[i]);
    }
  }
  if (!(x1 >= x0)) return img;
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 == y0) y1 = y0 + 1.0;
  const int margin = 20;
  const double sx = (width - 2 * margin - 1) / (x1 - x0);
  const double sy = (height - 2 * margin - 1) / (y1 - y0);
  const Eigen::Vector3d grey(0.6, 0.6, 0.6);
  draw_line(img, margin, height - margin - 1, width - margin - 1, height - margin - 1, grey);
  draw_line(img, margin, margin, margin, height - margin - 1, grey);
  for (const Series& s : series) {
    for (std::size_t i = 1; i < s.x.size(); ++i) {
      draw_line(img, margin + (s.x[i - 1] - x0) * sx, height - margin - 1 - (s.y[i - 1] - y0) * sy,
                margin + (s.x[i] - x0) * sx, height - margin - 1 - (s.y[i] - y0) * sy, s.color);
    }
  }
  return img;
}

}  // namespace scopekit::cli
