#pragma once

#include <CLI11.hpp>
#include <json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "scopekit/geometry.hpp"
#include "scopekit/imaging.hpp"
#include "scopekit/traj_metrics.hpp"

namespace scopekit::cli {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

/// Artifacts shared by every subcommand.
struct Outputs {
  fs::path json;
  fs::path summary;
  fs::path plot;
};

struct Context {
  std::ostream& out;
};

using Action = std::function<void(Context&)>;

void add_output_options(CLI::App& cmd, Outputs& o, bool with_plot);

/// Validates output locations before any work is done.
void check_outputs(const Outputs& o);

/// Writes the JSON report and the summary file (when requested) and prints the summary.
void finish(Context& ctx, const Outputs& o, const Json& report, const std::string& summary);

/// Pretty-printed JSON with doubles as %.17g and non-finite values as null.
std::string dump_json(const Json& j);

Json stats_json(const MetricStats& s);
Json pose_json(const Pose& p);
Json matrix_json(const Eigen::MatrixXd& m);

void require_file(const fs::path& p, const std::string& what);
void require_dir(const fs::path& p, const std::string& what);
/// The parent directory must exist.
void require_writable(const fs::path& p, const std::string& what);

/// Image files (png, pgm, ppm, pnm) in a directory, sorted by file name.
std::vector<fs::path> list_images(const fs::path& dir);

/// Exactly one of preset or file.
CameraIntrinsics resolve_camera(const std::string& preset, const fs::path& file);

/// "tx ty tz qx qy qz qw"; identity when empty.
Pose pose_from_values(const std::vector<double>& v);

/// One number per line (first column when separated by commas or spaces); '#' comments.
std::vector<double> read_signal(const fs::path& path);

struct Series {
  std::vector<double> x;
  std::vector<double> y;
  Eigen::Vector3d color;
};

/// Line chart of all series on shared, padded axes.
ImageBuffer line_plot(const std::vector<Series>& series, int width = 640, int height = 400);

std::string format_double(double v);

void register_eval_traj(CLI::App& app, Action& action);
void register_sync(CLI::App& app, Action& action);
void register_report(CLI::App& app, Action& action);
void register_augment(CLI::App& app, Action& action);
void register_loss(CLI::App& app, Action& action);
void register_align(CLI::App& app, Action& action);
void register_stitch(CLI::App& app, Action& action);
void register_sfs(CLI::App& app, Action& action);
void register_icp(CLI::App& app, Action& action);

}  // namespace scopekit::cli
