#include <memory>

#include "common.hpp"
#include "scopekit/depth_io.hpp"
#include "scopekit/calibration_io.hpp"
#include "scopekit/error.hpp"
#include "scopekit/heatmap.hpp"
#include "scopekit/icp.hpp"
#include "scopekit/image_io.hpp"
#include "scopekit/io_util.hpp"
#include "scopekit/ply.hpp"
#include "scopekit/shape_from_shading.hpp"
#include "scopekit/specular.hpp"
#include "scopekit/stitch.hpp"

namespace scopekit::cli {

namespace {

fs::path numbered(const fs::path& p, std::size_t index) {
  if (index == 0) return p;
  fs::path out = p.parent_path() / p.stem();
  out += "_" + std::to_string(index);
  out += p.extension();
  return out;
}

struct LabeledPair {
  std::string label;
  Eigen::Vector3d source;
  Eigen::Vector3d target;
};

std::vector<LabeledPair> read_init_pairs(const fs::path& path) {
  std::istringstream in(read_text_file(path));
  std::vector<LabeledPair> pairs;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    std::istringstream fields(line);
    LabeledPair p;
    std::string extra;
    if (!(fields >> p.label >> p.source.x() >> p.source.y() >> p.source.z() >> p.target.x() >> p.target.y() >>
          p.target.z()) ||
        (fields >> extra)) {
      fail(ErrorCode::kParse,
           path.string() + ":" + std::to_string(line_no) + ": expected 'label sx sy sz tx ty tz'");
    }
    pairs.push_back(p);
  }
  if (pairs.size() < 2) fail(ErrorCode::kTooFewPoints, path.string() + ": need at least two point pairs");
  return pairs;
}

}  // namespace

void register_stitch(CLI::App& app, Action& action) {
  struct Opts {
    std::vector<std::string> inputs;
    std::string dir, output, detector = "dog";
    double ratio = kLoweRatio, threshold = 3.0;
    std::size_t min_inliers = 12, candidates = 6, max_features = 2000;
    std::uint64_t seed = 0;
    bool no_refine = false, specular = false;
    Outputs out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("stitch", "Stitch overlapping frames into panoramas");
  auto* in = cmd->add_option_group("inputs", "Frames");
  in->add_option("frames", o->inputs, "Frame files");
  in->add_option("--input", o->dir, "Directory of frames");
  in->require_option(1);
  cmd->add_option("-o,--output", o->output, "Panorama PNG; further components get _1, _2, ... suffixes")
      ->required();
  cmd->add_option("--detector", o->detector, "Feature detector")
      ->check(CLI::IsMember({"dog", "harris"}))
      ->capture_default_str();
  cmd->add_option("--max-features", o->max_features, "Features kept per frame")->capture_default_str();
  cmd->add_option("--ratio", o->ratio, "Nearest-neighbour ratio test")->capture_default_str();
  cmd->add_option("--threshold", o->threshold, "RANSAC inlier threshold in pixels")->capture_default_str();
  cmd->add_option("--min-inliers", o->min_inliers, "Inliers needed to accept a pair")->capture_default_str();
  cmd->add_option("--candidates", o->candidates, "Candidate partners per frame")->capture_default_str();
  cmd->add_option("--seed", o->seed, "RANSAC seed")->capture_default_str();
  cmd->add_flag("--no-refine", o->no_refine, "Skip joint homography refinement");
  cmd->add_flag("--remove-specular", o->specular, "Inpaint specular highlights before matching");
  add_output_options(*cmd, o->out, false);
  cmd->callback([o, &action] {
    action = [o](Context& ctx) {
      std::vector<fs::path> paths;
      if (!o->dir.empty()) {
        require_dir(o->dir, "--input");
        paths = list_images(o->dir);
      } else {
        for (const std::string& p : o->inputs) paths.emplace_back(p);
      }
      for (const fs::path& p : paths) require_file(p, "frame");
      if (paths.size() < 2) fail(ErrorCode::kInvalidArgument, "stitching needs at least two frames");
      if (o->ratio <= 0.0 || o->ratio > 1.0) fail(ErrorCode::kBadRatio, "--ratio must lie in (0, 1]");
      require_writable(o->output, "--output");
      check_outputs(o->out);

      std::vector<ImageBuffer> frames;
      for (const fs::path& p : paths) {
        ImageBuffer img = read_image(p);
        if (o->specular) img = suppress_specular(img).image;
        frames.push_back(std::move(img));
      }
      StitchOptions so;
      so.detector.detector = o->detector == "harris" ? Detector::kHarris : Detector::kDoG;
      so.detector.max_features = o->max_features;
      so.ratio = o->ratio;
      so.ransac.threshold = o->threshold;
      so.ransac.seed = o->seed;
      so.min_inliers = o->min_inliers;
      so.candidates = o->candidates;
      so.refine = !o->no_refine;
      const StitchResult r = stitch(frames, so);

      Json panos = Json::array();
      for (std::size_t k = 0; k < r.panoramas.size(); ++k) {
        const Panorama& p = r.panoramas[k];
        const fs::path target = numbered(o->output, k);
        write_image(target, p.image);
        Json frames_json = Json::array();
        for (std::size_t i = 0; i < p.frames.size(); ++i) {
          frames_json.push_back({{"file", paths[p.frames[i]].string()}, {"to_canvas", matrix_json(p.frame_to_canvas[i].H)}});
        }
        panos.push_back({{"file", target.string()},
                         {"width", p.image.width()},
                         {"height", p.image.height()},
                         {"coverage", count_set(p.coverage)},
                         {"frames", frames_json}});
      }
      Json edges = Json::array();
      for (const PairEdge& e : r.edges) {
        edges.push_back({{"a", e.a}, {"b", e.b}, {"matches", e.matches}, {"inliers", e.inliers}});
      }
      Json j;
      j["schema"] = 1;
      j["command"] = "stitch";
      j["seed"] = o->seed;
      j["detector"] = o->detector;
      j["frames"] = paths.size();
      j["disconnected"] = r.disconnected();
      j["edges"] = edges;
      j["panoramas"] = panos;

      std::ostringstream s;
      s << "stitched " << paths.size() << " frames into " << r.panoramas.size() << " panorama"
        << (r.panoramas.size() == 1 ? "" : "s") << " using " << r.edges.size() << " verified pairs\n";
      for (std::size_t k = 0; k < r.panoramas.size(); ++k) {
        s << "  " << numbered(o->output, k).string() << "  " << r.panoramas[k].image.width() << "x"
          << r.panoramas[k].image.height() << "  " << r.panoramas[k].frames.size() << " frames\n";
      }
      finish(ctx, o->out, j, s.str());
    };
  });
}

void register_sfs(CLI::App& app, Action& action) {
  struct Opts {
    std::string input, output, ply;
    std::vector<double> light{0.0, 0.0, 1.0};
    int iterations = 200;
    double pixel_size = 1.0;
    bool specular = false;
    Outputs out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("sfs", "Relative depth from a single frame by shape from shading");
  cmd->add_option("--input", o->input, "Input image")->required();
  cmd->add_option("-o,--output", o->output, "Depth output (.png 16-bit or raw .depth)")->required();
  cmd->add_option("--light", o->light, "Unit light direction")->expected(3)->capture_default_str();
  cmd->add_option("--iterations", o->iterations, "Maximum sweeps")->capture_default_str();
  cmd->add_flag("--remove-specular", o->specular, "Inpaint specular highlights first");
  cmd->add_option("--ply", o->ply, "Also write the surface as a point cloud");
  cmd->add_option("--pixel-size", o->pixel_size, "Millimetres per pixel for --ply")->capture_default_str();
  add_output_options(*cmd, o->out, true);
  cmd->callback([o, &action] {
    action = [o](Context& ctx) {
      require_file(o->input, "--input");
      require_writable(o->output, "--output");
      if (!o->ply.empty()) require_writable(o->ply, "--ply");
      if (o->iterations < 1) fail(ErrorCode::kInvalidArgument, "--iterations must be positive");
      check_outputs(o->out);
      ImageBuffer img = read_image(o->input);
      std::size_t specular_pixels = 0;
      if (o->specular) {
        const SpecularResult sr = suppress_specular(img);
        specular_pixels = count_set(sr.mask);
        img = sr.image;
      }
      SfsOptions so;
      so.light = Eigen::Vector3d(o->light[0], o->light[1], o->light[2]);
      so.iterations = o->iterations;
      const DepthMap depth = tsai_shah_sfs(img.channels() == 1 ? img : to_gray(img), so);
      write_depth(o->output, depth);

      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      PointCloud cloud;
      const double cx = (depth.width() - 1) / 2.0, cy = (depth.height() - 1) / 2.0;
      for (int y = 0; y < depth.height(); ++y) {
        for (int x = 0; x < depth.width(); ++x) {
          if (!depth.is_valid(x, y)) continue;
          lo = std::min(lo, depth.depth(x, y));
          hi = std::max(hi, depth.depth(x, y));
          cloud.points.emplace_back((x - cx) * o->pixel_size, (y - cy) * o->pixel_size,
                                    depth.depth(x, y) * o->pixel_size);
        }
      }
      if (!o->ply.empty()) write_ply(o->ply, cloud);
      if (!o->out.plot.empty()) {
        ImageBuffer vis(depth.width(), depth.height(), 1);
        const double range = hi > lo ? hi - lo : 1.0;
        for (int y = 0; y < depth.height(); ++y) {
          for (int x = 0; x < depth.width(); ++x) {
            if (depth.is_valid(x, y)) vis.at(x, y) = 1.0 - (depth.depth(x, y) - lo) / range;
          }
        }
        write_image(o->out.plot, vis);
      }

      Json j;
      j["schema"] = 1;
      j["command"] = "sfs";
      j["input"] = o->input;
      j["output"] = o->output;
      j["light"] = {so.light.x(), so.light.y(), so.light.z()};
      j["specular_pixels"] = specular_pixels;
      j["valid_pixels"] = depth.valid_count();
      j["depth_min"] = lo;
      j["depth_max"] = hi;
      std::ostringstream s;
      s << "depth for " << depth.valid_count() << " of " << depth.width() * depth.height() << " pixels, range "
        << format_double(lo) << " .. " << format_double(hi) << '\n';
      finish(ctx, o->out, j, s.str());
    };
  });
}

void register_icp(CLI::App& app, Action& action) {
  struct Opts {
    std::string source, target, init_pairs, unit = "mm", aligned, heatmap;
    IcpOptions icp;
    bool cloud_only = false;
    Outputs out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("icp", "Align a reconstruction to a reference scan and report RMSE in cm");
  cmd->add_option("--source", o->source, "Reconstructed point cloud (PLY)")->required();
  cmd->add_option("--target", o->target, "Reference mesh or cloud (PLY)")->required();
  cmd->add_option("--init-pairs", o->init_pairs, "Initial correspondences, one 'label sx sy sz tx ty tz' per line");
  cmd->add_option("--unit", o->unit, "Unit for PLY files without a unit comment")
      ->check(CLI::IsMember({"mm", "cm", "m"}))
      ->capture_default_str();
  cmd->add_option("--max-iterations", o->icp.max_iterations, "Iteration cap")->capture_default_str();
  cmd->add_option("--tolerance-cm", o->icp.rmse_delta_cm, "Stop when RMSE changes less than this")
      ->capture_default_str();
  cmd->add_option("--max-increases", o->icp.max_increases, "Consecutive RMSE increases before giving up")
      ->capture_default_str();
  cmd->add_flag("--cloud-target", o->cloud_only, "Use target vertices only, ignoring faces");
  cmd->add_option("--aligned", o->aligned, "Write the aligned source cloud here");
  add_output_options(*cmd, o->out, true);
  cmd->callback([o, &action] {
    action = [o](Context& ctx) {
      require_file(o->source, "--source");
      require_file(o->target, "--target");
      if (!o->init_pairs.empty()) require_file(o->init_pairs, "--init-pairs");
      if (!o->aligned.empty()) require_writable(o->aligned, "--aligned");
      if (o->icp.max_iterations < 1 || !(o->icp.rmse_delta_cm > 0.0) || o->icp.max_increases < 1) {
        fail(ErrorCode::kInvalidArgument, "ICP limits must be positive");
      }
      check_outputs(o->out);
      const LengthUnit unit = length_unit_from_string(o->unit);
      const PlyData src = read_ply(o->source, unit);
      const PlyData dst = read_ply(o->target, unit);
      const bool mesh = !o->cloud_only && !dst.faces.empty();

      Pose init;
      if (!o->init_pairs.empty()) {
        std::vector<Eigen::Vector3d> a, b;
        for (const LabeledPair& p : read_init_pairs(o->init_pairs)) {
          a.push_back(p.source);
          b.push_back(p.target);
        }
        init = initial_alignment(a, b);
      }
      const IcpResult r = mesh ? icp(src.cloud, dst.mesh(), init, o->icp) : icp(src.cloud, dst.cloud, init, o->icp);

      const double to_cm = to_centimeters(src.cloud.unit);
      std::vector<Eigen::Vector3d> moved;
      std::vector<double> dist_cm;
      for (std::size_t i = 0; i < src.cloud.size(); ++i) {
        moved.push_back(r.transform * src.cloud.points[i]);
        dist_cm.push_back(r.distances[i] * to_cm);
      }
      if (!o->aligned.empty()) {
        PointCloud out{moved, {}, src.cloud.unit};
        write_ply(o->aligned, out);
      }
      if (!o->out.plot.empty()) write_image(o->out.plot, render_distance_heatmap(moved, dist_cm));

      Json j;
      j["schema"] = 1;
      j["command"] = "icp";
      j["source"] = {{"file", o->source}, {"points", src.cloud.size()}, {"unit", to_string(src.cloud.unit)}};
      j["target"] = {{"file", o->target},
                     {"kind", mesh ? "mesh" : "cloud"},
                     {"vertices", dst.cloud.size()},
                     {"faces", dst.faces.size()},
                     {"unit", to_string(dst.cloud.unit)}};
      j["init"] = pose_json(init);
      j["transform"] = pose_json(r.transform);
      j["rmse_cm"] = r.rmse_cm.empty() ? 0.0 : r.rmse_cm.back();
      j["rmse_series_cm"] = r.rmse_cm;
      j["iterations"] = r.rmse_cm.size();
      j["converged"] = r.converged;
      std::ostringstream s;
      s << "RMSE " << format_double(r.rmse_cm.empty() ? 0.0 : r.rmse_cm.back()) << " cm after " << r.rmse_cm.size()
        << " iterations" << (r.converged ? "" : " (iteration cap reached)") << '\n';
      finish(ctx, o->out, j, s.str());
    };
  });
}

}  // namespace scopekit::cli
