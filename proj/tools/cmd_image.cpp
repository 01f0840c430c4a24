#include <memory>

#include "common.hpp"
#include "scopekit/augmentation.hpp"
#include "scopekit/depth_io.hpp"
#include "scopekit/calibration_io.hpp"
#include "scopekit/error.hpp"
#include "scopekit/image_io.hpp"
#include "scopekit/io_util.hpp"
#include "scopekit/pose_align.hpp"
#include "scopekit/warp_loss.hpp"

namespace scopekit::cli {

namespace {

struct PairInputs {
  std::string ref, src, depth_ref, depth_src, camera, intrinsics;
  std::vector<double> pose;
  LossWeights weights;
  bool no_brightness = false;
};

void add_pair_options(CLI::App& cmd, PairInputs& p, const std::string& pose_flag, const std::string& pose_help) {
  cmd.add_option("--ref", p.ref, "Reference image")->required();
  cmd.add_option("--src", p.src, "Source image")->required();
  cmd.add_option("--depth-ref", p.depth_ref, "Reference depth (16-bit PNG or raw depth file)")->required();
  cmd.add_option("--camera", p.camera, "Camera preset (MiroCam, PillCam, HighCam, LowCam)");
  cmd.add_option("--intrinsics", p.intrinsics, "Intrinsics key-value file");
  cmd.add_option(pose_flag, p.pose, pose_help)->expected(7);
  cmd.add_option("--alpha", p.weights.alpha, "Photometric weight")->capture_default_str();
  cmd.add_option("--beta", p.weights.beta, "Smoothness weight")->capture_default_str();
  cmd.add_option("--gamma", p.weights.gamma, "Geometric consistency weight")->capture_default_str();
  cmd.add_option("--lambda-p", p.weights.lambda_p, "L2 share of the photometric term")->capture_default_str();
  cmd.add_option("--lambda-s", p.weights.lambda_s, "SSIM share of the photometric term")->capture_default_str();
  cmd.add_flag("--no-brightness", p.no_brightness, "Disable affine brightness alignment");
}

struct LoadedPair {
  ImageBuffer ref, src;
  DepthMap depth_ref;
  std::optional<DepthMap> depth_src;
  CameraIntrinsics K;
};

void check_pair(const PairInputs& p) {
  require_file(p.ref, "--ref");
  require_file(p.src, "--src");
  require_file(p.depth_ref, "--depth-ref");
  if (!p.depth_src.empty()) require_file(p.depth_src, "--depth-src");
  if (!p.intrinsics.empty()) require_file(p.intrinsics, "--intrinsics");
  p.weights.validate();
}

LoadedPair load_pair(const PairInputs& p) {
  LoadedPair l{read_image(p.ref), read_image(p.src), read_depth(p.depth_ref), std::nullopt,
               resolve_camera(p.camera, p.intrinsics)};
  if (!p.depth_src.empty()) l.depth_src = read_depth(p.depth_src);
  if (l.ref.width() != l.K.width || l.ref.height() != l.K.height) {
    fail(ErrorCode::kDimensionMismatch, "image size " + std::to_string(l.ref.width()) + "x" +
                                            std::to_string(l.ref.height()) + " does not match the camera (" +
                                            std::to_string(l.K.width) + "x" + std::to_string(l.K.height) + ")");
  }
  return l;
}

Json loss_json(const LossReport& r) {
  Json j;
  j["total"] = r.total;
  j["photometric"] = r.photometric;
  j["photometric_l2"] = r.photometric_l2;
  j["photometric_ssim"] = r.photometric_ssim;
  j["smoothness"] = r.smoothness;
  j["geometry"] = r.geometry;
  j["brightness"] = {{"a", r.brightness.a}, {"c", r.brightness.c}, {"degenerate", r.brightness.degenerate}};
  j["valid_pixels"] = r.valid_count;
  return j;
}

Json weights_json(const LossWeights& w) {
  return {{"alpha", w.alpha}, {"beta", w.beta}, {"gamma", w.gamma}, {"lambda_p", w.lambda_p}, {"lambda_s", w.lambda_s}};
}

std::string loss_line(const LossReport& r) {
  return "total " + format_double(r.total) + "  photometric " + format_double(r.photometric) + "  smoothness " +
         format_double(r.smoothness) + "  geometry " + format_double(r.geometry) + "  brightness a=" +
         format_double(r.brightness.a) + " c=" + format_double(r.brightness.c) + "\n";
}

std::optional<fs::path> find_depth(const fs::path& dir, const fs::path& frame) {
  for (const char* ext : {".png", ".depth"}) {
    fs::path p = dir / frame.stem();
    p += ext;
    if (fs::is_regular_file(p)) return p;
  }
  return std::nullopt;
}

}  // namespace

void register_augment(CLI::App& app, Action& action) {
  struct Opts {
    std::string input, output, spec, depth;
    Outputs out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("augment", "Apply an augmentation spec to a directory of frames");
  cmd->add_option("--input", o->input, "Input frame directory")->required();
  cmd->add_option("--output", o->output, "Output directory (created if missing)")->required();
  cmd->add_option("--spec", o->spec, "Augmentation spec file")->required();
  cmd->add_option("--depth", o->depth, "Depth directory (same file stems), needed by dof");
  add_output_options(*cmd, o->out, false);
  cmd->callback([o, &action] {
    action = [o](Context& ctx) {
      require_dir(o->input, "--input");
      require_file(o->spec, "--spec");
      if (!o->depth.empty()) require_dir(o->depth, "--depth");
      const fs::path out_dir(o->output);
      if (!fs::is_directory(out_dir)) {
        require_writable(out_dir, "--output");
        fs::create_directory(out_dir);
      }
      if (fs::equivalent(out_dir, fs::path(o->input))) fail(ErrorCode::kInvalidArgument, "--output equals --input");
      check_outputs(o->out);
      const AugmentSpec spec = parse_augment_spec(read_text_file(o->spec));
      if (spec.needs_depth() && o->depth.empty()) fail(ErrorCode::kInvalidArgument, "the spec needs --depth");
      const std::vector<fs::path> frames = list_images(o->input);
      if (frames.empty()) fail(ErrorCode::kIo, "--input holds no images");
      std::vector<std::optional<fs::path>> depths(frames.size());
      if (spec.needs_depth()) {
        for (std::size_t i = 0; i < frames.size(); ++i) {
          depths[i] = find_depth(o->depth, frames[i]);
          if (!depths[i]) fail(ErrorCode::kIo, "no depth for " + frames[i].filename().string());
        }
      }

      Json written = Json::array();
      const std::vector<std::size_t> keep = subsample_indices(frames.size(), spec.subsample_factor());
      for (std::size_t i : keep) {
        const ImageBuffer img = read_image(frames[i]);
        std::optional<DepthMap> depth;
        if (depths[i]) depth = read_depth(*depths[i]);
        const ImageBuffer result = apply_augment_spec(img, spec, depth ? &*depth : nullptr);
        const fs::path target = out_dir / frames[i].filename();
        write_image(target, result);
        written.push_back(frames[i].filename().string());
      }

      Json j;
      j["schema"] = 1;
      j["command"] = "augment";
      j["input"] = o->input;
      j["output"] = o->output;
      j["spec"] = o->spec;
      Json steps = Json::array();
      for (const AugmentStep& s : spec.steps) {
        Json step;
        step["op"] = s.op;
        for (const auto& [k, v] : s.params) step[k] = v;
        steps.push_back(step);
      }
      j["steps"] = steps;
      j["input_frames"] = frames.size();
      j["frames"] = written;
      std::ostringstream s;
      s << "wrote " << keep.size() << " of " << frames.size() << " frames to " << o->output << '\n';
      finish(ctx, o->out, j, s.str());
    };
  });
}

void register_loss(CLI::App& app, Action& action) {
  struct Opts {
    PairInputs pair;
    Outputs out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("loss", "Evaluate the view-synthesis objective for one frame pair");
  add_pair_options(*cmd, o->pair, "--pose", "Reference-to-source pose: tx ty tz qx qy qz qw (metres)");
  cmd->add_option("--depth-src", o->pair.depth_src, "Source depth; enables the geometric consistency term");
  add_output_options(*cmd, o->out, false);
  cmd->callback([o, &action] {
    action = [o](Context& ctx) {
      check_pair(o->pair);
      check_outputs(o->out);
      const Pose pose = pose_from_values(o->pair.pose);
      const LoadedPair l = load_pair(o->pair);
      LossInputs in{&l.ref, &l.src, &l.depth_ref, l.depth_src ? &*l.depth_src : nullptr, pose, l.K, nullptr, std::nullopt};
      const LossReport r = total_loss(in, o->pair.weights, !o->pair.no_brightness);
      Json j;
      j["schema"] = 1;
      j["command"] = "loss";
      j["pose"] = pose_json(pose);
      j["weights"] = weights_json(o->pair.weights);
      j["brightness_alignment"] = !o->pair.no_brightness;
      j["loss"] = loss_json(r);
      finish(ctx, o->out, j, loss_line(r));
    };
  });
}

void register_align(CLI::App& app, Action& action) {
  struct Opts {
    PairInputs pair;
    AlignOptions align;
    Outputs out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("align", "Refine the relative pose of a frame pair by direct alignment");
  add_pair_options(*cmd, o->pair, "--init", "Initial reference-to-source pose: tx ty tz qx qy qz qw (metres)");
  cmd->add_option("--max-iters", o->align.max_iters, "Iterations per pyramid level")->capture_default_str();
  cmd->add_option("--levels", o->align.pyramid_levels, "Pyramid levels")->capture_default_str();
  add_output_options(*cmd, o->out, true);
  cmd->callback([o, &action] {
    action = [o](Context& ctx) {
      check_pair(o->pair);
      o->align.brightness_alignment = !o->pair.no_brightness;
      o->align.validate();
      check_outputs(o->out);
      const Pose init = pose_from_values(o->pair.pose);
      const LoadedPair l = load_pair(o->pair);
      const AlignResult r = refine_pose(l.ref, l.src, l.depth_ref, l.K, init, o->pair.weights, o->align);

      Json trace = Json::array();
      for (const AlignStep& s : r.trace) {
        trace.push_back({{"level", s.level}, {"iteration", s.iteration}, {"loss", s.report.total}});
      }
      Json j;
      j["schema"] = 1;
      j["command"] = "align";
      j["init"] = pose_json(init);
      j["pose"] = pose_json(r.pose);
      j["initial_loss"] = r.initial_loss;
      j["final_loss"] = r.final_loss;
      j["converged"] = r.converged;
      j["no_descent"] = r.no_descent;
      j["weights"] = weights_json(o->pair.weights);
      j["brightness_alignment"] = o->align.brightness_alignment;
      j["final"] = loss_json(r.final_report);
      j["trace"] = trace;

      const Eigen::Vector3d t = r.pose.translation();
      std::ostringstream s;
      s << "loss " << format_double(r.initial_loss) << " -> " << format_double(r.final_loss) << " in "
        << r.trace.size() << " steps" << (r.no_descent ? " (no descent)" : "") << '\n';
      s << "translation " << format_double(t.x()) << ' ' << format_double(t.y()) << ' ' << format_double(t.z())
        << " m  rotation " << format_double(rotation_angle(r.pose) * 180.0 / M_PI) << " deg\n";
      if (!o->out.plot.empty()) {
        Series loss{{}, {}, {0.1, 0.3, 0.9}};
        for (std::size_t i = 0; i < r.trace.size(); ++i) {
          loss.x.push_back(static_cast<double>(i));
          loss.y.push_back(r.trace[i].report.total);
        }
        write_image(o->out.plot, line_plot({loss}));
      }
      finish(ctx, o->out, j, s.str());
    };
  });
}

}  // namespace scopekit::cli
