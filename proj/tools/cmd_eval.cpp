#include <memory>

#include "common.hpp"
#include "scopekit/calibration_io.hpp"
#include "scopekit/error.hpp"
#include "scopekit/image_io.hpp"
#include "scopekit/io_util.hpp"
#include "scopekit/temporal_sync.hpp"

namespace scopekit::cli {

namespace {

const Eigen::Vector3d kBlue(0.1, 0.3, 0.9);
const Eigen::Vector3d kRed(0.9, 0.2, 0.1);

Json trajectory_report(const std::string& gt_path, const std::string& est_path, std::size_t gt_n, std::size_t est_n,
                       std::size_t matched, const AteResult& a, const RpeResult& r, int delta, bool scale) {
  Json j;
  j["schema"] = 1;
  j["command"] = "eval-traj";
  j["inputs"] = {{"ground_truth", gt_path}, {"estimate", est_path}};
  j["samples"] = {{"ground_truth", gt_n}, {"estimate", est_n}, {"matched", matched}};
  Json align;
  align["with_scale"] = scale;
  align["scale"] = a.alignment.scale;
  align["rotation"] = matrix_json(a.alignment.R);
  align["translation"] = {a.alignment.t.x(), a.alignment.t.y(), a.alignment.t.z()};
  j["alignment"] = align;
  j["ate_m"] = stats_json(a.stats);
  j["rpe"] = {{"delta", delta}, {"trans_m", stats_json(r.trans)}, {"rot_deg", stats_json(r.rot_deg)}};
  return j;
}

}  // namespace

void register_eval_traj(CLI::App& app, Action& action) {
  struct Opts {
    std::string gt, est;
    double max_dt = kDefaultMaxDt;
    int delta = 1;
    int decimate = 1;
    bool scale = false;
    Outputs out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("eval-traj", "ATE and RPE of an estimated trajectory against ground truth");
  cmd->add_option("ground_truth", o->gt, "Ground-truth pose CSV")->required();
  cmd->add_option("estimate", o->est, "Estimated pose CSV")->required();
  cmd->add_option("--max-dt", o->max_dt, "Association window in seconds")->capture_default_str();
  cmd->add_option("--delta", o->delta, "RPE frame spacing")->capture_default_str()->check(CLI::PositiveNumber);
  cmd->add_option("--decimate", o->decimate, "Keep every n-th row of both files")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--scale", o->scale, "Also estimate a scale factor in the alignment");
  add_output_options(*cmd, o->out, true);
  cmd->callback([o, &action] {
    action = [o](Context& ctx) {
      require_file(o->gt, "ground truth");
      require_file(o->est, "estimate");
      check_outputs(o->out);
      const Trajectory gt = read_trajectory_csv(o->gt, o->decimate);
      const Trajectory est = read_trajectory_csv(o->est, o->decimate);
      const auto matches = associate(gt, est, o->max_dt);
      const auto [pg, pe] = paired(gt, est, matches);
      const AteResult a = ate(pg, pe, o->scale);
      const RpeResult r = rpe(pg, pe, o->delta);

      const Json report = trajectory_report(o->gt, o->est, gt.size(), est.size(), matches.size(), a, r, o->delta,
                                            o->scale);
      std::ostringstream s;
      s << "matched " << matches.size() << " of " << gt.size() << " ground-truth poses\n";
      s << "ATE  rmse " << format_double(a.stats.rmse) << " m  mean " << format_double(a.stats.mean) << "  median "
        << format_double(a.stats.median) << "  max " << format_double(a.stats.max) << '\n';
      s << "RPE  trans rmse " << format_double(r.trans.rmse) << " m  rot rmse " << format_double(r.rot_deg.rmse)
        << " deg  (delta " << o->delta << ")\n";
      if (o->scale) s << "scale " << format_double(a.alignment.scale) << '\n';

      if (!o->out.plot.empty()) {
        Series g{{}, {}, kBlue}, e{{}, {}, kRed};
        for (std::size_t i = 0; i < pg.size(); ++i) {
          const Eigen::Vector3d p = pg[i].pose.translation();
          const Eigen::Vector3d q = a.alignment(pe[i].pose.translation());
          g.x.push_back(p.x());
          g.y.push_back(p.y());
          e.x.push_back(q.x());
          e.y.push_back(q.y());
        }
        write_image(o->out.plot, line_plot({g, e}));
      }
      finish(ctx, o->out, report, s.str());
    };
  });
}

void register_sync(CLI::App& app, Action& action) {
  struct Opts {
    std::string frames, camera_signal, robot, robot_signal, sequence = "sequence", table;
    double fps = 0.0, robot_rate = 0.0, cutoff = 300.0, min_overlap = 0.25, reliable = 0.3;
    int max_lag = -1;
    Outputs out;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("sync", "Temporal offset between camera frames and robot motion");
  auto* cam_group = cmd->add_option_group("camera", "Camera input");
  cam_group->add_option("--frames", o->frames, "Directory of consecutive frames");
  cam_group->add_option("--camera-signal", o->camera_signal, "Precomputed per-frame divergence, one value per line");
  cam_group->require_option(1);
  auto* robot_group = cmd->add_option_group("robot", "Robot input");
  robot_group->add_option("--robot", o->robot, "Robot pose CSV (timestamps in seconds, positions in mm)");
  robot_group->add_option("--robot-signal", o->robot_signal, "Precomputed robot speed, one value per line");
  robot_group->require_option(1);
  cmd->add_option("--fps", o->fps, "Camera frame rate in Hz")->required()->check(CLI::PositiveNumber);
  cmd->add_option("--robot-rate", o->robot_rate, "Sample rate of --robot-signal in Hz")->check(CLI::PositiveNumber);
  cmd->add_option("--cutoff", o->cutoff, "Butterworth cutoff in Hz")->capture_default_str();
  cmd->add_option("--max-lag", o->max_lag, "Largest |lag| in camera frames (negative: full overlap)")
      ->capture_default_str();
  cmd->add_option("--min-overlap", o->min_overlap, "Minimum overlap fraction")->capture_default_str();
  cmd->add_option("--reliable-score", o->reliable, "Correlation below this is flagged")->capture_default_str();
  cmd->add_option("--sequence", o->sequence, "Sequence name for the table")->capture_default_str();
  cmd->add_option("--table", o->table, "Write the correspondence table here");
  add_output_options(*cmd, o->out, true);
  cmd->callback([o, &action] {
    action = [o](Context& ctx) {
      if (!o->frames.empty()) require_dir(o->frames, "--frames");
      if (!o->camera_signal.empty()) require_file(o->camera_signal, "--camera-signal");
      if (!o->robot.empty()) require_file(o->robot, "--robot");
      if (!o->robot_signal.empty()) {
        require_file(o->robot_signal, "--robot-signal");
        if (o->robot_rate <= 0.0) fail(ErrorCode::kInvalidArgument, "--robot-signal needs --robot-rate");
      }
      if (!o->table.empty()) require_writable(o->table, "--table");
      check_outputs(o->out);

      ScalarSignal camera{o->fps, {}};
      if (!o->frames.empty()) {
        std::vector<ImageBuffer> frames;
        for (const fs::path& p : list_images(o->frames)) frames.push_back(read_image(p));
        if (frames.size() < 2) fail(ErrorCode::kSignalTooShort, "need at least two frames");
        camera = divergence_signal(frames, o->fps);
      } else {
        camera.values = read_signal(o->camera_signal);
      }
      ScalarSignal robot;
      if (!o->robot.empty()) {
        const Trajectory t = read_trajectory_csv(o->robot);
        std::vector<double> ts;
        for (const TimedPose& s : t.samples()) ts.push_back(s.timestamp);
        robot = robot_speed(ts, t.positions(), o->cutoff);
      } else {
        robot = {o->robot_rate, read_signal(o->robot_signal)};
      }

      SyncOptions so;
      so.max_lag = o->max_lag;
      so.min_overlap_fraction = o->min_overlap;
      so.reliable_score = o->reliable;
      const SyncResult r = sync_offset(camera, robot, so);
      const double ratio = robot.rate_hz / camera.rate_hz;
      const SyncRow row{o->sequence, r.lag >= 0 ? 0L : -static_cast<long>(r.lag),
                        r.lag >= 0 ? r.robot_lag : 0L};
      if (!o->table.empty()) write_sync_table(o->table, std::vector<SyncRow>{row});

      Json j;
      j["schema"] = 1;
      j["command"] = "sync";
      j["sequence"] = o->sequence;
      j["camera"] = {{"rate_hz", camera.rate_hz}, {"samples", camera.values.size()}};
      j["robot"] = {{"rate_hz", robot.rate_hz}, {"samples", robot.values.size()}, {"samples_per_frame", ratio}};
      j["lag"] = r.lag;
      j["robot_lag"] = r.robot_lag;
      j["score"] = r.score;
      j["reliable"] = r.reliable;
      j["start_frame"] = row.start_frame;
      j["robot_sample"] = row.robot_sample;

      std::ostringstream s;
      s << "lag=" << r.lag << " robot_lag=" << r.robot_lag << " score=" << format_double(r.score)
        << (r.reliable ? "" : " (unreliable)") << '\n';
      s << format_sync_table(std::vector<SyncRow>{row});

      if (!o->out.plot.empty()) {
        const ScalarSignal resampled = resample_average(robot, camera.rate_hz);
        auto normalized = [](const std::vector<double>& v, long shift) {
          double m = 0.0, q = 0.0;
          for (double x : v) m += x / static_cast<double>(v.size());
          for (double x : v) q += (x - m) * (x - m) / static_cast<double>(v.size());
          const double sd = q > 0.0 ? std::sqrt(q) : 1.0;
          Series out{{}, {}, {}};
          for (std::size_t i = 0; i < v.size(); ++i) {
            out.x.push_back(static_cast<double>(static_cast<long>(i) - shift));
            out.y.push_back((v[i] - m) / sd);
          }
          return out;
        };
        Series c = normalized(camera.values, 0);
        c.color = kBlue;
        Series rb = normalized(resampled.values, r.lag);
        rb.color = kRed;
        write_image(o->out.plot, line_plot({c, rb}));
      }
      finish(ctx, o->out, j, s.str());
    };
  });
}

void register_report(CLI::App& app, Action& action) {
  struct Opts {
    std::vector<std::string> inputs;
    std::string output;
  };
  auto o = std::make_shared<Opts>();
  CLI::App* cmd = app.add_subcommand("report", "Human-readable summary of one or more JSON reports");
  cmd->add_option("reports", o->inputs, "JSON reports written by other subcommands")->required();
  cmd->add_option("-o,--output", o->output, "Write the summary here as well");
  cmd->callback([o, &action] {
    action = [o](Context& ctx) {
      for (const std::string& p : o->inputs) require_file(p, "report");
      if (!o->output.empty()) require_writable(o->output, "--output");
      std::ostringstream s;
      for (const std::string& p : o->inputs) {
        Json j;
        try {
          j = Json::parse(read_text_file(p));
        } catch (const nlohmann::json::exception& e) {
          fail(ErrorCode::kParse, p + ": " + e.what());
        }
        if (!j.is_object() || !j.contains("schema") || j["schema"] != 1) {
          fail(ErrorCode::kParse, p + ": not a schema 1 report");
        }
        s << "== " << p << " (" << j.value("command", std::string("?")) << ")\n";
        std::function<void(const Json&, const std::string&)> walk = [&](const Json& v, const std::string& key) {
          if (v.is_object()) {
            for (const auto& [k, child] : v.items()) walk(child, key.empty() ? k : key + "." + k);
          } else if (v.is_number_float()) {
            s << "  " << key << " = " << format_double(v.get<double>()) << '\n';
          } else if (v.is_number() || v.is_boolean() || v.is_string()) {
            if (key == "schema" || key == "command") return;
            s << "  " << key << " = " << (v.is_string() ? v.get<std::string>() : v.dump()) << '\n';
          } else if (v.is_null()) {
            s << "  " << key << " = nan\n";
          }
        };
        walk(j, "");
      }
      if (!o->output.empty()) write_file_atomic(o->output, s.str());
      ctx.out << s.str();
    };
  });
}

}  // namespace scopekit::cli
