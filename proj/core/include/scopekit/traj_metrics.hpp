#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "scopekit/geometry.hpp"

namespace scopekit {

struct TimedPose {
  double timestamp = 0.0;  // seconds
  Pose pose;               // translation in metres
};

/// Pose sequence with strictly increasing timestamps.
class Trajectory {
 public:
  Trajectory() = default;
  explicit Trajectory(std::vector<TimedPose> samples);

  /// Throws InvalidArgument unless t is later than the last sample.
  void push_back(double timestamp, const Pose& pose);

  [[nodiscard]] std::size_t size() const { return samples_.size(); }
  [[nodiscard]] bool empty() const { return samples_.empty(); }
  [[nodiscard]] const TimedPose& operator[](std::size_t i) const { return samples_[i]; }
  [[nodiscard]] const std::vector<TimedPose>& samples() const { return samples_; }
  [[nodiscard]] std::vector<Eigen::Vector3d> positions() const;

 private:
  std::vector<TimedPose> samples_;
};

struct MatchPair {
  std::size_t gt = 0;
  std::size_t est = 0;
};

inline constexpr double kDefaultMaxDt = 0.02;

/// Greedy one-to-one association: candidate pairs within max_dt are accepted
/// in order of increasing |dt| (ties by gt then est index). The result is
/// sorted by gt index. Throws NoMatches.
std::vector<MatchPair> associate(const Trajectory& gt, const Trajectory& est, double max_dt = kDefaultMaxDt);

/// Trajectories restricted to the matched samples, in match order.
std::pair<Trajectory, Trajectory> paired(const Trajectory& gt, const Trajectory& est,
                                         std::span<const MatchPair> matches);

/// Least-squares S minimizing sum ||gt_i - S(est_i)||^2 over index-paired
/// positions. Throws DegenerateGeometry for fewer than 3 or collinear points.
Similarity horn_align(const Trajectory& gt, const Trajectory& est, bool with_scale = false);

struct MetricStats {
  double rmse = 0.0;
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  double min = 0.0;
  double max = 0.0;
  double median = 0.0;
  std::size_t count = 0;
};

/// Throws InvalidArgument for an empty series.
MetricStats compute_stats(std::span<const double> values);

struct AteResult {
  Similarity alignment;
  std::vector<double> errors;  // metres
  MetricStats stats;
};

/// Absolute trajectory error ||trans(Q_i^-1 S P_i)|| after horn_align, for
/// index-paired trajectories of equal length.
AteResult ate(const Trajectory& gt, const Trajectory& est, bool with_scale = false);

struct RpeResult {
  std::vector<double> trans_errors;    // metres
  std::vector<double> rot_errors_deg;  // degrees
  MetricStats trans;
  MetricStats rot_deg;
};

/// Relative pose error of E_i = (Q_i^-1 Q_{i+delta})^-1 (P_i^-1 P_{i+delta})
/// for index-paired trajectories. Throws TrajectoryTooShort when n <= delta.
RpeResult rpe(const Trajectory& gt, const Trajectory& est, int delta = 1);

/// Reads `timestamp,tx,ty,tz,qx,qy,qz,qw` rows (commas or whitespace). A
/// non-numeric first line is treated as a header and '#' lines are skipped.
/// Keeps every `decimate`-th row, starting with the first.
Trajectory read_trajectory_csv(const std::filesystem::path& path, int decimate = 1);
Trajectory parse_trajectory_csv(std::string_view text, int decimate = 1);
void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& traj);

}  // namespace scopekit
