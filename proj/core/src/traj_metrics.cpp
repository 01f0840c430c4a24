#include "scopekit/traj_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

#include "scopekit/error.hpp"

namespace scopekit {

Trajectory::Trajectory(std::vector<TimedPose> samples) {
  samples_.reserve(samples.size());
  for (const TimedPose& s : samples) push_back(s.timestamp, s.pose);
}

void Trajectory::push_back(double timestamp, const Pose& pose) {
  if (!std::isfinite(timestamp)) fail(ErrorCode::kInvalidArgument, "trajectory timestamps must be finite");
  if (!samples_.empty() && !(timestamp > samples_.back().timestamp)) {
    fail(ErrorCode::kInvalidArgument, "trajectory timestamps must be strictly increasing");
  }
  samples_.push_back({timestamp, pose});
}

std::vector<Eigen::Vector3d> Trajectory::positions() const {
  std::vector<Eigen::Vector3d> out;
  out.reserve(samples_.size());
  for (const TimedPose& s : samples_) out.push_back(s.pose.translation());
  return out;
}

std::vector<MatchPair> associate(const Trajectory& gt, const Trajectory& est, double max_dt) {
  if (gt.empty() || est.empty()) fail(ErrorCode::kNoMatches, "cannot associate an empty trajectory");
  if (!(max_dt >= 0.0)) fail(ErrorCode::kInvalidArgument, "max_dt must be non-negative");

  std::vector<double> est_t;
  est_t.reserve(est.size());
  for (const TimedPose& s : est.samples()) est_t.push_back(s.timestamp);

  std::vector<std::tuple<double, std::size_t, std::size_t>> candidates;
  for (std::size_t i = 0; i < gt.size(); ++i) {
    const double t = gt[i].timestamp;
    auto lo = std::lower_bound(est_t.begin(), est_t.end(), t - max_dt);
    for (auto it = lo; it != est_t.end() && *it <= t + max_dt; ++it) {
      candidates.emplace_back(std::abs(*it - t), i, static_cast<std::size_t>(it - est_t.begin()));
    }
  }
  std::sort(candidates.begin(), candidates.end());

  std::vector<char> gt_used(gt.size(), 0);
  std::vector<char> est_used(est.size(), 0);
  std::vector<MatchPair> out;
  for (const auto& [dt, i, j] : candidates) {
    if (gt_used[i] || est_used[j]) continue;
    gt_used[i] = est_used[j] = 1;
    out.push_back({i, j});
  }
  if (out.empty()) fail(ErrorCode::kNoMatches, "no timestamps within max_dt");
  std::sort(out.begin(), out.end(), [](const MatchPair& a, const MatchPair& b) { return a.gt < b.gt; });
  return out;
}

std::pair<Trajectory, Trajectory> paired(const Trajectory& gt, const Trajectory& est,
                                         std::span<const MatchPair> matches) {
  std::vector<TimedPose> g;
  std::vector<TimedPose> e;
  g.reserve(matches.size());
  e.reserve(matches.size());
  for (const MatchPair& m : matches) {
    g.push_back(gt[m.gt]);
    // The estimate is re-stamped with the ground-truth time so both stay ordered.
    e.push_back({gt[m.gt].timestamp, est[m.est].pose});
  }
  return {Trajectory(std::move(g)), Trajectory(std::move(e))};
}

namespace {

void require_paired(const Trajectory& gt, const Trajectory& est) {
  if (gt.size() != est.size()) fail(ErrorCode::kInvalidArgument, "trajectories are not index-paired");
}

}  // namespace

Similarity horn_align(const Trajectory& gt, const Trajectory& est, bool with_scale) {
  require_paired(gt, est);
  const auto src = est.positions();
  const auto dst = gt.positions();
  return fit_similarity(src, dst, with_scale);
}

MetricStats compute_stats(std::span<const double> values) {
  if (values.empty()) fail(ErrorCode::kInvalidArgument, "statistics of an empty series");
  MetricStats s;
  s.count = values.size();
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  double sq = 0.0;
  for (double v : values) {
    sum += v;
    sq += v * v;
  }
  s.mean = sum / n;
  s.rmse = std::sqrt(sq / n);
  double var = 0.0;
  for (double v : values) var += (v - s.mean) * (v - s.mean);
  s.std = std::sqrt(var / n);
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  s.min = sorted.front();
  s.max = sorted.back();
  const std::size_t mid = sorted.size() / 2;
  s.median = sorted.size() % 2 ? sorted[mid] : 0.5 * (sorted[mid - 1] + sorted[mid]);
  return s;
}

AteResult ate(const Trajectory& gt, const Trajectory& est, bool with_scale) {
  AteResult r;
  r.alignment = horn_align(gt, est, with_scale);
  r.errors.reserve(gt.size());
  for (std::size_t i = 0; i < gt.size(); ++i) {
    r.errors.push_back((r.alignment(est[i].pose.translation()) - gt[i].pose.translation()).norm());
  }
  r.stats = compute_stats(r.errors);
  return r;
}

RpeResult rpe(const Trajectory& gt, const Trajectory& est, int delta) {
  require_paired(gt, est);
  if (delta < 1) fail(ErrorCode::kInvalidArgument, "RPE frame gap must be positive");
  if (gt.size() <= static_cast<std::size_t>(delta)) fail(ErrorCode::kTrajectoryTooShort, "trajectory shorter than the frame gap");
  RpeResult r;
  const std::size_t d = static_cast<std::size_t>(delta);
  for (std::size_t i = 0; i + d < gt.size(); ++i) {
    const Pose dq = compose(inverse(gt[i].pose), gt[i + d].pose);
    const Pose dp = compose(inverse(est[i].pose), est[i + d].pose);
    const Pose e = compose(inverse(dq), dp);
    r.trans_errors.push_back(e.translation().norm());
    r.rot_errors_deg.push_back(rotation_angle(e) * 180.0 / M_PI);
  }
  r.trans = compute_stats(r.trans_errors);
  r.rot_deg = compute_stats(r.rot_errors_deg);
  return r;
}

}  // namespace scopekit
