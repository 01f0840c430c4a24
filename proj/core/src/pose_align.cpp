#include "scopekit/pose_align.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace scopekit {

void AlignOptions::validate() const {
  if (max_iters <= 0) fail(ErrorCode::kInvalidArgument, "max_iters must be positive");
  if (pyramid_levels <= 0) fail(ErrorCode::kInvalidArgument, "pyramid_levels must be positive");
  if (!(fd_eps.minCoeff() > 0.0)) fail(ErrorCode::kInvalidArgument, "finite-difference epsilons must be positive");
  if (!(step_tolerance >= 0.0) || !(loss_tolerance >= 0.0)) fail(ErrorCode::kInvalidArgument, "tolerances must be non-negative");
}

ImageBuffer downsample2(const ImageBuffer& img) {
  const int w = img.width() / 2;
  const int h = img.height() / 2;
  ImageBuffer out(w, h, img.channels());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < img.channels(); ++c) {
        out.at(x, y, c) = 0.25 * (img.at(2 * x, 2 * y, c) + img.at(2 * x + 1, 2 * y, c) + img.at(2 * x, 2 * y + 1, c) +
                                  img.at(2 * x + 1, 2 * y + 1, c));
      }
    }
  }
  return out;
}

DepthMap downsample2(const DepthMap& depth) {
  const int w = depth.width() / 2;
  const int h = depth.height() / 2;
  DepthMap out(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double sum = 0.0;
      int n = 0;
      for (int dy = 0; dy < 2; ++dy) {
        for (int dx = 0; dx < 2; ++dx) {
          if (!depth.is_valid(2 * x + dx, 2 * y + dy)) continue;
          sum += depth.depth(2 * x + dx, 2 * y + dy);
          ++n;
        }
      }
      if (n > 0) {
        out.depth(x, y) = sum / n;
        out.valid(x, y) = 1;
      }
    }
  }
  return out;
}

namespace {

struct Level {
  ImageBuffer ref;
  ImageBuffer src;
  DepthMap depth;
  CameraIntrinsics K;
  BackProjection points;
};

class Objective {
 public:
  Objective(const Level& level, const LossWeights& w, bool brightness)
      : level_(level), w_(w), brightness_(brightness), smoothness_(smoothness_loss(level.ref, level.depth)) {}

  // Pose evaluations that leave too few valid pixels are treated as infinitely bad.
  [[nodiscard]] double value(const Pose& p, LossReport* report = nullptr) const {
    LossInputs in;
    in.ref = &level_.ref;
    in.src = &level_.src;
    in.depth_ref = &level_.depth;
    in.pose_ref_to_src = p;
    in.K = level_.K;
    in.ref_points = &level_.points;
    in.smoothness = smoothness_;
    try {
      LossReport r = total_loss(in, w_, brightness_);
      if (r.valid_count * 10 < level_.points.points.size()) return std::numeric_limits<double>::infinity();
      if (report) *report = r;
      return r.total;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kEmptyMask) return std::numeric_limits<double>::infinity();
      throw;
    }
  }

 private:
  const Level& level_;
  const LossWeights& w_;
  bool brightness_;
  double smoothness_;
};

Vector6d fd_gradient(const Objective& f, const Pose& base, const Vector6d& xi, const Vector6d& eps) {
  Vector6d g;
  for (int k = 0; k < 6; ++k) {
    Vector6d a = xi;
    Vector6d b = xi;
    a[k] += eps[k];
    b[k] -= eps[k];
    const double fa = f.value(perturb(base, a));
    const double fb = f.value(perturb(base, b));
    g[k] = (std::isfinite(fa) && std::isfinite(fb)) ? (fa - fb) / (2.0 * eps[k]) : 0.0;
  }
  return g;
}

struct LevelOutcome {
  Pose pose;
  double loss;
  bool converged;
};

LevelOutcome optimize_level(const Level& level, int level_index, const Pose& start, const LossWeights& w,
                            const AlignOptions& opts, const Vector6d& scale, std::vector<AlignStep>& trace) {
  using Mat6 = Eigen::Matrix<double, 6, 6>;
  const Objective f(level, w, opts.brightness_alignment);
  // The search runs on z with xi = scale .* z so that unit steps in rotation
  // and translation move the image by comparable amounts.
  auto pose_at = [&](const Vector6d& z) { return perturb(start, scale.cwiseProduct(z)); };
  auto gradient = [&](const Vector6d& z) {
    return scale.cwiseProduct(fd_gradient(f, start, scale.cwiseProduct(z), opts.fd_eps));
  };

  LossReport report;
  Vector6d z = Vector6d::Zero();
  double fz = f.value(start, &report);
  if (!std::isfinite(fz)) return {start, fz, false};
  trace.push_back({level_index, 0, start, report});

  Mat6 H = Mat6::Identity();
  bool fresh = true;  // H is the (scaled) identity
  Vector6d g = gradient(z);
  int stalls = 0;
  const double max_step = 200.0 * opts.fd_eps.cwiseQuotient(scale).minCoeff();
  for (int it = 1; it <= opts.max_iters; ++it) {
    if (g.norm() == 0.0) return {pose_at(z), fz, true};
    Vector6d dir = -H * g;
    if (dir.dot(g) >= 0.0) {
      H.setIdentity();
      fresh = true;
      dir = -g;
    }
    double t = std::min(1.0, max_step / dir.norm());
    const double slope = g.dot(dir);
    double f_new = std::numeric_limits<double>::infinity();
    Vector6d z_new;
    bool accepted = false;
    for (int ls = 0; ls < 30 && !accepted; ++ls) {
      z_new = z + t * dir;
      f_new = f.value(pose_at(z_new), &report);
      accepted = std::isfinite(f_new) && f_new < fz && f_new <= fz + 1e-4 * t * slope;
      if (!accepted) t *= 0.5;
    }
    if (!accepted) {
      if (fresh) return {pose_at(z), fz, true};
      H.setIdentity();
      fresh = true;
      continue;
    }

    const Vector6d s = z_new - z;
    const double decrease = fz - f_new;
    const double previous = fz;
    z = z_new;
    fz = f_new;
    trace.push_back({level_index, it, pose_at(z), report});
    if (s.norm() < opts.step_tolerance) return {pose_at(z), fz, true};
    stalls = decrease <= opts.loss_tolerance * previous ? stalls + 1 : 0;
    if (stalls >= 3) return {pose_at(z), fz, true};

    const Vector6d g_new = gradient(z);
    const Vector6d y = g_new - g;
    g = g_new;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh) H *= sy / y.squaredNorm();
      fresh = false;
      const double rho = 1.0 / sy;
      const Mat6 I = Mat6::Identity();
      H = (I - rho * s * y.transpose()) * H * (I - rho * y * s.transpose()) + rho * s * s.transpose();
    }
  }
  return {pose_at(z), fz, false};
}

}  // namespace

AlignResult refine_pose(const ImageBuffer& ref, const ImageBuffer& src, const DepthMap& depth_ref,
                        const CameraIntrinsics& K, const Pose& init, const LossWeights& weights,
                        const AlignOptions& opts) {
  opts.validate();
  weights.validate();
  K.validate();
  if (!ref.same_shape(src) || !ref.same_size(depth_ref.depth)) {
    fail(ErrorCode::kDimensionMismatch, "alignment inputs differ in shape");
  }
  if (depth_ref.valid_count() * 10 < depth_ref.depth.size()) {
    fail(ErrorCode::kInsufficientValidDepth, "fewer than 10% of the reference pixels have valid depth");
  }

  std::vector<Level> levels;
  levels.push_back({ref, src, depth_ref, K, {}});
  for (int l = 1; l < opts.pyramid_levels; ++l) {
    const Level& prev = levels.back();
    if (prev.ref.width() < 16 || prev.ref.height() < 16) break;
    levels.push_back({downsample2(prev.ref), downsample2(prev.src), downsample2(prev.depth), prev.K.scaled(0.5), {}});
  }
  for (Level& lv : levels) lv.points = back_project(lv.depth, lv.K);

  AlignResult result;
  const Objective finest(levels.front(), weights, opts.brightness_alignment);
  result.initial_loss = finest.value(init);

  std::vector<double> depths;
  for (std::size_t i = 0; i < depth_ref.depth.size(); ++i) {
    if (depth_ref.valid[i]) depths.push_back(depth_ref.depth[i]);
  }
  std::nth_element(depths.begin(), depths.begin() + static_cast<std::ptrdiff_t>(depths.size() / 2), depths.end());
  Vector6d scale;
  scale << 1.0, 1.0, 1.0, Eigen::Vector3d::Constant(depths[depths.size() / 2]);

  Pose pose = init;
  bool converged = true;
  for (int l = static_cast<int>(levels.size()) - 1; l >= 0; --l) {
    const LevelOutcome out = optimize_level(levels[static_cast<std::size_t>(l)], l, pose, weights, opts, scale, result.trace);
    if (std::isfinite(out.loss)) pose = out.pose;
    converged = converged && out.converged;
  }

  result.final_loss = finest.value(pose, &result.final_report);
  if (!(result.final_loss <= result.initial_loss)) {
    result.no_descent = true;
    result.pose = init;
    result.final_loss = finest.value(init, &result.final_report);
  } else {
    result.pose = pose;
    result.no_descent = result.final_loss == result.initial_loss && pose.translation() == init.translation() &&
                        pose.rotation().coeffs() == init.rotation().coeffs();
  }
  result.converged = converged;
  return result;
}

}  // namespace scopekit
