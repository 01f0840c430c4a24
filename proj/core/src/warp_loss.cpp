#include "scopekit/warp_loss.hpp"

#include <algorithm>
#include <cmath>

namespace scopekit {

DepthMap DepthMap::from_field(const ScalarField& d) {
  DepthMap out(d.width(), d.height());
  out.depth = d;
  for (std::size_t i = 0; i < d.size(); ++i) out.valid[i] = std::isfinite(d[i]) && d[i] > 0.0;
  return out;
}

DepthMap DepthMap::constant(int width, int height, double z) {
  return from_field(ScalarField(width, height, z));
}

void LossWeights::validate() const {
  for (double v : {alpha, beta, gamma, lambda_p, lambda_s}) {
    if (!std::isfinite(v) || v < 0.0) fail(ErrorCode::kInvalidArgument, "loss weights must be finite and non-negative");
  }
}

BackProjection back_project(const DepthMap& depth, const CameraIntrinsics& K) {
  BackProjection bp;
  bp.width = depth.width();
  bp.height = depth.height();
  bp.points.reserve(depth.valid_count());
  bp.pixel.reserve(depth.valid_count());
  for (int y = 0; y < depth.height(); ++y) {
    for (int x = 0; x < depth.width(); ++x) {
      if (!depth.is_valid(x, y)) continue;
      const Eigen::Vector2d px(static_cast<double>(x), static_cast<double>(y));
      if (K.has_distortion() && !in_calibrated_fov(K, px)) continue;
      bp.points.push_back(unproject(K, px, depth.depth(x, y)));
      bp.pixel.push_back(static_cast<std::size_t>(y) * static_cast<std::size_t>(depth.width()) +
                         static_cast<std::size_t>(x));
    }
  }
  return bp;
}

namespace {

std::optional<Eigen::Vector2d> project_if_visible(const CameraIntrinsics& K, const Eigen::Vector3d& X) {
  if (!(X.z() > 0.0)) return std::nullopt;
  const Eigen::Vector2d p = project(K, X);
  if (!std::isfinite(p.x()) || !std::isfinite(p.y())) return std::nullopt;
  return p;
}

}  // namespace

WarpResult warp_image(const ImageBuffer& src, const BackProjection& ref_points, const Pose& pose,
                      const CameraIntrinsics& K) {
  WarpResult out{ImageBuffer(ref_points.width, ref_points.height, src.channels()),
                 Mask(ref_points.width, ref_points.height)};
  const Eigen::Matrix3d R = pose.rotation_matrix();
  const Eigen::Vector3d& t = pose.translation();
  for (std::size_t i = 0; i < ref_points.points.size(); ++i) {
    const auto p = project_if_visible(K, R * ref_points.points[i] + t);
    if (!p) continue;
    const int x = static_cast<int>(ref_points.pixel[i] % static_cast<std::size_t>(ref_points.width));
    const int y = static_cast<int>(ref_points.pixel[i] / static_cast<std::size_t>(ref_points.width));
    bool ok = true;
    for (int c = 0; c < src.channels() && ok; ++c) {
      const auto v = bilinear_sample(src, p->x(), p->y(), c);
      if (v) {
        out.image.at(x, y, c) = *v;
      } else {
        ok = false;
      }
    }
    if (ok) {
      out.valid[ref_points.pixel[i]] = 1;
    } else {
      for (int c = 0; c < src.channels(); ++c) out.image.at(x, y, c) = 0.0;
    }
  }
  return out;
}

WarpResult warp_image(const ImageBuffer& src, const DepthMap& depth_ref, const Pose& pose, const CameraIntrinsics& K) {
  if (!src.same_size(depth_ref.depth)) fail(ErrorCode::kDimensionMismatch, "source image and depth differ in size");
  return warp_image(src, back_project(depth_ref, K), pose, K);
}

BrightnessParams estimate_brightness(const ImageBuffer& synth, const ImageBuffer& target, const Mask& mask) {
  if (!synth.same_shape(target) || !synth.same_size(mask)) {
    fail(ErrorCode::kDimensionMismatch, "brightness estimation inputs differ in shape");
  }
  const int ch = synth.channels();
  double n = 0.0, sx = 0.0, sy = 0.0;
  for (int y = 0; y < synth.height(); ++y) {
    for (int x = 0; x < synth.width(); ++x) {
      if (!mask(x, y)) continue;
      for (int c = 0; c < ch; ++c) {
        sx += synth.at(x, y, c);
        sy += target.at(x, y, c);
        n += 1.0;
      }
    }
  }
  if (n == 0.0) fail(ErrorCode::kEmptyMask, "brightness estimation over an empty mask");
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0.0, sxy = 0.0;
  for (int y = 0; y < synth.height(); ++y) {
    for (int x = 0; x < synth.width(); ++x) {
      if (!mask(x, y)) continue;
      for (int c = 0; c < ch; ++c) {
        const double dx = synth.at(x, y, c) - mx;
        sxx += dx * dx;
        sxy += dx * (target.at(x, y, c) - my);
      }
    }
  }
  if (sxx <= 1e-12 * n) return {1.0, my - mx, true};
  const double a = sxy / sxx;
  if (!(a > 0.0)) return {1.0, my - mx, true};
  return {a, my - a * mx, false};
}

ImageBuffer apply_brightness(const ImageBuffer& img, const BrightnessParams& bp) {
  ImageBuffer out = img;
  for (double& v : out.data()) v = std::clamp(bp.a * v + bp.c, 0.0, 1.0);
  return out;
}

PhotometricTerms photometric_terms(const ImageBuffer& synth, const ImageBuffer& target, const Mask& mask,
                                   const BrightnessParams& bp, double lambda_p, double lambda_s,
                                   const ScalarField* weight) {
  if (!synth.same_shape(target) || !synth.same_size(mask)) {
    fail(ErrorCode::kDimensionMismatch, "photometric inputs differ in shape");
  }
  if (weight && !weight->same_shape(mask)) fail(ErrorCode::kDimensionMismatch, "photometric weight differs in size");
  const std::size_t count = count_set(mask);
  if (count == 0) fail(ErrorCode::kEmptyMask, "photometric loss over an empty mask");

  const ImageBuffer aligned = apply_brightness(synth, bp);
  double l2 = 0.0;
  double wsum = 0.0;
  for (int y = 0; y < synth.height(); ++y) {
    for (int x = 0; x < synth.width(); ++x) {
      if (!mask(x, y)) continue;
      double sq = 0.0;
      for (int c = 0; c < synth.channels(); ++c) {
        const double r = aligned.at(x, y, c) - target.at(x, y, c);
        sq += r * r;
      }
      const double wp = weight ? (*weight)(x, y) : 1.0;
      l2 += wp * std::sqrt(sq);
      wsum += wp;
    }
  }

  double ssim_term = 0.0;
  if (lambda_s != 0.0) {
    const ScalarField smap = ssim_map(aligned, target, 3, &mask);
    double s = 0.0;
    for (std::size_t i = 0; i < smap.size(); ++i) {
      if (mask[i]) s += smap[i];
    }
    ssim_term = (1.0 - s / static_cast<double>(count)) / 2.0;
  }

  const double inv = 1.0 / static_cast<double>(count);
  return {lambda_p * l2 * inv, lambda_s * ssim_term * wsum * inv};
}

double photometric_loss(const ImageBuffer& synth, const ImageBuffer& target, const Mask& mask,
                        const BrightnessParams& bp, double lambda_p, double lambda_s, const ScalarField* weight) {
  return photometric_terms(synth, target, mask, bp, lambda_p, lambda_s, weight).total();
}

double smoothness_loss(const ImageBuffer& img, const DepthMap& depth) {
  if (!img.same_size(depth.depth)) fail(ErrorCode::kDimensionMismatch, "smoothness inputs differ in size");
  double mean = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < depth.depth.size(); ++i) {
    if (depth.valid[i]) {
      mean += depth.depth[i];
      ++n;
    }
  }
  if (n == 0) return 0.0;
  mean /= static_cast<double>(n);

  const GradientField gi = gradients(img);
  double sum = 0.0;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      if (!depth.is_valid(x, y)) continue;
      const double d = depth.depth(x, y) / mean;
      if (x + 1 < img.width() && depth.is_valid(x + 1, y)) {
        const double t = std::exp(-std::abs(gi.gx(x, y))) * (depth.depth(x + 1, y) / mean - d);
        sum += t * t;
      }
      if (y + 1 < img.height() && depth.is_valid(x, y + 1)) {
        const double t = std::exp(-std::abs(gi.gy(x, y))) * (depth.depth(x, y + 1) / mean - d);
        sum += t * t;
      }
    }
  }
  return sum;
}

double depth_difference(double a, double b) { return std::abs(a - b) / (a + b); }

namespace {

DepthConsistency consistency_from_points(const BackProjection& pts, const DepthMap& depth_src, const Pose& pose,
                                         const CameraIntrinsics& K) {
  DepthConsistency out{ScalarField(pts.width, pts.height), ScalarField(pts.width, pts.height),
                       Mask(pts.width, pts.height)};
  const Eigen::Matrix3d R = pose.rotation_matrix();
  const Eigen::Vector3d& t = pose.translation();
  for (std::size_t i = 0; i < pts.points.size(); ++i) {
    const Eigen::Vector3d Y = R * pts.points[i] + t;
    const auto p = project_if_visible(K, Y);
    if (!p) continue;
    const auto d_src = bilinear_sample(depth_src.depth, &depth_src.valid, p->x(), p->y());
    if (!d_src || !(*d_src > 0.0)) continue;
    out.diff[pts.pixel[i]] = depth_difference(Y.z(), *d_src);
    out.warped_depth[pts.pixel[i]] = Y.z();
    out.valid[pts.pixel[i]] = 1;
  }
  return out;
}

}  // namespace

DepthConsistency depth_consistency(const DepthMap& depth_ref, const DepthMap& depth_src, const Pose& pose,
                                   const CameraIntrinsics& K) {
  if (!depth_ref.depth.same_shape(depth_src.depth)) fail(ErrorCode::kDimensionMismatch, "depth maps differ in size");
  return consistency_from_points(back_project(depth_ref, K), depth_src, pose, K);
}

double geometry_consistency_loss(const ScalarField& diff, const Mask& mask) {
  if (!diff.same_shape(mask)) fail(ErrorCode::kDimensionMismatch, "consistency mask differs in size");
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < diff.size(); ++i) {
    if (!mask[i]) continue;
    sum += diff[i];
    ++n;
  }
  if (n == 0) fail(ErrorCode::kEmptyMask, "geometry consistency over an empty mask");
  return sum / static_cast<double>(n);
}

LossReport total_loss(const LossInputs& in, const LossWeights& w, bool brightness_alignment) {
  if (!in.ref || !in.src || !in.depth_ref) fail(ErrorCode::kInvalidArgument, "loss inputs are incomplete");
  w.validate();
  const ImageBuffer& ref = *in.ref;
  if (!ref.same_shape(*in.src) || !ref.same_size(in.depth_ref->depth)) {
    fail(ErrorCode::kDimensionMismatch, "loss inputs differ in shape");
  }
  if (in.depth_src && !in.depth_src->depth.same_shape(in.depth_ref->depth)) {
    fail(ErrorCode::kDimensionMismatch, "depth maps differ in size");
  }

  BackProjection local;
  const BackProjection* pts = in.ref_points;
  if (!pts) {
    local = back_project(*in.depth_ref, in.K);
    pts = &local;
  }

  WarpResult warped = warp_image(*in.src, *pts, in.pose_ref_to_src, in.K);
  Mask valid = warped.valid;
  std::optional<ScalarField> weight;
  LossReport report;
  if (in.depth_src) {
    const DepthConsistency dc = consistency_from_points(*pts, *in.depth_src, in.pose_ref_to_src, in.K);
    for (std::size_t i = 0; i < valid.size(); ++i) valid[i] = valid[i] && dc.valid[i];
    if (count_set(valid) == 0) fail(ErrorCode::kEmptyMask, "no pixel is valid in both views");
    weight.emplace(valid.width(), valid.height());
    for (std::size_t i = 0; i < valid.size(); ++i) (*weight)[i] = valid[i] ? 1.0 - dc.diff[i] : 0.0;
    report.geometry = geometry_consistency_loss(dc.diff, valid);
  }

  report.valid_count = count_set(valid);
  report.brightness = brightness_alignment ? estimate_brightness(warped.image, ref, valid) : BrightnessParams{};
  const PhotometricTerms terms = photometric_terms(warped.image, ref, valid, report.brightness, w.lambda_p,
                                                   w.lambda_s, weight ? &*weight : nullptr);
  report.photometric_l2 = terms.l2;
  report.photometric_ssim = terms.ssim;
  report.photometric = terms.total();
  report.smoothness = in.smoothness ? *in.smoothness : smoothness_loss(ref, *in.depth_ref);
  report.total = w.alpha * report.photometric + w.beta * report.smoothness + w.gamma * report.geometry;
  return report;
}

}  // namespace scopekit
