#include "scopekit/augmentation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "scopekit/error.hpp"
#include "scopekit/parallel.hpp"

namespace scopekit {
namespace {

double source_coord(int i, int src_size, int dst_size) {
  const double s = (i + 0.5) * static_cast<double>(src_size) / dst_size - 0.5;
  return std::clamp(s, 0.0, static_cast<double>(src_size - 1));
}

// Source position for a fisheye output pixel, or nullopt when discarded.
std::optional<Eigen::Vector2d> fisheye_source(int w, int h, double nu, int x, int y) {
  const double cx = (w - 1) / 2.0;
  const double cy = (h - 1) / 2.0;
  const double R = std::min(w, h) / 2.0;
  const double dx = x - cx;
  const double dy = y - cy;
  const double dist = std::hypot(dx, dy);
  const double rho = dist / R;
  if (rho > nu) return std::nullopt;
  if (dist == 0.0) return Eigen::Vector2d(cx, cy);
  const double theta = kFisheyeMaxAngle * rho / nu;
  const double src_r = R * std::tan(theta) / std::tan(kFisheyeMaxAngle);
  return Eigen::Vector2d(cx + dx * src_r / dist, cy + dy * src_r / dist);
}

void check_nu(double nu) {
  if (!(nu > 0.0 && nu <= 1.0)) fail(ErrorCode::kBadRatio, "fisheye ratio must lie in (0, 1]");
}

DepthMap resize_depth(const DepthMap& d, int width, int height) {
  DepthMap out(width, height);
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const int sx = static_cast<int>(std::lround(source_coord(x, d.width(), width)));
      const int sy = static_cast<int>(std::lround(source_coord(y, d.height(), height)));
      out.depth(x, y) = d.depth(sx, sy);
      out.valid(x, y) = d.valid(sx, sy);
    }
  }
  return out;
}

DepthMap fisheye_depth(const DepthMap& d, double nu) {
  DepthMap out(d.width(), d.height());
  for (int y = 0; y < d.height(); ++y) {
    for (int x = 0; x < d.width(); ++x) {
      const auto p = fisheye_source(d.width(), d.height(), nu, x, y);
      if (!p) continue;
      const int sx = static_cast<int>(std::lround(p->x()));
      const int sy = static_cast<int>(std::lround(p->y()));
      if (!d.valid.contains(sx, sy)) continue;
      out.depth(x, y) = d.depth(sx, sy);
      out.valid(x, y) = d.valid(sx, sy);
    }
  }
  return out;
}

}  // namespace

ImageBuffer resize(const ImageBuffer& img, int width, int height) {
  if (width <= 0 || height <= 0) fail(ErrorCode::kBadSize, "resize target must be positive");
  if (img.empty()) fail(ErrorCode::kBadSize, "cannot resize an empty image");
  ImageBuffer out(width, height, img.channels());
  for (int y = 0; y < height; ++y) {
    const double sy = source_coord(y, img.height(), height);
    for (int x = 0; x < width; ++x) {
      const double sx = source_coord(x, img.width(), width);
      for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) = *bilinear_sample(img, sx, sy, c);
    }
  }
  return out;
}

ImageBuffer gaussian_blur_repeated(const ImageBuffer& img, int kernel_size, double sigma, int repetitions) {
  if (repetitions < 1) fail(ErrorCode::kBadKernel, "blur repetitions must be at least 1");
  ImageBuffer out = gaussian_blur(img, kernel_size, sigma);
  for (int i = 1; i < repetitions; ++i) out = gaussian_blur(out, kernel_size, sigma);
  return out;
}

double vignette_factor(int width, int height, double x, double y, double strength) {
  const double cx = (width - 1) / 2.0;
  const double cy = (height - 1) / 2.0;
  const double r_max = std::hypot(cx, cy);
  if (r_max == 0.0) return 1.0;
  const double c = std::cos(std::atan(std::hypot(x - cx, y - cy) / r_max));
  return 1.0 - strength + strength * c * c * c * c;
}

ImageBuffer vignette(const ImageBuffer& img, double strength) {
  if (!(strength >= 0.0 && strength <= 1.0)) fail(ErrorCode::kBadRatio, "vignette strength must lie in [0, 1]");
  ImageBuffer out = img;
  if (strength == 0.0) return out;
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const double f = vignette_factor(img.width(), img.height(), x, y, strength);
      for (int c = 0; c < img.channels(); ++c) out.at(x, y, c) *= f;
    }
  }
  return out;
}

ImageBuffer fisheye(const ImageBuffer& img, double nu) {
  check_nu(nu);
  ImageBuffer out(img.width(), img.height(), img.channels());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      const auto p = fisheye_source(img.width(), img.height(), nu, x, y);
      if (!p) continue;
      for (int c = 0; c < img.channels(); ++c) {
        out.at(x, y, c) = bilinear_sample(img, p->x(), p->y(), c).value_or(0.0);
      }
    }
  }
  return out;
}

ImageBuffer depth_of_field(const ImageBuffer& img, const DepthMap& depth, double focus, const DofOptions& opts) {
  if (!img.same_size(depth.depth)) fail(ErrorCode::kDimensionMismatch, "depth-of-field depth differs in size");
  if (!(focus >= 0.0 && focus <= 1.0)) fail(ErrorCode::kBadRatio, "focus must lie in [0, 1]");
  if (!(opts.max_sigma >= 0.0)) fail(ErrorCode::kInvalidArgument, "max_sigma must be non-negative");

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < depth.depth.size(); ++i) {
    if (!depth.valid[i]) continue;
    lo = std::min(lo, depth.depth[i]);
    hi = std::max(hi, depth.depth[i]);
  }
  lo = opts.near.value_or(lo);
  hi = opts.far.value_or(hi);
  const double range = hi - lo;

  const int w = img.width();
  const int h = img.height();
  ImageBuffer out = img;
  parallel_for(0, static_cast<std::size_t>(h), [&](std::size_t yy) {
    const int y = static_cast<int>(yy);
    for (int x = 0; x < w; ++x) {
      if (!depth.is_valid(x, y)) continue;
      const double dn = range > 0.0 ? std::clamp((depth.depth(x, y) - lo) / range, 0.0, 1.0) : 0.0;
      const double sigma = opts.max_sigma * std::abs(dn - focus);
      if (sigma < 1e-3) continue;
      const int r = static_cast<int>(std::ceil(3.0 * sigma));
      const double inv = -0.5 / (sigma * sigma);
      for (int c = 0; c < img.channels(); ++c) {
        double acc = 0.0;
        double wsum = 0.0;
        for (int dy = -r; dy <= r; ++dy) {
          const int qy = std::clamp(y + dy, 0, h - 1);
          for (int dx = -r; dx <= r; ++dx) {
            const double g = std::exp((dx * dx + dy * dy) * inv);
            acc += g * img.at(std::clamp(x + dx, 0, w - 1), qy, c);
            wsum += g;
          }
        }
        out.at(x, y, c) = acc / wsum;
      }
    }
  });
  return out;
}

std::vector<std::size_t> subsample_indices(std::size_t count, int factor) {
  if (factor < 1) fail(ErrorCode::kInvalidArgument, "subsample factor must be at least 1");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < count; i += static_cast<std::size_t>(factor)) out.push_back(i);
  return out;
}

double AugmentStep::get(const std::string& key) const {
  const auto it = params.find(key);
  if (it == params.end()) fail(ErrorCode::kParse, "augment step '" + op + "' needs " + key + "=");
  return it->second;
}

double AugmentStep::get_or(const std::string& key, double fallback) const {
  const auto it = params.find(key);
  return it == params.end() ? fallback : it->second;
}

int AugmentSpec::subsample_factor() const {
  int f = 1;
  for (const AugmentStep& s : steps) {
    if (s.op == "subsample") f *= static_cast<int>(s.get("factor"));
  }
  return f;
}

bool AugmentSpec::needs_depth() const {
  return std::any_of(steps.begin(), steps.end(), [](const AugmentStep& s) { return s.op == "dof"; });
}

namespace {

int as_int(const AugmentStep& s, const std::string& key) {
  const double v = s.get(key);
  if (v != std::floor(v)) fail(ErrorCode::kParse, "augment step '" + s.op + "': " + key + " must be an integer");
  return static_cast<int>(v);
}

void validate_step(const AugmentStep& s) {
  static const std::map<std::string, std::vector<std::string>> kKeys = {
      {"resize", {"width", "height"}},       {"blur", {"kernel", "sigma", "repeat"}},
      {"vignette", {"strength"}},            {"fisheye", {"nu"}},
      {"dof", {"focus", "max_sigma", "near", "far"}}, {"subsample", {"factor"}},
  };
  const auto it = kKeys.find(s.op);
  if (it == kKeys.end()) fail(ErrorCode::kParse, "unknown augment op '" + s.op + "'");
  for (const auto& [key, value] : s.params) {
    if (std::find(it->second.begin(), it->second.end(), key) == it->second.end()) {
      fail(ErrorCode::kParse, "augment op '" + s.op + "' has no parameter '" + key + "'");
    }
  }
  if (s.op == "resize") {
    if (as_int(s, "width") <= 0 || as_int(s, "height") <= 0) fail(ErrorCode::kBadSize, "resize target must be positive");
  } else if (s.op == "blur") {
    const int k = as_int(s, "kernel");
    if (k < 1 || k % 2 == 0 || !(s.get("sigma") > 0.0)) fail(ErrorCode::kBadKernel, "blur needs an odd kernel and sigma > 0");
    if (as_int(s, "repeat") < 1) fail(ErrorCode::kBadKernel, "blur repeat must be at least 1");
  } else if (s.op == "vignette") {
    const double v = s.get("strength");
    if (!(v >= 0.0 && v <= 1.0)) fail(ErrorCode::kBadRatio, "vignette strength must lie in [0, 1]");
  } else if (s.op == "fisheye") {
    check_nu(s.get("nu"));
  } else if (s.op == "dof") {
    const double f = s.get("focus");
    if (!(f >= 0.0 && f <= 1.0)) fail(ErrorCode::kBadRatio, "focus must lie in [0, 1]");
  } else if (s.op == "subsample") {
    if (as_int(s, "factor") < 1) fail(ErrorCode::kInvalidArgument, "subsample factor must be at least 1");
  }
}

}  // namespace

AugmentSpec parse_augment_spec(std::string_view text) {
  AugmentSpec spec;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    AugmentStep step;
    if (!(ls >> step.op)) continue;
    std::string token;
    while (ls >> token) {
      const auto eq = token.find('=');
      if (eq == std::string::npos || eq == 0 || eq + 1 == token.size()) {
        fail(ErrorCode::kParse, "spec line " + std::to_string(line_no) + ": expected key=value, got '" + token + "'");
      }
      std::size_t used = 0;
      double v = 0.0;
      const std::string value = token.substr(eq + 1);
      try {
        v = std::stod(value, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != value.size() || !std::isfinite(v)) {
        fail(ErrorCode::kParse, "spec line " + std::to_string(line_no) + ": bad number '" + value + "'");
      }
      step.params[token.substr(0, eq)] = v;
    }
    try {
      validate_step(step);
    } catch (const Error& e) {
      fail(e.code(), "spec line " + std::to_string(line_no) + ": " + e.what());
    }
    spec.steps.push_back(std::move(step));
  }
  return spec;
}

ImageBuffer apply_augment_spec(const ImageBuffer& img, const AugmentSpec& spec, const DepthMap* depth) {
  ImageBuffer out = img;
  std::optional<DepthMap> d;
  if (depth) d = *depth;
  for (const AugmentStep& s : spec.steps) {
    if (s.op == "resize") {
      const int w = as_int(s, "width");
      const int h = as_int(s, "height");
      out = resize(out, w, h);
      if (d) d = resize_depth(*d, w, h);
    } else if (s.op == "blur") {
      out = gaussian_blur_repeated(out, as_int(s, "kernel"), s.get("sigma"), as_int(s, "repeat"));
    } else if (s.op == "vignette") {
      out = vignette(out, s.get("strength"));
    } else if (s.op == "fisheye") {
      out = fisheye(out, s.get("nu"));
      if (d) d = fisheye_depth(*d, s.get("nu"));
    } else if (s.op == "dof") {
      if (!d) fail(ErrorCode::kInvalidArgument, "dof step needs a depth map");
      DofOptions o;
      o.max_sigma = s.get_or("max_sigma", o.max_sigma);
      if (s.params.count("near")) o.near = s.get("near");
      if (s.params.count("far")) o.far = s.get("far");
      out = depth_of_field(out, *d, s.get("focus"), o);
    }
  }
  return out;
}

}  // namespace scopekit
