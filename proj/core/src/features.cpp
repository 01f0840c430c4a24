#include "scopekit/features.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "scopekit/error.hpp"
#include "scopekit/kdtree.hpp"
#include "scopekit/parallel.hpp"

namespace scopekit {
namespace {

constexpr double kBaseSigma = 1.6;
constexpr double kAssumedBlur = 0.5;
constexpr int kIntervals = 3;
constexpr int kOriBins = 36;

ScalarField blur_field(const ScalarField& f, double sigma) {
  const int size = 2 * static_cast<int>(std::ceil(3.0 * sigma)) + 1;
  return to_field(gaussian_blur(from_field(f), size, sigma));
}

ScalarField half(const ScalarField& f) {
  ScalarField out((f.width() + 1) / 2, (f.height() + 1) / 2);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) out(x, y) = f(2 * x, 2 * y);
  }
  return out;
}

struct Gradient {
  double mag;
  double angle;
};

Gradient gradient_at(const ScalarField& g, int x, int y) {
  const double gx = 0.5 * (g(x + 1, y) - g(x - 1, y));
  const double gy = 0.5 * (g(x, y + 1) - g(x, y - 1));
  return {std::hypot(gx, gy), std::atan2(gy, gx)};
}

double wrap_angle(double a) {
  a = std::fmod(a, 2.0 * M_PI);
  return a < 0.0 ? a + 2.0 * M_PI : a;
}

// Dominant gradient orientation around (x, y) on the smoothed image g.
double dominant_orientation(const ScalarField& g, double x, double y, double sigma) {
  std::array<double, kOriBins> hist{};
  const double ws = 1.5 * sigma;
  const int radius = static_cast<int>(std::lround(3.0 * ws));
  const int cx = static_cast<int>(std::lround(x));
  const int cy = static_cast<int>(std::lround(y));
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const int px = cx + dx;
      const int py = cy + dy;
      if (px < 1 || py < 1 || px >= g.width() - 1 || py >= g.height() - 1) continue;
      const Gradient gr = gradient_at(g, px, py);
      const double w = std::exp(-(dx * dx + dy * dy) / (2.0 * ws * ws));
      int bin = static_cast<int>(std::floor(wrap_angle(gr.angle) * kOriBins / (2.0 * M_PI)));
      bin = std::clamp(bin, 0, kOriBins - 1);
      hist[static_cast<std::size_t>(bin)] += w * gr.mag;
    }
  }
  std::array<double, kOriBins> smooth{};
  for (int i = 0; i < kOriBins; ++i) {
    smooth[static_cast<std::size_t>(i)] = 0.25 * hist[static_cast<std::size_t>((i + kOriBins - 1) % kOriBins)] +
                                          0.5 * hist[static_cast<std::size_t>(i)] +
                                          0.25 * hist[static_cast<std::size_t>((i + 1) % kOriBins)];
  }
  int best = 0;
  for (int i = 1; i < kOriBins; ++i) {
    if (smooth[static_cast<std::size_t>(i)] > smooth[static_cast<std::size_t>(best)]) best = i;
  }
  const double l = smooth[static_cast<std::size_t>((best + kOriBins - 1) % kOriBins)];
  const double c = smooth[static_cast<std::size_t>(best)];
  const double r = smooth[static_cast<std::size_t>((best + 1) % kOriBins)];
  const double denom = l - 2.0 * c + r;
  const double offset = denom != 0.0 ? 0.5 * (l - r) / denom : 0.0;
  return wrap_angle((best + 0.5 + offset) * 2.0 * M_PI / kOriBins);
}

// 4x4 spatial x 8 orientation histogram; returns false for a flat patch.
bool compute_descriptor(const ScalarField& g, double x, double y, double sigma, double theta, float* out) {
  std::array<double, kDescriptorSize> d{};
  const double bin_width = 3.0 * sigma;
  const int radius = static_cast<int>(std::ceil(bin_width * M_SQRT2 * 2.5));
  const int cx = static_cast<int>(std::lround(x));
  const int cy = static_cast<int>(std::lround(y));
  const double ct = std::cos(theta);
  const double st = std::sin(theta);
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const int px = cx + dx;
      const int py = cy + dy;
      if (px < 1 || py < 1 || px >= g.width() - 1 || py >= g.height() - 1) continue;
      const double ox = px - x;
      const double oy = py - y;
      const double u = (ct * ox + st * oy) / bin_width;
      const double v = (-st * ox + ct * oy) / bin_width;
      const double ub = u + 1.5;
      const double vb = v + 1.5;
      if (ub <= -1.0 || ub >= 4.0 || vb <= -1.0 || vb >= 4.0) continue;
      const Gradient gr = gradient_at(g, px, py);
      if (gr.mag == 0.0) continue;
      const double w = gr.mag * std::exp(-(u * u + v * v) / 8.0);
      const double ob = wrap_angle(gr.angle - theta) * 8.0 / (2.0 * M_PI);
      const int u0 = static_cast<int>(std::floor(ub));
      const int v0 = static_cast<int>(std::floor(vb));
      const int o0 = static_cast<int>(std::floor(ob));
      const double fu = ub - u0, fv = vb - v0, fo = ob - o0;
      for (int iv = 0; iv < 2; ++iv) {
        const int vi = v0 + iv;
        if (vi < 0 || vi > 3) continue;
        const double wv = iv ? fv : 1.0 - fv;
        for (int iu = 0; iu < 2; ++iu) {
          const int ui = u0 + iu;
          if (ui < 0 || ui > 3) continue;
          const double wu = iu ? fu : 1.0 - fu;
          for (int io = 0; io < 2; ++io) {
            const int oi = (o0 + io) % 8;
            const double wo = io ? fo : 1.0 - fo;
            d[static_cast<std::size_t>((vi * 4 + ui) * 8 + oi)] += w * wv * wu * wo;
          }
        }
      }
    }
  }
  auto normalize = [&]() {
    double n = 0.0;
    for (double v : d) n += v * v;
    n = std::sqrt(n);
    if (n == 0.0) return false;
    for (double& v : d) v /= n;
    return true;
  };
  if (!normalize()) return false;
  for (double& v : d) v = std::min(v, 0.2);
  if (!normalize()) return false;
  for (int i = 0; i < kDescriptorSize; ++i) out[i] = static_cast<float>(d[static_cast<std::size_t>(i)]);
  return true;
}

struct Candidate {
  Keypoint kp;             // full-resolution coordinates
  int octave = 0;
  int interval = 0;        // index of the Gaussian image used for description
  double ox = 0, oy = 0;   // octave coordinates
  double osigma = 0;       // sigma in octave pixels
};

bool by_response(const Keypoint& a, const Keypoint& b) {
  if (a.response != b.response) return a.response > b.response;
  if (a.y != b.y) return a.y < b.y;
  return a.x < b.x;
}

FeatureSet finish(std::vector<Candidate> cands, const std::vector<std::vector<ScalarField>>& pyramid,
                  std::size_t max_features) {
  std::stable_sort(cands.begin(), cands.end(), [](const Candidate& a, const Candidate& b) { return by_response(a.kp, b.kp); });
  FeatureSet fs;
  std::vector<float> desc(kDescriptorSize);
  for (Candidate& c : cands) {
    if (fs.size() >= max_features) break;
    const ScalarField& g = pyramid[static_cast<std::size_t>(c.octave)][static_cast<std::size_t>(c.interval)];
    const double theta = dominant_orientation(g, c.ox, c.oy, c.osigma);
    if (!compute_descriptor(g, c.ox, c.oy, c.osigma, theta, desc.data())) continue;
    c.kp.orientation = theta;
    fs.keypoints.push_back(c.kp);
    fs.descriptors.insert(fs.descriptors.end(), desc.begin(), desc.end());
  }
  return fs;
}

FeatureSet detect_dog(const ScalarField& gray, const DetectorOptions& opts) {
  const double k = std::pow(2.0, 1.0 / kIntervals);
  std::vector<std::vector<ScalarField>> gauss;
  ScalarField base = blur_field(gray, std::sqrt(kBaseSigma * kBaseSigma - kAssumedBlur * kAssumedBlur));
  while (std::min(base.width(), base.height()) >= 16) {
    std::vector<ScalarField> oct{base};
    for (int i = 1; i < kIntervals + 3; ++i) {
      const double prev = kBaseSigma * std::pow(k, i - 1);
      const double cur = prev * k;
      oct.push_back(blur_field(oct.back(), std::sqrt(cur * cur - prev * prev)));
    }
    base = half(oct[kIntervals]);
    gauss.push_back(std::move(oct));
  }
  if (gauss.empty()) fail(ErrorCode::kNoFeatures, "image too small for feature detection");

  std::vector<Candidate> cands;
  const double edge_limit = (opts.edge_ratio + 1.0) * (opts.edge_ratio + 1.0) / opts.edge_ratio;
  for (std::size_t o = 0; o < gauss.size(); ++o) {
    const auto& G = gauss[o];
    std::vector<ScalarField> D;
    for (std::size_t i = 0; i + 1 < G.size(); ++i) {
      ScalarField d(G[i].width(), G[i].height());
      for (std::size_t p = 0; p < d.size(); ++p) d[p] = G[i + 1][p] - G[i][p];
      D.push_back(std::move(d));
    }
    const int w = D[0].width();
    const int h = D[0].height();
    const int border = std::max(1, opts.border >> o);
    for (int s = 1; s <= kIntervals; ++s) {
      for (int y = border; y < h - border; ++y) {
        for (int x = border; x < w - border; ++x) {
          const double v = D[static_cast<std::size_t>(s)](x, y);
          if (std::abs(v) < opts.contrast_threshold) continue;
          bool is_max = true, is_min = true;
          for (int ds = -1; ds <= 1 && (is_max || is_min); ++ds) {
            const ScalarField& L = D[static_cast<std::size_t>(s + ds)];
            for (int dy = -1; dy <= 1; ++dy) {
              for (int dx = -1; dx <= 1; ++dx) {
                if (ds == 0 && dx == 0 && dy == 0) continue;
                const double n = L(x + dx, y + dy);
                is_max = is_max && v > n;
                is_min = is_min && v < n;
              }
            }
          }
          if (!is_max && !is_min) continue;
          const ScalarField& L = D[static_cast<std::size_t>(s)];
          const double dxx = L(x + 1, y) - 2 * v + L(x - 1, y);
          const double dyy = L(x, y + 1) - 2 * v + L(x, y - 1);
          const double dxy = 0.25 * (L(x + 1, y + 1) - L(x - 1, y + 1) - L(x + 1, y - 1) + L(x - 1, y - 1));
          const double det = dxx * dyy - dxy * dxy;
          const double tr = dxx + dyy;
          if (det <= 0.0 || tr * tr / det >= edge_limit) continue;
          const double offx = dxx != 0.0 ? std::clamp(-0.5 * (L(x + 1, y) - L(x - 1, y)) / dxx, -0.5, 0.5) : 0.0;
          const double offy = dyy != 0.0 ? std::clamp(-0.5 * (L(x, y + 1) - L(x, y - 1)) / dyy, -0.5, 0.5) : 0.0;
          Candidate c;
          c.octave = static_cast<int>(o);
          c.interval = s;
          c.ox = x + offx;
          c.oy = y + offy;
          c.osigma = kBaseSigma * std::pow(k, s);
          const double f = std::ldexp(1.0, static_cast<int>(o));
          c.kp = {c.ox * f, c.oy * f, c.osigma * f, 0.0, std::abs(v)};
          cands.push_back(c);
        }
      }
    }
  }
  return finish(std::move(cands), gauss, opts.max_features);
}

FeatureSet detect_harris(const ScalarField& gray, const DetectorOptions& opts) {
  const int w = gray.width();
  const int h = gray.height();
  ScalarField sxx(w, h), syy(w, h), sxy(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double gx = 0.5 * (gray(std::min(x + 1, w - 1), y) - gray(std::max(x - 1, 0), y));
      const double gy = 0.5 * (gray(x, std::min(y + 1, h - 1)) - gray(x, std::max(y - 1, 0)));
      sxx(x, y) = gx * gx;
      syy(x, y) = gy * gy;
      sxy(x, y) = gx * gy;
    }
  }
  sxx = blur_field(sxx, opts.harris_sigma);
  syy = blur_field(syy, opts.harris_sigma);
  sxy = blur_field(sxy, opts.harris_sigma);
  ScalarField R(w, h);
  double max_r = 0.0;
  for (std::size_t i = 0; i < R.size(); ++i) {
    const double tr = sxx[i] + syy[i];
    R[i] = sxx[i] * syy[i] - sxy[i] * sxy[i] - opts.harris_k * tr * tr;
    max_r = std::max(max_r, R[i]);
  }
  if (!(max_r > 1e-12)) fail(ErrorCode::kNoFeatures, "no corner response");
  const double floor_r = opts.harris_relative_threshold * max_r;
  const int b = std::max(opts.border, 2);

  std::vector<Candidate> cands;
  for (int y = b; y < h - b; ++y) {
    for (int x = b; x < w - b; ++x) {
      const double v = R(x, y);
      if (v <= floor_r) continue;
      bool peak = true;
      for (int dy = -2; dy <= 2 && peak; ++dy) {
        for (int dx = -2; dx <= 2 && peak; ++dx) {
          if (dx == 0 && dy == 0) continue;
          const double n = R(x + dx, y + dy);
          const bool earlier = dy < 0 || (dy == 0 && dx < 0);
          peak = earlier ? v > n : v >= n;
        }
      }
      if (!peak) continue;
      const double dxx = R(x + 1, y) - 2 * v + R(x - 1, y);
      const double dyy = R(x, y + 1) - 2 * v + R(x, y - 1);
      const double offx = dxx < 0.0 ? std::clamp(-0.5 * (R(x + 1, y) - R(x - 1, y)) / dxx, -0.5, 0.5) : 0.0;
      const double offy = dyy < 0.0 ? std::clamp(-0.5 * (R(x, y + 1) - R(x, y - 1)) / dyy, -0.5, 0.5) : 0.0;
      Candidate c;
      c.ox = x + offx;
      c.oy = y + offy;
      c.osigma = opts.harris_sigma;
      c.kp = {c.ox, c.oy, c.osigma, 0.0, v};
      cands.push_back(c);
    }
  }
  std::vector<std::vector<ScalarField>> pyramid{{blur_field(gray, 1.0)}};
  return finish(std::move(cands), pyramid, opts.max_features);
}

}  // namespace

FeatureSet detect_and_describe(const ImageBuffer& img, const DetectorOptions& opts) {
  if (img.empty()) fail(ErrorCode::kNoFeatures, "empty image");
  const ScalarField gray = to_field(to_gray(img));
  FeatureSet fs = opts.detector == Detector::kHarris ? detect_harris(gray, opts) : detect_dog(gray, opts);
  if (fs.empty()) fail(ErrorCode::kNoFeatures, "no features detected");
  return fs;
}

FeatureSet describe(const ImageBuffer& img, std::vector<Keypoint> keypoints) {
  const ScalarField g = blur_field(to_field(to_gray(img)), 1.0);
  std::vector<Candidate> cands;
  for (const Keypoint& kp : keypoints) {
    Candidate c;
    c.kp = kp;
    c.ox = kp.x;
    c.oy = kp.y;
    c.osigma = kp.scale;
    cands.push_back(c);
  }
  std::vector<std::vector<ScalarField>> pyramid{{g}};
  const std::size_t n = cands.size();
  return finish(std::move(cands), pyramid, n);
}

KnnResult match_knn(const FeatureSet& a, const FeatureSet& b, std::size_t k) {
  if (a.empty() || b.empty()) fail(ErrorCode::kEmptySet, "cannot match an empty feature set");
  KnnResult out;
  out.k_clamped = k > b.size();
  const std::size_t kk = std::min(k, b.size());
  const KdTree<float> tree(b.descriptors.data(), b.size(), kDescriptorSize);
  out.neighbors.resize(a.size());
  parallel_for(0, a.size(), [&](std::size_t i) {
    const auto nn = tree.knn(a.descriptor(i), kk);
    auto& dst = out.neighbors[i];
    dst.reserve(nn.size());
    for (const auto& n : nn) dst.push_back({n.index, n.distance});
  });
  return out;
}

std::vector<Match> ratio_filter(const KnnResult& knn, double ratio) {
  std::vector<Match> out;
  for (std::size_t i = 0; i < knn.neighbors.size(); ++i) {
    const auto& n = knn.neighbors[i];
    if (n.empty()) continue;
    if (n.size() >= 2 && !(n[0].distance < ratio * n[1].distance)) continue;
    out.push_back({i, n[0].index, n[0].distance});
  }
  return out;
}

std::vector<Match> match_features(const FeatureSet& a, const FeatureSet& b, double ratio) {
  return ratio_filter(match_knn(a, b, 2), ratio);
}

}  // namespace scopekit
