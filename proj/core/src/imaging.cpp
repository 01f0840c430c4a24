#include "scopekit/imaging.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "scopekit/parallel.hpp"

namespace scopekit {

ImageBuffer::ImageBuffer(int width, int height, int channels, double fill)
    : width_(width), height_(height), channels_(channels) {
  if (width < 0 || height < 0) fail(ErrorCode::kBadSize, "image dimensions must be non-negative");
  if (channels != 1 && channels != 3) fail(ErrorCode::kInvalidArgument, "images have 1 or 3 channels");
  data_.assign(static_cast<std::size_t>(width) * height * channels, fill);
}

bool ImageBuffer::in_unit_range() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return v >= 0.0 && v <= 1.0; });
}

void ImageBuffer::clamp_unit() {
  for (double& v : data_) v = std::clamp(v, 0.0, 1.0);
}

ImageBuffer to_gray(const ImageBuffer& img) {
  if (img.channels() == 1) return img;
  ImageBuffer out(img.width(), img.height(), 1);
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      out.at(x, y) = 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
    }
  }
  return out;
}

ImageBuffer from_field(const ScalarField& f) {
  ImageBuffer out(f.width(), f.height(), 1);
  std::copy(f.data().begin(), f.data().end(), out.data().begin());
  return out;
}

ScalarField to_field(const ImageBuffer& img, int channel) {
  ScalarField out(img.width(), img.height());
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) out(x, y) = img.at(x, y, channel);
  }
  return out;
}

namespace {

struct Taps {
  int x0, y0;
  double fx, fy;
  bool need_x1, need_y1;
};

double snap(double v) {
  const double r = std::round(v);
  return std::abs(v - r) < 1e-9 ? r : v;
}

std::optional<Taps> taps_for(int width, int height, double x, double y) {
  if (!std::isfinite(x) || !std::isfinite(y)) return std::nullopt;
  x = snap(x);
  y = snap(y);
  const double xf = std::floor(x);
  const double yf = std::floor(y);
  if (xf < 0.0 || yf < 0.0 || xf > width - 1 || yf > height - 1) return std::nullopt;
  Taps t{static_cast<int>(xf), static_cast<int>(yf), x - xf, y - yf, false, false};
  t.need_x1 = t.fx > 0.0;
  t.need_y1 = t.fy > 0.0;
  if (t.need_x1 && t.x0 + 1 >= width) return std::nullopt;
  if (t.need_y1 && t.y0 + 1 >= height) return std::nullopt;
  return t;
}

}  // namespace

std::optional<double> bilinear_sample(const ImageBuffer& img, double x, double y, int c) {
  const auto t = taps_for(img.width(), img.height(), x, y);
  if (!t) return std::nullopt;
  const int x1 = t->need_x1 ? t->x0 + 1 : t->x0;
  const int y1 = t->need_y1 ? t->y0 + 1 : t->y0;
  const double top = (1.0 - t->fx) * img.at(t->x0, t->y0, c) + t->fx * img.at(x1, t->y0, c);
  const double bottom = (1.0 - t->fx) * img.at(t->x0, y1, c) + t->fx * img.at(x1, y1, c);
  return (1.0 - t->fy) * top + t->fy * bottom;
}

std::optional<double> bilinear_sample(const ScalarField& f, const Mask* valid, double x, double y) {
  const auto t = taps_for(f.width(), f.height(), x, y);
  if (!t) return std::nullopt;
  const int x1 = t->need_x1 ? t->x0 + 1 : t->x0;
  const int y1 = t->need_y1 ? t->y0 + 1 : t->y0;
  if (valid) {
    const Mask& m = *valid;
    if (!m(t->x0, t->y0) || !m(x1, t->y0) || !m(t->x0, y1) || !m(x1, y1)) return std::nullopt;
  }
  const double top = (1.0 - t->fx) * f(t->x0, t->y0) + t->fx * f(x1, t->y0);
  const double bottom = (1.0 - t->fx) * f(t->x0, y1) + t->fx * f(x1, y1);
  return (1.0 - t->fy) * top + t->fy * bottom;
}

GradientField gradients(const ScalarField& f) {
  GradientField g{ScalarField(f.width(), f.height()), ScalarField(f.width(), f.height())};
  for (int y = 0; y < f.height(); ++y) {
    for (int x = 0; x < f.width(); ++x) {
      if (x + 1 < f.width()) g.gx(x, y) = f(x + 1, y) - f(x, y);
      if (y + 1 < f.height()) g.gy(x, y) = f(x, y + 1) - f(x, y);
    }
  }
  return g;
}

GradientField gradients(const ImageBuffer& img) {
  GradientField g{ScalarField(img.width(), img.height()), ScalarField(img.width(), img.height())};
  const double inv_c = 1.0 / img.channels();
  for (int y = 0; y < img.height(); ++y) {
    for (int x = 0; x < img.width(); ++x) {
      double sx = 0.0;
      double sy = 0.0;
      for (int c = 0; c < img.channels(); ++c) {
        if (x + 1 < img.width()) sx += img.at(x + 1, y, c) - img.at(x, y, c);
        if (y + 1 < img.height()) sy += img.at(x, y + 1, c) - img.at(x, y, c);
      }
      g.gx(x, y) = sx * inv_c;
      g.gy(x, y) = sy * inv_c;
    }
  }
  return g;
}

namespace {

struct Moments {
  double sa = 0, sb = 0, saa = 0, sbb = 0, sab = 0;
  int n = 0;

  void add(double a, double b) {
    sa += a;
    sb += b;
    saa += a * a;
    sbb += b * b;
    sab += a * b;
    ++n;
  }

  [[nodiscard]] double ssim() const {
    const double inv = 1.0 / n;
    const double ma = sa * inv;
    const double mb = sb * inv;
    const double va = saa * inv - ma * ma;
    const double vb = sbb * inv - mb * mb;
    const double cov = sab * inv - ma * mb;
    return ((2.0 * ma * mb + kSsimC1) * (2.0 * cov + kSsimC2)) /
           ((ma * ma + mb * mb + kSsimC1) * (va + vb + kSsimC2));
  }
};

void check_window(int window) {
  if (window < 1 || window % 2 == 0) fail(ErrorCode::kBadKernel, "SSIM window must be a positive odd size");
}

}  // namespace

double ssim(const ImageBuffer& a, const ImageBuffer& b, int window) {
  if (!a.same_shape(b)) fail(ErrorCode::kDimensionMismatch, "SSIM inputs differ in shape");
  check_window(window);
  if (window > a.width() || window > a.height()) fail(ErrorCode::kBadKernel, "SSIM window larger than image");
  const int r = window / 2;
  double total = 0.0;
  std::size_t count = 0;
  for (int c = 0; c < a.channels(); ++c) {
    for (int y = r; y < a.height() - r; ++y) {
      for (int x = r; x < a.width() - r; ++x) {
        Moments m;
        for (int dy = -r; dy <= r; ++dy) {
          for (int dx = -r; dx <= r; ++dx) m.add(a.at(x + dx, y + dy, c), b.at(x + dx, y + dy, c));
        }
        total += m.ssim();
        ++count;
      }
    }
  }
  return total / static_cast<double>(count);
}

ScalarField ssim_map(const ImageBuffer& a, const ImageBuffer& b, int window, const Mask* mask) {
  if (!a.same_shape(b)) fail(ErrorCode::kDimensionMismatch, "SSIM inputs differ in shape");
  if (mask && !a.same_size(*mask)) fail(ErrorCode::kDimensionMismatch, "SSIM mask differs in size");
  check_window(window);
  const int r = window / 2;
  ScalarField out(a.width(), a.height());
  parallel_for(0, static_cast<std::size_t>(a.height()), [&](std::size_t yy) {
    const int y = static_cast<int>(yy);
    for (int x = 0; x < a.width(); ++x) {
      if (mask && !(*mask)(x, y)) continue;
      double acc = 0.0;
      for (int c = 0; c < a.channels(); ++c) {
        Moments m;
        for (int dy = -r; dy <= r; ++dy) {
          const int qy = y + dy;
          if (qy < 0 || qy >= a.height()) continue;
          for (int dx = -r; dx <= r; ++dx) {
            const int qx = x + dx;
            if (qx < 0 || qx >= a.width()) continue;
            if (mask && !(*mask)(qx, qy)) continue;
            m.add(a.at(qx, qy, c), b.at(qx, qy, c));
          }
        }
        acc += m.ssim();
      }
      out(x, y) = acc / a.channels();
    }
  });
  return out;
}

int intensity_bin(double v) {
  return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

OtsuResult otsu_threshold(const ImageBuffer& img) {
  if (img.empty()) fail(ErrorCode::kInvalidArgument, "Otsu threshold of an empty image");
  const ImageBuffer gray = to_gray(img);
  std::array<double, 256> hist{};
  for (double v : gray.data()) hist[static_cast<std::size_t>(intensity_bin(v))] += 1.0;

  const auto occupied = std::count_if(hist.begin(), hist.end(), [](double h) { return h > 0.0; });
  if (occupied <= 1) {
    const auto& d = gray.data();
    double mean = d.front();
    if (!std::all_of(d.begin(), d.end(), [&](double v) { return v == d.front(); })) {
      mean = 0.0;
      for (double v : d) mean += v;
      mean /= static_cast<double>(d.size());
    }
    return {mean, intensity_bin(mean), true};
  }

  const double total = static_cast<double>(gray.data().size());
  double sum_all = 0.0;
  for (int i = 0; i < 256; ++i) sum_all += i * hist[i];

  double w0 = 0.0;
  double sum0 = 0.0;
  double best = -1.0;
  int best_bin = 0;
  for (int t = 0; t < 255; ++t) {
    w0 += hist[t];
    sum0 += t * hist[t];
    const double w1 = total - w0;
    if (w0 == 0.0 || w1 == 0.0) continue;
    const double mu0 = sum0 / w0;
    const double mu1 = (sum_all - sum0) / w1;
    const double between = w0 * w1 * (mu0 - mu1) * (mu0 - mu1);
    if (between > best) {
      best = between;
      best_bin = t;
    }
  }
  return {(best_bin + 0.5) / 255.0, best_bin, false};
}

ImageBuffer inpaint_diffusion(const ImageBuffer& img, const Mask& mask, int max_iters, double tolerance) {
  if (!img.same_size(mask)) fail(ErrorCode::kDimensionMismatch, "inpainting mask differs in size");
  const std::size_t masked = count_set(mask);
  if (masked == 0) return img;
  if (masked == mask.size()) fail(ErrorCode::kMaskCoversEverything, "nothing to diffuse from");

  ImageBuffer out = img;
  const int w = img.width();
  const int h = img.height();
  std::vector<std::pair<int, int>> holes;
  holes.reserve(masked);
  int min_x = w, max_x = 0, min_y = h, max_y = 0;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      if (!mask(x, y)) continue;
      holes.emplace_back(x, y);
      min_x = std::min(min_x, x);
      max_x = std::max(max_x, x);
      min_y = std::min(min_y, y);
      max_y = std::max(max_y, y);
    }
  }
  const double extent = std::max(max_x - min_x, max_y - min_y) + 2.0;
  const double omega = 2.0 / (1.0 + std::sin(M_PI / extent));

  static constexpr std::array<std::pair<int, int>, 4> kNbr{{{1, 0}, {-1, 0}, {0, 1}, {0, -1}}};
  for (int c = 0; c < img.channels(); ++c) {
    // Start from the mean of the known values bordering the holes.
    double seed = 0.0;
    int seeds = 0;
    for (auto [x, y] : holes) {
      for (auto [dx, dy] : kNbr) {
        const int qx = x + dx, qy = y + dy;
        if (mask.contains(qx, qy) && !mask(qx, qy)) {
          seed += img.at(qx, qy, c);
          ++seeds;
        }
      }
    }
    seed = seeds > 0 ? seed / seeds : 0.0;
    for (auto [x, y] : holes) out.at(x, y, c) = seed;

    for (int iter = 0; iter < max_iters; ++iter) {
      double max_delta = 0.0;
      for (auto [x, y] : holes) {
        double sum = 0.0;
        int n = 0;
        for (auto [dx, dy] : kNbr) {
          const int qx = x + dx, qy = y + dy;
          if (!mask.contains(qx, qy)) continue;
          sum += out.at(qx, qy, c);
          ++n;
        }
        const double target = sum / n;
        const double delta = omega * (target - out.at(x, y, c));
        out.at(x, y, c) += delta;
        max_delta = std::max(max_delta, std::abs(delta));
      }
      if (max_delta < tolerance) break;
    }
  }
  return out;
}

std::vector<double> gaussian_kernel(int size, double sigma) {
  if (size < 1 || size % 2 == 0) fail(ErrorCode::kBadKernel, "kernel size must be a positive odd integer");
  if (!(sigma > 0.0) || !std::isfinite(sigma)) fail(ErrorCode::kBadKernel, "sigma must be positive");
  std::vector<double> k(static_cast<std::size_t>(size));
  const int r = size / 2;
  double sum = 0.0;
  for (int i = -r; i <= r; ++i) {
    k[static_cast<std::size_t>(i + r)] = std::exp(-0.5 * i * i / (sigma * sigma));
    sum += k[static_cast<std::size_t>(i + r)];
  }
  for (double& v : k) v /= sum;
  return k;
}

ImageBuffer gaussian_blur(const ImageBuffer& img, int kernel_size, double sigma) {
  const std::vector<double> k = gaussian_kernel(kernel_size, sigma);
  const int r = kernel_size / 2;
  const int w = img.width();
  const int h = img.height();
  const int ch = img.channels();
  ImageBuffer tmp(w, h, ch);
  ImageBuffer out(w, h, ch);
  parallel_for(0, static_cast<std::size_t>(h), [&](std::size_t yy) {
    const int y = static_cast<int>(yy);
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) acc += k[static_cast<std::size_t>(i + r)] * img.at(std::clamp(x + i, 0, w - 1), y, c);
        tmp.at(x, y, c) = acc;
      }
    }
  });
  parallel_for(0, static_cast<std::size_t>(h), [&](std::size_t yy) {
    const int y = static_cast<int>(yy);
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < ch; ++c) {
        double acc = 0.0;
        for (int i = -r; i <= r; ++i) acc += k[static_cast<std::size_t>(i + r)] * tmp.at(x, std::clamp(y + i, 0, h - 1), c);
        out.at(x, y, c) = acc;
      }
    }
  });
  return out;
}

Mask dilate(const Mask& m, int radius) {
  Mask out(m.width(), m.height());
  for (int y = 0; y < m.height(); ++y) {
    for (int x = 0; x < m.width(); ++x) {
      if (!m(x, y)) continue;
      for (int dy = -radius; dy <= radius; ++dy) {
        for (int dx = -radius; dx <= radius; ++dx) {
          if (dx * dx + dy * dy > radius * radius) continue;
          if (out.contains(x + dx, y + dy)) out(x + dx, y + dy) = 1;
        }
      }
    }
  }
  return out;
}

}  // namespace scopekit
