#include "scopekit/temporal_sync.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "scopekit/error.hpp"
#include "scopekit/io_util.hpp"
#include "scopekit/parallel.hpp"

namespace scopekit {
namespace {

double sample_clamped(const ImageBuffer& img, double x, double y) {
  x = std::clamp(x, 0.0, static_cast<double>(img.width() - 1));
  y = std::clamp(y, 0.0, static_cast<double>(img.height() - 1));
  const int x0 = std::min(static_cast<int>(x), img.width() - 1);
  const int y0 = std::min(static_cast<int>(y), img.height() - 1);
  const int x1 = std::min(x0 + 1, img.width() - 1);
  const int y1 = std::min(y0 + 1, img.height() - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  return (1 - fy) * ((1 - fx) * img.at(x0, y0) + fx * img.at(x1, y0)) + fy * ((1 - fx) * img.at(x0, y1) + fx * img.at(x1, y1));
}

}  // namespace

FlowField lk_flow(const ImageBuffer& I1_in, const ImageBuffer& I2_in, const FlowOptions& opts) {
  if (I1_in.width() != I2_in.width() || I1_in.height() != I2_in.height()) {
    fail(ErrorCode::kDimensionMismatch, "flow frames differ in size");
  }
  if (opts.window < 1 || opts.window % 2 == 0) fail(ErrorCode::kBadKernel, "flow window must be a positive odd size");
  if (opts.iterations < 1) fail(ErrorCode::kInvalidArgument, "flow needs at least one iteration");
  const ImageBuffer I1 = to_gray(I1_in);
  const ImageBuffer I2 = to_gray(I2_in);
  const int w = I1.width();
  const int h = I1.height();
  const int r = opts.window / 2;

  ScalarField ix(w, h), iy(w, h);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      ix(x, y) = 0.5 * (I1.at(std::min(x + 1, w - 1), y) - I1.at(std::max(x - 1, 0), y));
      iy(x, y) = 0.5 * (I1.at(x, std::min(y + 1, h - 1)) - I1.at(x, std::max(y - 1, 0)));
    }
  }

  FlowField f{ScalarField(w, h), ScalarField(w, h), Mask(w, h)};
  parallel_for(0, static_cast<std::size_t>(h), [&](std::size_t yy) {
    const int y = static_cast<int>(yy);
    for (int x = 0; x < w; ++x) {
      const int x0 = std::max(x - r, 0), x1 = std::min(x + r, w - 1);
      const int y0 = std::max(y - r, 0), y1 = std::min(y + r, h - 1);
      double gxx = 0, gxy = 0, gyy = 0;
      for (int qy = y0; qy <= y1; ++qy) {
        for (int qx = x0; qx <= x1; ++qx) {
          gxx += ix(qx, qy) * ix(qx, qy);
          gxy += ix(qx, qy) * iy(qx, qy);
          gyy += iy(qx, qy) * iy(qx, qy);
        }
      }
      const double n = static_cast<double>((x1 - x0 + 1) * (y1 - y0 + 1));
      const double tr = (gxx + gyy) / n;
      const double det = (gxx * gyy - gxy * gxy) / (n * n);
      const double min_eig = 0.5 * tr - std::sqrt(std::max(0.25 * tr * tr - det, 0.0));
      if (!(min_eig >= opts.min_eigenvalue)) continue;

      const double inv_det = 1.0 / (gxx * gyy - gxy * gxy);
      double u = 0.0, v = 0.0;
      for (int it = 0; it < opts.iterations; ++it) {
        double bx = 0, by = 0;
        for (int qy = y0; qy <= y1; ++qy) {
          for (int qx = x0; qx <= x1; ++qx) {
            const double it_val = sample_clamped(I2, qx + u, qy + v) - I1.at(qx, qy);
            bx -= ix(qx, qy) * it_val;
            by -= iy(qx, qy) * it_val;
          }
        }
        u += inv_det * (gyy * bx - gxy * by);
        v += inv_det * (gxx * by - gxy * bx);
      }
      f.u(x, y) = u;
      f.v(x, y) = v;
      f.confident(x, y) = 1;
    }
  });
  return f;
}

double divergence(const FlowField& f) {
  const int w = f.u.width();
  const int h = f.u.height();
  double sum = 0.0;
  std::size_t n = 0;
  for (int y = 1; y + 1 < h; ++y) {
    for (int x = 1; x + 1 < w; ++x) {
      if (!f.confident(x, y) || !f.confident(x - 1, y) || !f.confident(x + 1, y) || !f.confident(x, y - 1) ||
          !f.confident(x, y + 1)) {
        continue;
      }
      sum += 0.5 * (f.u(x + 1, y) - f.u(x - 1, y)) + 0.5 * (f.v(x, y + 1) - f.v(x, y - 1));
      ++n;
    }
  }
  if (n == 0) fail(ErrorCode::kNoConfidentPixels, "no confident pixel with confident neighbours");
  return sum / static_cast<double>(n);
}

ScalarSignal divergence_signal(std::span<const ImageBuffer> frames, double fps, const FlowOptions& opts) {
  if (frames.size() < 2) fail(ErrorCode::kSignalTooShort, "divergence needs at least two frames");
  ScalarSignal s{fps, std::vector<double>(frames.size() - 1, 0.0)};
  for (std::size_t i = 0; i + 1 < frames.size(); ++i) {
    try {
      s.values[i] = divergence(lk_flow(frames[i], frames[i + 1], opts));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoConfidentPixels) throw;
    }
  }
  return s;
}

std::array<double, 5> butterworth2(double cutoff_hz, double sample_hz) {
  if (!(sample_hz > 0.0) || !(cutoff_hz > 0.0) || !(cutoff_hz < 0.5 * sample_hz)) {
    fail(ErrorCode::kInvalidArgument, "cutoff must lie strictly between 0 and the Nyquist frequency");
  }
  const double k = std::tan(M_PI * cutoff_hz / sample_hz);
  const double norm = 1.0 / (1.0 + M_SQRT2 * k + k * k);
  const double b0 = k * k * norm;
  return {b0, 2.0 * b0, b0, 2.0 * (k * k - 1.0) * norm, (1.0 - M_SQRT2 * k + k * k) * norm};
}

namespace {

std::vector<double> lfilter(const std::array<double, 5>& c, const std::vector<double>& x, double z1, double z2) {
  const auto [b0, b1, b2, a1, a2] = c;
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double out = b0 * x[i] + z1;
    z1 = b1 * x[i] - a1 * out + z2;
    z2 = b2 * x[i] - a2 * out;
    y[i] = out;
  }
  return y;
}

}  // namespace

std::vector<double> filtfilt(const std::array<double, 5>& c, std::span<const double> x) {
  if (x.empty()) return {};
  const auto [b0, b1, b2, a1, a2] = c;
  // Steady-state state for a unit step: (I - A^T) zi = b[1:] - a[1:] b0.
  const double r1 = b1 - a1 * b0;
  const double r2 = b2 - a2 * b0;
  const double det = (1.0 + a1) + a2;
  const double zi1 = (r1 + r2) / det;
  const double zi2 = r2 - a2 * zi1;

  const std::size_t pad = std::min<std::size_t>(9, x.size() - 1);
  std::vector<double> ext;
  ext.reserve(x.size() + 2 * pad);
  for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x.front() - x[i]);
  ext.insert(ext.end(), x.begin(), x.end());
  for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x.back() - x[x.size() - 1 - i]);

  std::vector<double> y = lfilter(c, ext, zi1 * ext.front(), zi2 * ext.front());
  std::reverse(y.begin(), y.end());
  y = lfilter(c, y, zi1 * y.front(), zi2 * y.front());
  std::reverse(y.begin(), y.end());
  return {y.begin() + static_cast<std::ptrdiff_t>(pad), y.end() - static_cast<std::ptrdiff_t>(pad)};
}

ScalarSignal robot_speed(std::span<const double> t, std::span<const Eigen::Vector3d> X, double cutoff_hz) {
  if (t.size() != X.size()) fail(ErrorCode::kInvalidArgument, "timestamps and positions differ in length");
  if (t.size() < 2) fail(ErrorCode::kSignalTooShort, "speed needs at least two samples");
  const double T = (t.back() - t.front()) / static_cast<double>(t.size() - 1);
  if (!(T > 0.0)) fail(ErrorCode::kNonUniformSampling, "timestamps must increase");
  for (std::size_t i = 1; i < t.size(); ++i) {
    if (std::abs((t[i] - t[i - 1]) - T) > 1e-6 * T) fail(ErrorCode::kNonUniformSampling, "robot samples are not uniformly spaced");
  }
  std::vector<double> v(t.size() - 1);
  for (std::size_t k = 1; k < t.size(); ++k) v[k - 1] = (X[k] - X[k - 1]).norm() / T;
  const double fs = 1.0 / T;
  return {fs, filtfilt(butterworth2(cutoff_hz, fs), v)};
}

ScalarSignal resample_average(const ScalarSignal& s, double target_hz) {
  if (!(target_hz > 0.0) || !(s.rate_hz > 0.0)) fail(ErrorCode::kInvalidArgument, "sample rates must be positive");
  if (std::abs(target_hz - s.rate_hz) <= 1e-12 * s.rate_hz) return s;
  if (target_hz > s.rate_hz) fail(ErrorCode::kInvalidArgument, "resample_average only reduces the sample rate");
  const double ratio = s.rate_hz / target_hz;
  const auto n_out = static_cast<std::size_t>(std::floor((static_cast<double>(s.values.size()) - 0.5) / ratio + 0.5));
  ScalarSignal out{target_hz, {}};
  out.values.reserve(n_out);
  for (std::size_t k = 0; k < n_out; ++k) {
    const double lo = (static_cast<double>(k) - 0.5) * ratio;
    const double hi = (static_cast<double>(k) + 0.5) * ratio;
    const auto i0 = static_cast<std::size_t>(std::max(0.0, std::ceil(lo)));
    const auto i1 = std::min(s.values.size(), static_cast<std::size_t>(std::max(0.0, std::ceil(hi))));
    double sum = 0.0;
    for (std::size_t i = i0; i < i1; ++i) sum += s.values[i];
    out.values.push_back(i1 > i0 ? sum / static_cast<double>(i1 - i0) : 0.0);
  }
  return out;
}

namespace {

double pearson(const double* a, const double* b, std::size_t n) {
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = a[i] - ma;
    const double db = b[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa <= 0.0 || sbb <= 0.0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

SyncResult sync_offset(const ScalarSignal& camera, const ScalarSignal& robot, const SyncOptions& opts) {
  const ScalarSignal r = resample_average(robot, camera.rate_hz);
  const auto& a = camera.values;
  const auto& b = r.values;
  const std::size_t shorter = std::min(a.size(), b.size());
  const auto min_overlap = std::max<std::size_t>(
      3, static_cast<std::size_t>(std::ceil(opts.min_overlap_fraction * static_cast<double>(shorter))));
  if (shorter < min_overlap) fail(ErrorCode::kSignalTooShort, "signals are too short to correlate");

  long lo = -static_cast<long>(a.size() - min_overlap);
  long hi = static_cast<long>(b.size() - min_overlap);
  if (opts.max_lag >= 0) {
    lo = std::max(lo, -static_cast<long>(opts.max_lag));
    hi = std::min(hi, static_cast<long>(opts.max_lag));
  }
  if (lo > hi) fail(ErrorCode::kSignalTooShort, "no lag keeps the minimum overlap");

  SyncResult best;
  best.score = -2.0;
  for (long lag = lo; lag <= hi; ++lag) {
    // camera[i] pairs with robot[i + lag]
    const long i0 = std::max(0L, -lag);
    const long i1 = std::min(static_cast<long>(a.size()), static_cast<long>(b.size()) - lag);
    if (i1 - i0 < static_cast<long>(min_overlap)) continue;
    const double s = pearson(a.data() + i0, b.data() + i0 + lag, static_cast<std::size_t>(i1 - i0));
    if (s > best.score) {
      best.score = s;
      best.lag = static_cast<int>(lag);
    }
  }
  best.robot_lag = std::lround(best.lag * robot.rate_hz / camera.rate_hz);
  best.reliable = best.score >= opts.reliable_score;
  return best;
}

std::string format_sync_table(std::span<const SyncRow> rows) {
  std::size_t width = 8;
  for (const SyncRow& r : rows) width = std::max(width, r.sequence.size());
  std::ostringstream out;
  out << std::left << std::setw(static_cast<int>(width)) << "sequence" << "  start_frame -> robot_sample\n";
  for (const SyncRow& r : rows) {
    out << std::left << std::setw(static_cast<int>(width)) << r.sequence << "  " << r.start_frame << " -> "
        << r.robot_sample << '\n';
  }
  return out.str();
}

void write_sync_table(const std::filesystem::path& path, std::span<const SyncRow> rows) {
  write_file_atomic(path, format_sync_table(rows));
}

}  // namespace scopekit
