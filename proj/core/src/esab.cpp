#include "scopekit/esab.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <random>

#include "scopekit/error.hpp"
#include "scopekit/parallel.hpp"

namespace scopekit {

Tensor4::Tensor4(int n, int c, int h, int w, float fill) : n_(n), c_(c), h_(h), w_(w) {
  if (n < 0 || c < 0 || h < 0 || w < 0) fail(ErrorCode::kShapeMismatch, "tensor dimensions must be non-negative");
  data_.assign(static_cast<std::size_t>(n) * c * h * w, fill);
}

Conv1x1::Conv1x1(int out_channels, int in_channels)
    : out(out_channels),
      in(in_channels),
      weight(static_cast<std::size_t>(out_channels) * in_channels, 0.0f),
      bias(static_cast<std::size_t>(out_channels), 0.0f) {}

void EsabWeights::validate(int input_channels) const {
  for (const Conv1x1* k : {&theta, &phi, &g, &psi, &out_proj}) {
    if (!k->consistent()) fail(ErrorCode::kChannelChainBroken, "kernel storage does not match its shape");
  }
  const int b = theta.out;
  if (theta.in != input_channels || phi.in != input_channels || g.in != input_channels) {
    fail(ErrorCode::kChannelChainBroken, "theta/phi/g must read the input channels");
  }
  if (phi.out != b || g.out != b) fail(ErrorCode::kChannelChainBroken, "theta/phi/g bottlenecks differ");
  if (psi.in != 1 || psi.out != 1) fail(ErrorCode::kChannelChainBroken, "psi must be a 1x1 scalar map");
  if (out_proj.in != b || out_proj.out != input_channels) {
    fail(ErrorCode::kChannelChainBroken, "output projection must map the bottleneck back to the input channels");
  }
  if (pool < 1) fail(ErrorCode::kChannelChainBroken, "pool factor must be at least 1");
}

EsabWeights random_esab_weights(std::uint64_t seed, int channels, int bottleneck, int pool, float scale) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> dist(-scale, scale);
  auto make = [&](int out, int in) {
    Conv1x1 k(out, in);
    for (float& v : k.weight) v = dist(rng);
    for (float& v : k.bias) v = dist(rng);
    return k;
  };
  EsabWeights w;
  w.theta = make(bottleneck, channels);
  w.phi = make(bottleneck, channels);
  w.g = make(bottleneck, channels);
  w.psi = make(1, 1);
  w.out_proj = make(channels, bottleneck);
  w.pool = pool;
  return w;
}

namespace {

// Applies a 1x1 conv to one batch item and max-pools the result. Returns
// [position][channel] rows in double precision.
std::vector<double> pooled_branch(const Tensor4& X, int n, const Conv1x1& k, int pool, int ph, int pw) {
  const int h = X.h();
  const int w = X.w();
  std::vector<double> full(static_cast<std::size_t>(h) * w * k.out);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double* dst = &full[(static_cast<std::size_t>(y) * w + x) * k.out];
      for (int o = 0; o < k.out; ++o) {
        double acc = k.bias[static_cast<std::size_t>(o)];
        const float* row = &k.weight[static_cast<std::size_t>(o) * k.in];
        for (int i = 0; i < k.in; ++i) acc += static_cast<double>(row[i]) * X.at(n, i, y, x);
        dst[o] = acc;
      }
    }
  }
  if (pool == 1) return full;
  std::vector<double> out(static_cast<std::size_t>(ph) * pw * k.out, -std::numeric_limits<double>::infinity());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const double* src = &full[(static_cast<std::size_t>(y) * w + x) * k.out];
      double* dst = &out[(static_cast<std::size_t>(y / pool) * pw + x / pool) * k.out];
      for (int o = 0; o < k.out; ++o) dst[o] = std::max(dst[o], src[o]);
    }
  }
  return out;
}

}  // namespace

Tensor4 esab_forward(const Tensor4& X, const EsabWeights& W, int expected_channels) {
  if (X.c() != expected_channels) fail(ErrorCode::kShapeMismatch, "ESAB input has the wrong channel count");
  if (X.n() < 1 || X.h() < 1 || X.w() < 1) fail(ErrorCode::kShapeMismatch, "ESAB input is empty");
  W.validate(X.c());

  const int pool = W.pool;
  const int ph = (X.h() + pool - 1) / pool;
  const int pw = (X.w() + pool - 1) / pool;
  const std::size_t np = static_cast<std::size_t>(ph) * pw;
  const int b = W.bottleneck();
  const double psi_w = W.psi.weight[0];
  const double psi_b = W.psi.bias[0];

  Tensor4 F = X;
  parallel_for(0, static_cast<std::size_t>(X.n()), [&](std::size_t item) {
    const int n = static_cast<int>(item);
    const std::vector<double> th = pooled_branch(X, n, W.theta, pool, ph, pw);
    const std::vector<double> ph_ = pooled_branch(X, n, W.phi, pool, ph, pw);
    const std::vector<double> gg = pooled_branch(X, n, W.g, pool, ph, pw);

    std::vector<double> attended(np * b, 0.0);
    std::vector<double> row(np);
    for (std::size_t i = 0; i < np; ++i) {
      double row_max = -std::numeric_limits<double>::infinity();
      for (std::size_t j = 0; j < np; ++j) {
        double dot = 0.0;
        for (int c = 0; c < b; ++c) dot += th[i * b + c] * ph_[j * b + c];
        row[j] = psi_w * std::max(dot, 0.0) + psi_b;
        row_max = std::max(row_max, row[j]);
      }
      double sum = 0.0;
      for (std::size_t j = 0; j < np; ++j) {
        row[j] = std::exp(row[j] - row_max);
        sum += row[j];
      }
      double check = 0.0;
      for (std::size_t j = 0; j < np; ++j) {
        row[j] /= sum;
        check += row[j];
      }
      assert(std::abs(check - 1.0) < 1e-6);
      (void)check;
      double* dst = &attended[i * b];
      for (std::size_t j = 0; j < np; ++j) {
        for (int c = 0; c < b; ++c) dst[c] += row[j] * gg[j * b + c];
      }
    }

    // Output projection at pooled resolution, then nearest upsampling.
    const Conv1x1& P = W.out_proj;
    std::vector<double> proj(np * P.out);
    for (std::size_t i = 0; i < np; ++i) {
      for (int o = 0; o < P.out; ++o) {
        double acc = P.bias[static_cast<std::size_t>(o)];
        const float* wrow = &P.weight[static_cast<std::size_t>(o) * P.in];
        for (int c = 0; c < b; ++c) acc += static_cast<double>(wrow[c]) * attended[i * b + c];
        proj[i * P.out + o] = acc;
      }
    }
    for (int c = 0; c < X.c(); ++c) {
      for (int y = 0; y < X.h(); ++y) {
        for (int x = 0; x < X.w(); ++x) {
          const std::size_t i = static_cast<std::size_t>(y / pool) * pw + x / pool;
          F.at(n, c, y, x) = static_cast<float>(X.at(n, c, y, x) + proj[i * P.out + c]);
        }
      }
    }
  });
  return F;
}

}  // namespace scopekit
