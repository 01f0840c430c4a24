#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace scopekit {

/// Dense NCHW float tensor.
class Tensor4 {
 public:
  Tensor4() = default;
  Tensor4(int n, int c, int h, int w, float fill = 0.0f);

  [[nodiscard]] int n() const { return n_; }
  [[nodiscard]] int c() const { return c_; }
  [[nodiscard]] int h() const { return h_; }
  [[nodiscard]] int w() const { return w_; }

  float& at(int n, int c, int y, int x) { return data_[index(n, c, y, x)]; }
  [[nodiscard]] float at(int n, int c, int y, int x) const { return data_[index(n, c, y, x)]; }

  [[nodiscard]] std::vector<float>& data() { return data_; }
  [[nodiscard]] const std::vector<float>& data() const { return data_; }

  [[nodiscard]] bool same_shape(const Tensor4& o) const { return n_ == o.n_ && c_ == o.c_ && h_ == o.h_ && w_ == o.w_; }
  bool operator==(const Tensor4&) const = default;

 private:
  [[nodiscard]] std::size_t index(int n, int c, int y, int x) const {
    return ((static_cast<std::size_t>(n) * c_ + c) * h_ + y) * w_ + x;
  }

  int n_ = 0, c_ = 0, h_ = 0, w_ = 0;
  std::vector<float> data_;
};

/// Pointwise convolution y[o] = sum_i weight[o * in + i] x[i] + bias[o].
struct Conv1x1 {
  int out = 0;
  int in = 0;
  std::vector<float> weight;
  std::vector<float> bias;

  Conv1x1() = default;
  Conv1x1(int out_channels, int in_channels);
  [[nodiscard]] bool consistent() const {
    return out > 0 && in > 0 && weight.size() == static_cast<std::size_t>(out) * in && bias.size() == static_cast<std::size_t>(out);
  }
};

/// theta, phi and g map the input to the bottleneck; psi is a scalar map applied
/// to each rectified affinity; out_proj maps the attended features back to the
/// input channels.
struct EsabWeights {
  Conv1x1 theta;
  Conv1x1 phi;
  Conv1x1 g;
  Conv1x1 psi;
  Conv1x1 out_proj;
  int pool = 2;

  /// Throws ChannelChainBroken unless the kernels chain input -> bottleneck -> input.
  void validate(int input_channels) const;
  [[nodiscard]] int bottleneck() const { return theta.out; }
};

inline constexpr int kEsabChannels = 64;

/// Deterministic fixture weights drawn uniformly from [-scale, scale].
EsabWeights random_esab_weights(std::uint64_t seed, int channels = kEsabChannels, int bottleneck = 32, int pool = 2,
                                float scale = 0.1f);

/// Spatial attention block:
///   P = psi(ReLU(theta(X)^T phi(X))) over max-pooled positions
///   S = up(out_proj(softmax(P) g(X)))
///   F = X + S
/// Pooling is max over pool x pool cells (ceil mode) and `up` is nearest
/// neighbour. Throws ShapeMismatch unless X has `expected_channels` channels.
Tensor4 esab_forward(const Tensor4& X, const EsabWeights& W, int expected_channels = kEsabChannels);

/// Weights fixture: a text manifest
///
///   pool 2
///   blob esab.bin
///   theta.weight 32 64 0
///   theta.bias 32 1 8192
///   ...
///
/// naming each kernel's rows, cols and byte offset into a little-endian
/// float32 blob (path relative to the manifest).
EsabWeights load_esab_weights(const std::filesystem::path& manifest);
void save_esab_weights(const std::filesystem::path& manifest, const EsabWeights& w);

}  // namespace scopekit
