#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <random>

#include "scopekit/esab.hpp"

namespace scopekit::testkit {

/// Dense non-local block built from explicit position-by-position matrices.
inline Tensor4 esab_dense_oracle(const Tensor4& X, const EsabWeights& W) {
  using Mat = Eigen::MatrixXd;
  auto kernel = [](const Conv1x1& k) {
    Mat m(k.out, k.in);
    for (int o = 0; o < k.out; ++o) {
      for (int i = 0; i < k.in; ++i) m(o, i) = k.weight[static_cast<std::size_t>(o) * k.in + i];
    }
    return m;
  };
  auto bias = [](const Conv1x1& k) {
    Eigen::VectorXd b(k.out);
    for (int o = 0; o < k.out; ++o) b[o] = k.bias[static_cast<std::size_t>(o)];
    return b;
  };
  const int p = W.pool;
  const int ph = (X.h() + p - 1) / p;
  const int pw = (X.w() + p - 1) / p;
  const int N = X.h() * X.w();
  const int Np = ph * pw;

  Tensor4 F = X;
  for (int n = 0; n < X.n(); ++n) {
    Mat x(X.c(), N);
    for (int c = 0; c < X.c(); ++c) {
      for (int y = 0; y < X.h(); ++y) {
        for (int xx = 0; xx < X.w(); ++xx) x(c, y * X.w() + xx) = X.at(n, c, y, xx);
      }
    }
    auto branch = [&](const Conv1x1& k) {
      const Mat full = (kernel(k) * x).colwise() + bias(k);
      Mat pooled = Mat::Constant(k.out, Np, -1e300);
      for (int y = 0; y < X.h(); ++y) {
        for (int xx = 0; xx < X.w(); ++xx) {
          const int j = (y / p) * pw + xx / p;
          pooled.col(j) = pooled.col(j).cwiseMax(full.col(y * X.w() + xx));
        }
      }
      return pooled;
    };
    const Mat theta = branch(W.theta);
    const Mat phi = branch(W.phi);
    const Mat g = branch(W.g);
    Mat P = (theta.transpose() * phi).cwiseMax(0.0) * static_cast<double>(W.psi.weight[0]);
    P.array() += W.psi.bias[0];
    Mat A(Np, Np);
    for (int i = 0; i < Np; ++i) {
      const Eigen::RowVectorXd e = (P.row(i).array() - P.row(i).maxCoeff()).exp();
      A.row(i) = e / e.sum();
    }
    const Mat attended = A * g.transpose();
    const Mat S = (kernel(W.out_proj) * attended.transpose()).colwise() + bias(W.out_proj);
    for (int c = 0; c < X.c(); ++c) {
      for (int y = 0; y < X.h(); ++y) {
        for (int xx = 0; xx < X.w(); ++xx) {
          F.at(n, c, y, xx) = static_cast<float>(X.at(n, c, y, xx) + S(c, (y / p) * pw + xx / p));
        }
      }
    }
  }
  return F;
}

inline Tensor4 random_tensor(int n, int c, int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(-1.0f, 1.0f);
  Tensor4 t(n, c, h, w);
  for (float& v : t.data()) v = u(rng);
  return t;
}

inline float max_abs_diff(const Tensor4& a, const Tensor4& b) {
  float m = 0.0f;
  for (std::size_t i = 0; i < a.data().size(); ++i) m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  return m;
}

}  // namespace scopekit::testkit
