#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "esab_oracle.hpp"
#include "scopekit/error.hpp"
#include "scopekit/esab.hpp"

using namespace scopekit;
using testkit::max_abs_diff;
using testkit::random_tensor;

TEST(Esab, MatchesDenseOracleWithoutPooling) {
  const Tensor4 X = random_tensor(1, 64, 8, 8, 1);
  const EsabWeights W = random_esab_weights(2, 64, 32, 1, 0.2f);
  EXPECT_LT(max_abs_diff(esab_forward(X, W), testkit::esab_dense_oracle(X, W)), 1e-5f);
}

TEST(Esab, MatchesDenseOracleWithPooling) {
  for (int pool : {2, 3}) {
    const Tensor4 X = random_tensor(2, 64, 7, 10, 3);
    const EsabWeights W = random_esab_weights(4, 64, 16, pool, 0.2f);
    EXPECT_LT(max_abs_diff(esab_forward(X, W), testkit::esab_dense_oracle(X, W)), 1e-5f) << pool;
  }
}

TEST(Esab, PreservesShape) {
  std::mt19937 rng(5);
  std::uniform_int_distribution<int> dim(1, 12), batch(1, 3), pool(1, 3);
  for (int i = 0; i < 20; ++i) {
    const Tensor4 X = random_tensor(batch(rng), 64, dim(rng), dim(rng), 6 + i);
    const Tensor4 F = esab_forward(X, random_esab_weights(i, 64, 32, pool(rng)));
    EXPECT_TRUE(F.same_shape(X));
  }
  const Tensor4 X = random_tensor(2, 64, 16, 16, 7);
  EXPECT_TRUE(esab_forward(X, random_esab_weights(8)).same_shape(X));
}

TEST(Esab, ZeroProjectionIsResidualIdentity) {
  const Tensor4 X = random_tensor(2, 64, 9, 5, 9);
  EsabWeights W = random_esab_weights(10);
  std::fill(W.out_proj.weight.begin(), W.out_proj.weight.end(), 0.0f);
  std::fill(W.out_proj.bias.begin(), W.out_proj.bias.end(), 0.0f);
  EXPECT_TRUE(esab_forward(X, W) == X);
}

TEST(Esab, ResidualShrinksLinearly) {
  const Tensor4 X = random_tensor(1, 64, 6, 6, 11);
  const EsabWeights W = random_esab_weights(12);
  auto deviation = [&](float eps) {
    EsabWeights s = W;
    for (float& v : s.out_proj.weight) v *= eps;
    for (float& v : s.out_proj.bias) v *= eps;
    return max_abs_diff(esab_forward(X, s), X);
  };
  const float d1 = deviation(1e-1f);
  const float d2 = deviation(1e-2f);
  EXPECT_GT(d1, 0.0f);
  EXPECT_NEAR(d2 / d1, 0.1f, 0.01f);
}

TEST(Esab, RejectsBadShapes) {
  try {
    esab_forward(random_tensor(1, 32, 4, 4, 13), random_esab_weights(14));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kShapeMismatch);
  }
  EsabWeights W = random_esab_weights(15);
  W.g = Conv1x1(16, 64);
  try {
    esab_forward(random_tensor(1, 64, 4, 4, 16), W);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kChannelChainBroken);
  }
}

TEST(EsabIo, ManifestRoundTrip) {
  const EsabWeights W = random_esab_weights(17, 64, 32, 3);
  const auto dir = std::filesystem::temp_directory_path() / "scopekit_esab_io";
  std::filesystem::create_directories(dir);
  save_esab_weights(dir / "esab.txt", W);
  const EsabWeights back = load_esab_weights(dir / "esab.txt");
  std::filesystem::remove_all(dir);
  EXPECT_EQ(back.pool, 3);
  EXPECT_EQ(back.theta.weight, W.theta.weight);
  EXPECT_EQ(back.out_proj.bias, W.out_proj.bias);
  EXPECT_EQ(back.psi.weight, W.psi.weight);
}
