#include <benchmark/benchmark.h>

#include <random>

#include "clouds.hpp"
#include "render.hpp"
#include "traj_oracle.hpp"
#include "scopekit/esab.hpp"
#include "scopekit/icp.hpp"
#include "scopekit/traj_metrics.hpp"
#include "scopekit/warp_loss.hpp"

using namespace scopekit;

namespace {

void BM_AteRpe(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const auto [gt, est] = testkit::random_trajectory_pair(rng, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ate(gt, est).stats.rmse);
    benchmark::DoNotOptimize(rpe(gt, est, 1).trans.rmse);
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_AteRpe)->Arg(50)->Arg(1000)->Arg(10000);

void BM_EsabForward(benchmark::State& state) {
  const int side = static_cast<int>(state.range(0));
  std::mt19937 rng(2);
  std::normal_distribution<float> g;
  Tensor4 X(1, kEsabChannels, side, side);
  for (float& v : X.data()) v = g(rng);
  const EsabWeights W = random_esab_weights(3, kEsabChannels, 32, static_cast<int>(state.range(1)));
  for (auto _ : state) benchmark::DoNotOptimize(esab_forward(X, W));
}
BENCHMARK(BM_EsabForward)->Args({8, 1})->Args({16, 2})->Args({32, 2});

void BM_Icp(benchmark::State& state) {
  const PointCloud src = testkit::surface_cloud(static_cast<std::size_t>(state.range(0)), 4);
  std::mt19937_64 rng(5);
  const PointCloud dst = testkit::transformed(src, testkit::random_rigid(rng, 10.0, 10.0));
  const auto target = make_cloud_target(dst);
  for (auto _ : state) benchmark::DoNotOptimize(icp(src, *target).rmse);
}
BENCHMARK(BM_Icp)->Arg(1000)->Arg(10000)->Unit(benchmark::kMillisecond);

void BM_TotalLoss(benchmark::State& state) {
  const int w = static_cast<int>(state.range(0));
  const int h = w * 3 / 4;
  const CameraIntrinsics K = testkit::render_camera(w, h, 0.6 * w);
  const testkit::PlaneTexture tex(6);
  const Pose motion = Pose::from_axis_angle(Eigen::Vector3d::UnitY(), 0.02, {0.002, 0.001, 0.0});
  const ImageBuffer ref = testkit::render_plane(tex, K, 0.05);
  const ImageBuffer src = testkit::render_plane(tex, K, 0.05, motion);
  const DepthMap depth = testkit::render_plane_depth(K, 0.05);
  const LossInputs in{&ref, &src, &depth, &depth, motion, K, nullptr, std::nullopt};
  for (auto _ : state) benchmark::DoNotOptimize(total_loss(in, LossWeights{}).total);
}
BENCHMARK(BM_TotalLoss)->Arg(64)->Arg(256);

}  // namespace

BENCHMARK_MAIN();
