#include <benchmark/benchmark.h>

#include <map>
#include <memory>
#include <random>

#include "pixgbp/baseline.hpp"
#include "pixgbp/datagen.hpp"
#include "pixgbp/gaussian.hpp"
#include "pixgbp/graph.hpp"
#include "pixgbp/lie.hpp"
#include "pixgbp/topology.hpp"

using namespace pixgbp;

namespace {

Tangent sample_tangent(std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  return Tangent(n(rng), n(rng), n(rng));
}

const ScenePair& scene_pair(int size) {
  static std::map<int, ScenePair> cache;
  auto it = cache.find(size);
  if (it == cache.end()) {
    SceneSpec spec;
    spec.size = size;
    const std::uint64_t seed = derive_seed(1, 0);
    it = cache.emplace(size, make_scene_pair(procedural_panorama(derive_seed(seed, 3)), spec, seed)).first;
  }
  return it->second;
}

void BM_ExpLog(benchmark::State& state) {
  std::mt19937_64 rng(1);
  const Tangent tau = sample_tangent(rng, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(log_map(exp_map(tau)));
}
BENCHMARK(BM_ExpLog);

void BM_RightJacobianInverse(benchmark::State& state) {
  std::mt19937_64 rng(2);
  const Tangent tau = sample_tangent(rng, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(right_jacobian_inv(tau));
}
BENCHMARK(BM_RightJacobianInverse);

void BM_Reframe(benchmark::State& state) {
  std::mt19937_64 rng(3);
  const Eigen::Matrix3d a = Eigen::Matrix3d::Random();
  const LieGaussian msg{exp_map(sample_tangent(rng, 1.0)),
                        Gaussian3(Eigen::Vector3d(0.01, 0.02, -0.01) * 10.0, a * a.transpose() * 10.0 +
                                                                                 Eigen::Matrix3d::Identity())};
  const Rotation target = oplus(msg.frame, sample_tangent(rng, 0.01));
  for (auto _ : state) benchmark::DoNotOptimize(reframe(msg, target));
}
BENCHMARK(BM_Reframe);

void BM_ReframeAfterStep(benchmark::State& state) {
  std::mt19937_64 rng(4);
  const Gaussian3 msg(Eigen::Vector3d(0.1, 0.2, -0.1), Eigen::Matrix3d::Identity() * 1e4);
  const FrameStep step(sample_tangent(rng, 1e-3));
  for (auto _ : state) benchmark::DoNotOptimize(reframe_after_step(msg, step));
}
BENCHMARK(BM_ReframeAfterStep);

void BM_Sweep(benchmark::State& state, TopologyKind kind) {
  const int size = static_cast<int>(state.range(0));
  const ScenePair& pair = scene_pair(size);
  const FactorParams params = kind == TopologyKind::Flat ? FactorParams::flat_defaults() : FactorParams::sharded_defaults();
  FactorGraph g = build_topology({kind, size, size, params});
  g.set_scene(std::make_shared<const PhotometricScene>(pair.left, pair.right, pair.intrinsics));
  GbpSolver solver;
  for (auto _ : state) benchmark::DoNotOptimize(solver.sweep(g));
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(g.num_variables()));
}
BENCHMARK_CAPTURE(BM_Sweep, flat, TopologyKind::Flat)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(BM_Sweep, sharded, TopologyKind::Sharded)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_CentralizedStep(benchmark::State& state) {
  const ScenePair& pair = scene_pair(64);
  const PhotometricScene scene(pair.left, pair.right, pair.intrinsics);
  for (auto _ : state) benchmark::DoNotOptimize(photometric_energy(scene, Rotation()));
}
BENCHMARK(BM_CentralizedStep)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
