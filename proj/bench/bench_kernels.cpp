// Serial reference vs OpenMP kernels. Arg: point count (or cameras for the
// solver benchmark).

#include <map>
#include <tuple>

#include <benchmark/benchmark.h>

#include "eucal/kernels.hpp"
#include "eucal/solver.hpp"
#include "eucal/synthetic.hpp"

namespace {

using namespace eucal;

const GroundTruth& scene(int cameras, int points, double noise) {
  static std::map<std::tuple<int, int, double>, GroundTruth> cache;
  auto it = cache.find({cameras, points, noise});
  if (it == cache.end()) {
    SceneSpec spec;
    spec.cameras = cameras;
    spec.points = points;
    spec.noise_sigma = noise;
    it = cache.emplace(std::tuple{cameras, points, noise}, generate(spec)).first;
  }
  return it->second;
}

template <bool Parallel>
void BM_Triangulate(benchmark::State& state) {
  const GroundTruth& g = scene(3, static_cast<int>(state.range(0)), 0.5);
  for (auto _ : state) {
    auto out = Parallel ? kernels::triangulate_parallel(g.noisy, 125.0, 1.0, {})
                        : kernels::triangulate_serial(g.noisy, 125.0, 1.0, {});
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

template <bool Parallel>
void BM_Reprojection(benchmark::State& state) {
  const GroundTruth& g = scene(8, static_cast<int>(state.range(0)), 0.5);
  for (auto _ : state) {
    auto out = Parallel ? kernels::reprojection_parallel(g.cameras, g.points, g.noisy)
                        : kernels::reprojection_serial(g.cameras, g.points, g.noisy);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * 8 * state.range(0));
}

template <ExecutionPolicy Policy>
void BM_Calibrate(benchmark::State& state) {
  const GroundTruth& g = scene(static_cast<int>(state.range(0)), 57, 0.5);
  SolverConfig config;
  config.policy = Policy;
  for (auto _ : state) {
    auto r = calibrate(g.noisy, StereoRig(125.0), config);
    benchmark::DoNotOptimize(r.f1);
  }
}

BENCHMARK(BM_Triangulate<false>)->Name("triangulate/serial")->Arg(10000)->Arg(200000);
BENCHMARK(BM_Triangulate<true>)->Name("triangulate/parallel")->Arg(10000)->Arg(200000);
BENCHMARK(BM_Reprojection<false>)->Name("reprojection/serial")->Arg(10000)->Arg(200000);
BENCHMARK(BM_Reprojection<true>)->Name("reprojection/parallel")->Arg(10000)->Arg(200000);
BENCHMARK(BM_Calibrate<ExecutionPolicy::Serial>)
    ->Name("calibrate/serial")->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_Calibrate<ExecutionPolicy::Parallel>)
    ->Name("calibrate/parallel")->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
