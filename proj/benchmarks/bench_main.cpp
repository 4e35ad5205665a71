#include <benchmark/benchmark.h>

#include <random>

#include "kansid/dataset.hpp"
#include "kansid/kan.hpp"
#include "kansid/plant.hpp"
#include "kansid/spline.hpp"
#include "kansid/train.hpp"

using namespace kansid;

namespace {

std::vector<double> uniform(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (double& x : v) x = u(rng);
  return v;
}

SidDataset random_dataset(std::size_t rows) {
  SidDataset ds;
  ds.input_labels = {"i_L", "v_C", "D"};
  ds.inputs = uniform(rows * 3, 1);
  ds.targets = uniform(rows, 2);
  ds.ts_seconds = 25e-6;
  return ds;
}

void BM_LocalBasis(benchmark::State& state) {
  const SplineGrid grid = make_uniform_grid(-1.0, 1.0, 5, static_cast<int>(state.range(0)));
  const auto xs = uniform(1024, 3);
  LocalBasis b;
  for (auto _ : state) {
    for (double x : xs) {
      local_basis(grid, x, b);
      benchmark::DoNotOptimize(b.values[0]);
    }
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(xs.size()));
}
BENCHMARK(BM_LocalBasis)->Arg(1)->Arg(3)->Arg(5);

void BM_Forward(benchmark::State& state) {
  const KanNetwork net = make_network({3, static_cast<std::size_t>(state.range(0)), 1}, {}, 4);
  const auto g = uniform(3, 5);
  for (auto _ : state) benchmark::DoNotOptimize(evaluate(net, g));
}
BENCHMARK(BM_Forward)->Arg(1)->Arg(4)->Arg(16);

void BM_ForwardBackward(benchmark::State& state) {
  const KanNetwork net = make_network({3, static_cast<std::size_t>(state.range(0)), 1}, {}, 4);
  const auto g = uniform(3, 5);
  const std::vector<double> up{1.0};
  for (auto _ : state) {
    const auto fw = forward(net, g);
    benchmark::DoNotOptimize(backward(net, fw.cache, up));
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(1)->Arg(4)->Arg(16);

void BM_Objective(benchmark::State& state) {
  const SidDataset ds = random_dataset(static_cast<std::size_t>(state.range(0)));
  const KanNetwork net = make_network({3, 1}, ds.input_labels, 6);
  const TrainConfig cfg;
  for (auto _ : state) benchmark::DoNotOptimize(objective(net, ds, cfg));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Objective)->Arg(1000)->Arg(20000);

void BM_SimulatePlant(benchmark::State& state) {
  SimulationOptions opt;
  opt.duration_s = 0.1;
  for (auto _ : state) {
    benchmark::DoNotOptimize(simulate_plant(BuckParams{}, PiController{}, default_training_profile(), opt));
  }
  state.SetItemsProcessed(state.iterations() * 4001);
}
BENCHMARK(BM_SimulatePlant)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
