// Serial reference vs OpenMP kernels. Second argument is the thread count
// (0 = serial).

#include <benchmark/benchmark.h>

#include <random>

#include "hate/kernels.hpp"
#include "hate/synthetic.hpp"

using namespace hate;

namespace {

struct Fixture {
  SplitDataset data;
  ModelParams params;
  NoiseDistribution noise{Vec{1.0}};
  std::vector<BatchItem> batch;

  explicit Fixture(std::size_t batch_size) {
    synthetic::PlantedShape shape{.keys = 100, .noise = 800, .window = 3, .train = 4000, .test = 1000};
    data = synthetic::planted_inter_signal(shape, 1);
    std::mt19937_64 rng(2);
    params = init_params(Variant::hate, data.vocab.size(), 50, 3, rng);
    noise = build_noise_distribution(data.train, data.vocab.size(), 0.75);
    for (std::size_t i = 0; i < batch_size; ++i)
      batch.push_back({&data.train[i], draw_noise(noise, data.train[i].target, 10, rng), i});
  }
};

const Fixture& fixture() {
  static const Fixture f(256);
  return f;
}

void BM_BatchGradients(benchmark::State& state) {
  const auto& f = fixture();
  const auto n = static_cast<std::size_t>(state.range(0));
  const int threads = static_cast<int>(state.range(1));
  std::span<const BatchItem> batch(f.batch.data(), n);
  for (auto _ : state) {
    auto r = threads == 0 ? batch_gradients_serial(f.params, batch, f.noise)
                          : batch_gradients_parallel(f.params, batch, f.noise, threads);
    benchmark::DoNotOptimize(r.losses.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

void BM_RankTargets(benchmark::State& state) {
  const auto& f = fixture();
  const int threads = static_cast<int>(state.range(0));
  std::span<const TrainingInstance> test(f.data.test.data(), 200);
  for (auto _ : state) {
    auto r = threads == 0 ? rank_targets_serial(f.params, test) : rank_targets_parallel(f.params, test, threads);
    benchmark::DoNotOptimize(r.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * test.size()));
}

}  // namespace

BENCHMARK(BM_BatchGradients)->ArgsProduct({{30, 256}, {0, 1, 2, 4}})->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_RankTargets)->Arg(0)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
