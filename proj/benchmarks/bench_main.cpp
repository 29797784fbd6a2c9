// SPDX-License-Identifier: Apache-2.0

#include <benchmark/benchmark.h>

#include "adapt/model.hpp"
#include "adapt/numerics/ops.hpp"
#include "adapt/slicer.hpp"
#include "adapt/trainer.hpp"

namespace {

using namespace adapt;

nn::Tensor<float> random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<float> v(r * c);
  for (auto& x : v) x = static_cast<float>(standard_normal(rng));
  return nn::Tensor<float>({r, c}, std::move(v));
}

std::vector<Volume> phantoms(std::size_t n, std::uint32_t size, std::uint64_t seed) {
  Rng rng(seed);
  const auto spec = PhantomSpec::for_size(size);
  std::vector<Volume> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back(generate_phantom(spec, static_cast<Label>(i % 2 == 0 ? 0 : 2), rng));
  return out;
}

void BM_Matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n, n, 1);
  const auto b = random_matrix(n, n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(nn::matmul(a, b));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(2 * n * n * n));
}
BENCHMARK(BM_Matmul)->Arg(64)->Arg(128)->Arg(256);

void BM_Softmax(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_matrix(n, n, 3);
  for (auto _ : state) benchmark::DoNotOptimize(nn::softmax(a, 1));
}
BENCHMARK(BM_Softmax)->Arg(64)->Arg(256);

void BM_ModelForward(benchmark::State& state) {
  const auto config = model::AdaptConfig::desk();
  const model::AdaptModel<float> m(config, 7);
  const auto vol = prepare_volume(phantoms(1, config.image_extent, 5).front(), config.image_extent);
  const auto stack = extract_slices(vol, SliceAllocation::uniform(config.n_total, config.n_min, config.n_max));
  for (auto _ : state) benchmark::DoNotOptimize(m.forward(stack));
}
BENCHMARK(BM_ModelForward)->Unit(benchmark::kMillisecond);

// One epoch over a single batch of four volumes plus a two-volume validation pass.
void BM_TrainEpoch(benchmark::State& state) {
  const auto data = phantoms(6, 64, 11);
  const std::vector<Volume> train(data.begin(), data.begin() + 4);
  const std::vector<Volume> val(data.begin() + 4, data.end());
  TrainConfig config;
  config.epochs = 1;
  config.augment = false;
  for (auto _ : state) {
    Trainer t(config);
    benchmark::DoNotOptimize(t.run_epoch(train, val));
  }
}
BENCHMARK(BM_TrainEpoch)->Unit(benchmark::kMillisecond)->Iterations(3);

}  // namespace

BENCHMARK_MAIN();
