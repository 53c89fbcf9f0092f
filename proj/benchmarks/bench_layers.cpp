#include <benchmark/benchmark.h>

#include <random>

#include "rulforge/layers.hpp"

namespace {

using rulforge::Padding;
using rulforge::Tensor;

Tensor random_tensor(rulforge::Shape shape, std::uint64_t seed) {
  Tensor t(std::move(shape));
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

// args: window rows, filters in, dilation
void BM_Conv2dForward(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto channels = static_cast<std::size_t>(state.range(1));
  const auto dilation = static_cast<std::size_t>(state.range(2));
  const auto in = random_tensor({rows, 20, channels}, 1);
  const auto k = random_tensor({10, 1, channels, 32}, 2);
  const auto b = random_tensor({32}, 3);
  for (auto _ : state) benchmark::DoNotOptimize(rulforge::conv2d(in, k, b, dilation, Padding::same));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(rows * 20 * 32 * 10 * channels));
}
BENCHMARK(BM_Conv2dForward)->Args({161, 1, 1})->Args({161, 32, 2})->Args({80, 32, 2});

void BM_Conv2dBackward(benchmark::State& state) {
  const auto rows = static_cast<std::size_t>(state.range(0));
  const auto in = random_tensor({rows, 20, 32}, 1);
  const auto k = random_tensor({10, 1, 32, 32}, 2);
  const auto g = random_tensor({rows, 20, 32}, 3);
  Tensor d_in(in.shape()), d_k(k.shape()), d_b({32});
  for (auto _ : state) {
    rulforge::conv2d_backward(in, k, g, 2, Padding::same, &d_in, d_k, d_b);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_Conv2dBackward)->Arg(40)->Arg(161);

void BM_MaxPool(benchmark::State& state) {
  const auto in = random_tensor({161, 20, 32}, 1);
  std::vector<std::size_t> argmax;
  for (auto _ : state) benchmark::DoNotOptimize(rulforge::maxpool2d(in, 2, 1, &argmax));
}
BENCHMARK(BM_MaxPool);

}  // namespace
