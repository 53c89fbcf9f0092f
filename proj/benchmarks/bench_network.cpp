#include <benchmark/benchmark.h>

#include "rulforge/data.hpp"
#include "rulforge/network.hpp"
#include "rulforge/search_space.hpp"

namespace {

using namespace rulforge;

NetworkSpec reference_net(std::size_t filters) {
  return build_network(make_template(reference_level1_hyperparams(), {161, kNumVariables, 1}, filters));
}

void BM_Forward(benchmark::State& state) {
  const auto spec = reference_net(static_cast<std::size_t>(state.range(0)));
  const auto params = init_params(spec, 1);
  const Tensor x(spec.input_shape, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(forward(spec, params, x, Mode::infer));
}
BENCHMARK(BM_Forward)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_ForwardBackward(benchmark::State& state) {
  const auto spec = reference_net(static_cast<std::size_t>(state.range(0)));
  const auto params = init_params(spec, 1);
  const Tensor x(spec.input_shape, 0.1);
  std::mt19937_64 rng(2);
  for (auto _ : state) {
    const auto fwd = forward(spec, params, x, Mode::train, &rng);
    benchmark::DoNotOptimize(backward(spec, params, fwd.tape, 1.0));
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(8)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace
