#include <benchmark/benchmark.h>

#include "rulforge/bayes_opt.hpp"

namespace {

using namespace rulforge;

std::vector<Observation> history(const SearchSpace& space, std::size_t n) {
  std::mt19937_64 rng(1);
  std::vector<Observation> h;
  for (std::size_t i = 0; i < n; ++i) {
    auto p = space.sample(rng);
    double s = 0.0;
    for (double u : space.encode(p)) s += (u - 0.4) * (u - 0.4);
    h.push_back({std::move(p), s});
  }
  return h;
}

// Cost of one model-guided proposal on the level-1 space with n prior trials.
void BM_SuggestNext(benchmark::State& state) {
  const auto space = level_space(Level::l1);
  const auto h = history(space, static_cast<std::size_t>(state.range(0)));
  std::mt19937_64 rng(3);
  for (auto _ : state) benchmark::DoNotOptimize(suggest_next(space, h, rng));
}
BENCHMARK(BM_SuggestNext)->Arg(10)->Arg(50)->Arg(99)->Unit(benchmark::kMillisecond);

}  // namespace
