#include "roughflow/rough_lift.hpp"
#include "roughflow/tensor_algebra.hpp"

#include <benchmark/benchmark.h>

using namespace roughflow;

namespace {

GridRoughPath driver(int d, int level) { return brownian_rough_path(sample_brownian(d, 1.0, 14, 42), level); }

void BM_QueryIncrement(benchmark::State& state) {
  const GridRoughPath W = driver(static_cast<int>(state.range(0)), 10);
  double s = 0.0;
  for (auto _ : state) {
    s += 0.000377;
    if (s > 0.5) s -= 0.5;
    benchmark::DoNotOptimize(W.increment(s, s + 0.4));
  }
}
BENCHMARK(BM_QueryIncrement)->Arg(1)->Arg(2)->Arg(4);

void BM_LiftPiecewiseLinear(benchmark::State& state) {
  const PiecewisePath w = dyadic_approx(sample_brownian(2, 1.0, 14, 42), static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(lift_piecewise_linear(w, 0.4));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_LiftPiecewiseLinear)->DenseRange(6, 12, 2);

void BM_HolderNorms(benchmark::State& state) {
  const GridRoughPath W = driver(2, static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(holder_norms(W));
}
BENCHMARK(BM_HolderNorms)->Arg(6)->Arg(8)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_BrownianSample(benchmark::State& state) {
  for (auto _ : state) benchmark::DoNotOptimize(sample_brownian(2, 1.0, static_cast<int>(state.range(0)), 42));
}
BENCHMARK(BM_BrownianSample)->Arg(10)->Arg(14);

}  // namespace
