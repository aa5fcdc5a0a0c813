#include "roughflow/foliated.hpp"
#include "roughflow/rough_lift.hpp"

#include <benchmark/benchmark.h>

using namespace roughflow;

namespace {

void BM_FoliatedSolve(benchmark::State& state) {
  const char* kinds[] = {"circle", "cantor", "finite"};
  const auto Z = make_transversal(kinds[state.range(0)]);
  const SuspensionSpace S(Z);
  const auto V = make_leafwise_field("bump_drift", Z, 1);
  const GridRoughPath W = dilate(brownian_rough_path(sample_brownian(1, 1.0, 14, 42), 8), 2.0);
  SolveConfig cfg;
  cfg.refine = false;
  cfg.base_subdiv = 8;
  const LeafPoint m = S.sample(1, 0);
  for (auto _ : state) benchmark::DoNotOptimize(solve_rde_foliated(S, m, W, *V, cfg).final_point().y);
  state.SetLabel(kinds[state.range(0)]);
}
BENCHMARK(BM_FoliatedSolve)->DenseRange(0, 2)->Unit(benchmark::kMillisecond);

void BM_TransversalPower(benchmark::State& state) {
  const auto Z = make_transversal("cantor");
  ZPoint z = Z->sample(3, 0);
  for (auto _ : state) {
    z = Z->power(z, 37);
    benchmark::DoNotOptimize(z);
  }
}
BENCHMARK(BM_TransversalPower);

}  // namespace
