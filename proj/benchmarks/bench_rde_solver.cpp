#include "roughflow/rde_solver.hpp"
#include "roughflow/rough_lift.hpp"

#include <benchmark/benchmark.h>

using namespace roughflow;

namespace {

void BM_DavieStep(benchmark::State& state) {
  const auto V = make_named_field(state.range(0) == 1 ? "exponential" : "nonlinear_drift", 2, 2);
  const GridRoughPath W = brownian_rough_path(sample_brownian(static_cast<int>(V->driver_dim()), 1.0, 10, 42), 10);
  const Increment inc = W.increment(0.25, 0.25 + 1.0 / 1024);
  Vector x = Vector::Constant(V->state_dim(), 0.3);
  for (auto _ : state) {
    x = davie_step(x, inc, *V);
    if (!x.allFinite() || x.norm() > 10) x.setConstant(0.3);
    benchmark::DoNotOptimize(x.data());
  }
}
BENCHMARK(BM_DavieStep)->Arg(1)->Arg(2);

void BM_SolveFixed(benchmark::State& state) {
  const auto V = nonlinear_fields(true);
  const GridRoughPath W = brownian_rough_path(sample_brownian(2, 1.0, 14, 42), static_cast<int>(state.range(0)));
  SolveConfig cfg;
  cfg.refine = false;
  cfg.base_subdiv = 8;
  for (auto _ : state) benchmark::DoNotOptimize(solve_rde(Vector::Zero(2), W, *V, cfg).final_state());
  state.SetItemsProcessed(state.iterations() * (std::int64_t{8} << state.range(0)));
}
BENCHMARK(BM_SolveFixed)->Arg(6)->Arg(8)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_SolveRefined(benchmark::State& state) {
  const auto V = nonlinear_fields(true);
  const GridRoughPath W = brownian_rough_path(sample_brownian(2, 1.0, 14, 42), 8);
  for (auto _ : state) benchmark::DoNotOptimize(solve_rde(Vector::Zero(2), W, *V, SolveConfig{}).final_state());
}
BENCHMARK(BM_SolveRefined)->Unit(benchmark::kMillisecond);

void BM_SolveWithJacobians(benchmark::State& state) {
  const auto V = nonlinear_fields(true);
  const GridRoughPath W = brownian_rough_path(sample_brownian(2, 1.0, 14, 42), 6);
  SolveConfig cfg;
  cfg.refine = false;
  cfg.base_subdiv = 16;
  const int order = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(solve_with_jacobians(Vector::Zero(2), W, *V, cfg, order).j1.back());
}
BENCHMARK(BM_SolveWithJacobians)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace
