#include "sparch/diagnostics.hpp"
#include "sparch/likelihood.hpp"
#include "sparch/process.hpp"

#include <benchmark/benchmark.h>

namespace {

using namespace sparch;

SparseWeights oriented_queen(Index d) {
  const auto c = static_cast<double>(d / 2);
  return build_oriented(build_queen(d), SpatialDomain::lattice(d), Location{{c, c}});
}

void BM_SolveY2General(benchmark::State& state) {
  const Index d = state.range(0);
  const SparseWeights w = build_rook(d).scaled(0.5);
  const SpArchModel m = SpArchModel::homogeneous(5.0, w, ErrorSpec::truncated_gaussian(0.999 * support_bound(w)));
  Simulator sim(m);
  Seed seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sim(seed++));
  state.SetComplexityN(d * d);
}
BENCHMARK(BM_SolveY2General)->Arg(10)->Arg(20)->Arg(50)->Unit(benchmark::kMicrosecond)->Complexity();

void BM_SolveY2Triangular(benchmark::State& state) {
  const Index d = state.range(0);
  const SpArchModel m = SpArchModel::homogeneous(1.0, oriented_queen(d).scaled(0.6), ErrorSpec::gaussian());
  Simulator sim(m);
  Seed seed = 0;
  for (auto _ : state) benchmark::DoNotOptimize(sim(seed++));
  state.SetComplexityN(d * d);
}
BENCHMARK(BM_SolveY2Triangular)->Arg(10)->Arg(20)->Arg(50)->Unit(benchmark::kMicrosecond)->Complexity();

void BM_LoglikTriangular(benchmark::State& state) {
  const Index d = state.range(0);
  const SparseWeights w = oriented_queen(d);
  const Vector y = simulate(SpArchModel::homogeneous(1.0, w.scaled(0.6), ErrorSpec::gaussian()), 1).y;
  for (auto _ : state) benchmark::DoNotOptimize(loglik_triangular(y, 1.0, 0.6, w, ErrorSpec::gaussian()));
}
BENCHMARK(BM_LoglikTriangular)->Arg(20)->Arg(50)->Unit(benchmark::kMicrosecond);

void BM_LoglikGeneral(benchmark::State& state) {
  const Index d = state.range(0);
  const SparseWeights w = build_rook(d);
  const SpArchModel m = SpArchModel::homogeneous(1.0, w.scaled(0.5), ErrorSpec::truncated_gaussian(1.3));
  const Vector y = simulate(m, 1).y;
  for (auto _ : state) benchmark::DoNotOptimize(loglik_general(y, m));
}
BENCHMARK(BM_LoglikGeneral)->Arg(20)->Arg(50)->Unit(benchmark::kMicrosecond);

void BM_FitMl(benchmark::State& state) {
  const Index d = state.range(0);
  const SparseWeights w = oriented_queen(d);
  const Vector y = simulate(SpArchModel::homogeneous(1.0, w.scaled(0.6), ErrorSpec::gaussian()), 2).y;
  for (auto _ : state) benchmark::DoNotOptimize(fit_ml(y, w));
}
BENCHMARK(BM_FitMl)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_MoransI(benchmark::State& state) {
  const Index d = state.range(0);
  const SparseWeights w = build_rook(d);
  const Vector x = draw_innovations(ErrorSpec::gaussian(), d * d, 3);
  for (auto _ : state) benchmark::DoNotOptimize(morans_i(x, w));
}
BENCHMARK(BM_MoransI)->Arg(50)->Arg(100)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
