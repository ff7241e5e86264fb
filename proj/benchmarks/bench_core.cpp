#include <benchmark/benchmark.h>

#include <cmath>

#include "ringmod/condenser.hpp"
#include "ringmod/q_analysis.hpp"

using namespace ringmod;

static void BM_ModulusBracket2d(benchmark::State& state) {
  const auto cells = static_cast<int>(state.range(0));
  const auto field = MetricField::euclidean(ChartGrid::cube(2, -3.0, 3.0, cells));
  const RingSpec ring{{0.0, 0.0}, 1.0, std::exp(1.0)};
  for (auto _ : state) benchmark::DoNotOptimize(modulus_bracket(ring, field).lower);
}
BENCHMARK(BM_ModulusBracket2d)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_Capacity2d(benchmark::State& state) {
  const auto cells = static_cast<int>(state.range(0));
  const auto grid = ChartGrid::cube(2, -3.0, 3.0, cells);
  const auto field = MetricField::euclidean(grid);
  const auto cond = Condenser::round(grid, {0.0, 0.0}, 1.0, std::exp(1.0));
  for (auto _ : state) benchmark::DoNotOptimize(capacity(cond, field).value);
}
BENCHMARK(BM_Capacity2d)->Arg(64)->Arg(128)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_Capacity3d(benchmark::State& state) {
  const auto cells = static_cast<int>(state.range(0));
  const auto grid = ChartGrid::cube(3, -3.0, 3.0, cells);
  const auto field = MetricField::euclidean(grid);
  const auto cond = Condenser::round(grid, {0.0, 0.0, 0.0}, 1.0, std::exp(1.0));
  for (auto _ : state) benchmark::DoNotOptimize(capacity(cond, field).value);
}
BENCHMARK(BM_Capacity3d)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_SurfaceMeasure(benchmark::State& state) {
  const auto dim = static_cast<int>(state.range(0));
  const auto field = MetricField::conformal(ChartGrid::cube(dim, -2.0, 2.0, 8),
                                            [](std::span<const double> p) { return 1.0 + p[0] * p[0]; });
  const SphereSpec s{Point(static_cast<std::size_t>(dim), 0.1), 1.0};
  for (auto _ : state) benchmark::DoNotOptimize(surface_measure(field, s));
}
BENCHMARK(BM_SurfaceMeasure)->Arg(2)->Arg(3);

static void BM_CapacityBoundSelfGauge(benchmark::State& state) {
  const auto field = MetricField::euclidean(ChartGrid::cube(2, -1.0, 1.0, 64));
  const auto q = QField::expression(Expression::parse_chart("2 + x1", 2));
  const Point x0{0.0, 0.0};
  const auto psi = psi_from_Q(field, q, x0, 0.5).psi;
  for (auto _ : state) benchmark::DoNotOptimize(capacity_upper_bound(field, q, psi, x0, 5e-4, 0.5).bound);
}
BENCHMARK(BM_CapacityBoundSelfGauge)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
