#include <benchmark/benchmark.h>

#include <cmath>
#include <memory>

#include "fpksl/hjb.hpp"
#include "fpksl/models.hpp"

using namespace fpksl;

namespace {

LatticePtr square(double rho) {
  return std::make_shared<const Lattice>(2, rho, Point{-4, -4, 0}, Point{4, 4, 0}, Boundary::Truncate);
}

GridMeasure blob(LatticePtr lat) {
  return project_initial(DensityDatum{[](const Point& x) {
                           return std::exp(-((x[0] - 1) * (x[0] - 1) + (x[1] - 1) * (x[1] - 1)) / 0.3);
                         }},
                         lat);
}

}  // namespace

static void BM_OscillatorStep(benchmark::State& state) {
  const auto lat = square(0.8 / static_cast<double>(state.range(0)));
  const auto f = oscillator_coefficients({});
  const auto m = blob(lat);
  MeasurePath path(lat, 0.025, 1);
  path.append(m);
  for (auto _ : state) benchmark::DoNotOptimize(step(m, f, path, 0));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(lat->node_count()));
}
BENCHMARK(BM_OscillatorStep)->Arg(8)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

static void BM_SolveHjb1D(benchmark::State& state) {
  const auto lat = std::make_shared<const Lattice>(1, 0.05, Point{-3, 0, 0}, Point{3, 0, 0}, Boundary::Reflect);
  const auto m = project_initial(DensityDatum{[](const Point& x) { return std::exp(-x[0] * x[0] / 0.2); }}, lat);
  MeetingCostParams p;
  p.meeting_set = {Box{{-2.5, 0, 0}, {-2.0, 0, 0}}, Box{{1.0, 0, 0}, {1.5, 0, 0}}};
  const auto costs = meeting_costs(p);
  const ControlGrid grid{4.0, static_cast<int>(state.range(0)), 2};
  for (auto _ : state) benchmark::DoNotOptimize(solve_hjb(costs, &m, 0.01, lat, 0.05, 40, 0, grid));
}
BENCHMARK(BM_SolveHjb1D)->Arg(21)->Arg(41)->Unit(benchmark::kMillisecond);

static void BM_Wasserstein2D(benchmark::State& state) {
  const double rho = 8.0 / static_cast<double>(state.range(0));
  const auto lat = square(rho);
  const auto a = blob(lat);
  const auto b = project_initial(DensityDatum{[](const Point& x) {
                                   return std::exp(-((x[0] + 0.5) * (x[0] + 0.5) + x[1] * x[1]) / 0.5);
                                 }},
                                 lat);
  for (auto _ : state) benchmark::DoNotOptimize(wasserstein1(a, b));
}
BENCHMARK(BM_Wasserstein2D)->Arg(16)->Arg(24)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
