#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "tvcov/coordinator.hpp"
#include "tvcov/density.hpp"
#include "tvcov/geometry.hpp"
#include "tvcov/planner.hpp"
#include "tvcov/presets.hpp"
#include "tvcov/experiment_config.hpp"
#include "tvcov/tracker.hpp"

using namespace tvcov;

namespace {

const ConvexPolygon kArena = ConvexPolygon::box(-2, 2, -2, 2);

std::vector<Point> scattered(std::size_t m, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.8, 1.8);
  std::vector<Point> p;
  while (p.size() < m) {
    const Point q(u(rng), u(rng));
    bool ok = true;
    for (const Point& o : p) ok = ok && (o - q).norm() > 0.12;
    if (ok) p.push_back(q);
  }
  return p;
}

SingleIntegrator2D integrator() {
  return SingleIntegrator2D(0.1, Box{Eigen::Vector2d(-2, -2), Eigen::Vector2d(2, 2)},
                            Box{Eigen::Vector2d(-1, -1), Eigen::Vector2d(1, 1)});
}

TrackerConstants desk_constants(int horizon) {
  TrackerConstants c;
  c.q = 180.0 * Mat::Identity(2, 2);
  c.r = 0.1 * Mat::Identity(2, 2);
  c.gamma_bar = 5.0;
  c.alpha_n = 0.25;
  c.horizon = horizon;
  return c;
}

void BM_VoronoiPartition(benchmark::State& state) {
  const auto gens = scattered(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) benchmark::DoNotOptimize(voronoi_partition(gens, kArena));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_VoronoiPartition)->RangeMultiplier(4)->Range(4, 64)->Complexity();

void BM_GaussianMoments(benchmark::State& state) {
  const auto gens = scattered(4, 2);
  const auto cells = voronoi_partition(gens, kArena);
  const DensityField field = DensityField::gaussian_circle(static_cast<double>(state.range(0)) / 10.0, Point(0, 0), 0.9, 20);
  long t = 0;
  for (auto _ : state) benchmark::DoNotOptimize(density_moments(field, cells[0], t++ % 20));
}
BENCHMARK(BM_GaussianMoments)->Arg(1)->Arg(4)->Arg(10);

void BM_LocationalCost(benchmark::State& state) {
  const auto gens = scattered(static_cast<std::size_t>(state.range(0)), 3);
  const auto cells = voronoi_partition(gens, kArena);
  const DensityField field = DensityField::gaussian_circle(0.4, Point(0, 0), 0.9, 20);
  for (auto _ : state) benchmark::DoNotOptimize(locational_cost(field, gens, cells, 5));
}
BENCHMARK(BM_LocationalCost)->Arg(4)->Arg(16);

void BM_TrackerSolve(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const SingleIntegrator2D model = integrator();
  const TrackerConstants c = desk_constants(n);
  Trajectory ref;
  ref.states.push_back(Eigen::Vector2d(0.0, 0.0));
  for (int k = 0; k <= n; ++k) {
    ref.inputs.push_back(Eigen::Vector2d(0.5, 0.2));
    ref.states.push_back(model.step(ref.states.back(), ref.inputs.back()));
  }
  const std::vector<ConvexPolygon> cells(static_cast<std::size_t>(n), ConvexPolygon::box(-1.5, 1.5, -1.5, 1.5));
  const Vec x0 = Eigen::Vector2d(-0.2, 0.1);
  for (auto _ : state) benchmark::DoNotOptimize(solve_tracking(model, x0, reference_segment(ref, 0, n), cells, c));
}
BENCHMARK(BM_TrackerSolve)->Arg(10)->Arg(20)->Unit(benchmark::kMicrosecond);

void BM_PlanPeriodic(benchmark::State& state) {
  const auto horizon = static_cast<std::size_t>(state.range(0));
  const SingleIntegrator2D model = integrator();
  const std::vector<Point> gens = {Point(0.5, 0.5), Point(-0.5, 0.5), Point(-0.5, -0.5), Point(0.5, -0.5)};
  const PartitionSlice slice = slice_for_agent(constant_partition_sequence(gens, kArena, 0.055, 0.005, horizon), 0);
  const DensityField field = DensityField::gaussian_circle(0.4, Point(0, 0), 0.9, static_cast<long>(horizon));
  for (auto _ : state) benchmark::DoNotOptimize(plan_periodic(model, slice, field, 0, std::nullopt));
}
BENCHMARK(BM_PlanPeriodic)->Arg(10)->Arg(20)->Unit(benchmark::kMillisecond);

void BM_ClosedLoopSteps(benchmark::State& state) {
  ExperimentConfig cfg = preset(state.range(0) == 0 ? "periodic_circle_desk" : "nonperiodic_circle_desk");
  cfg.max_steps = 10;
  const FleetConfig fleet = cfg.to_fleet();
  for (auto _ : state) benchmark::DoNotOptimize(run(fleet));
  state.SetLabel(state.range(0) == 0 ? "periodic, 10 steps" : "nonperiodic, 10 steps");
}
BENCHMARK(BM_ClosedLoopSteps)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
