#include <benchmark/benchmark.h>

#include <cmath>

#include "pml/geometry.hpp"
#include "pml/monotonicity.hpp"
#include "pml/ot.hpp"

namespace {

using namespace pml;

void BM_AssignmentDense(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Domain t = Domain::torus(2, 10.0);
  const CostMatrix c = CostMatrix::from_clouds(sample_uniform(n, t, 1), sample_uniform(n, t, 2), 2.0);
  for (auto _ : state) benchmark::DoNotOptimize(solve_assignment(c).cost);
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_AssignmentDense)->RangeMultiplier(2)->Range(32, 512)->Complexity()->Unit(benchmark::kMillisecond);

void BM_AssignmentGeometric(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Domain t = Domain::torus(2, std::sqrt(static_cast<double>(n)));
  const PointCloud a = sample_uniform(n, t, 3), b = sample_uniform(n, t, 4);
  for (auto _ : state) benchmark::DoNotOptimize(solve_assignment_geometric(a, b, 2.0).cost);
}
BENCHMARK(BM_AssignmentGeometric)->Arg(256)->Arg(1024)->Arg(4096)->Unit(benchmark::kMillisecond);

void BM_TorusCost(benchmark::State& state) {
  const double side = static_cast<double>(state.range(0));
  const PointCloud mu = sample_poisson(1.0, Domain::torus(2, side), 5);
  DataTermOptions o;
  o.spacing = 0.5;
  for (auto _ : state) benchmark::DoNotOptimize(torus_cost_to_uniform(mu, 2.0, o));
  state.counters["points"] = static_cast<double>(mu.size());
}
BENCHMARK(BM_TorusCost)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

void BM_Entropic(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Domain t = Domain::torus(2, 8.0);
  const CostMatrix c = CostMatrix::from_clouds(sample_uniform(n, t, 6), sample_uniform(n, t, 7), 2.0);
  const std::vector<double> w(n, 1.0);
  EntropicOptions o;
  o.epsilon = 1e-2;
  for (auto _ : state) benchmark::DoNotOptimize(entropic_transport(w, w, c, o).plan.cost);
}
BENCHMARK(BM_Entropic)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_AuditExhaustive(benchmark::State& state) {
  const Domain t = Domain::torus(2, 5.0);
  const PointCloud a = sample_uniform(40, t, 8), b = sample_uniform(40, t, 9);
  const Matching m = solve_assignment_geometric(a, b, 2.0);
  for (auto _ : state) {
    benchmark::DoNotOptimize(check_cyclical_monotonicity(a, b, m, 2.0, 3).cycles_checked);
  }
}
BENCHMARK(BM_AuditExhaustive)->Unit(benchmark::kMillisecond);

void BM_Planarity(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const double side = std::sqrt(static_cast<double>(n));
  const Domain box = Domain::box({0, 0}, {side, side});
  const PointCloud a = sample_uniform(n, box, 10), b = sample_uniform(n, box, 11);
  const Matching m = solve_assignment_geometric(a, b, 1.0);
  for (auto _ : state) benchmark::DoNotOptimize(is_planar(a, b, m).planar);
}
BENCHMARK(BM_Planarity)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

}  // namespace
