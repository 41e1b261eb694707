#include <benchmark/benchmark.h>

#include "pml/field.hpp"
#include "pml/moser.hpp"

namespace {

using namespace pml;

void BM_Mollify(benchmark::State& state) {
  const double side = static_cast<double>(state.range(0));
  const PointCloud c = sample_poisson(1.0, Domain::torus(2, side), 1);
  const auto n = static_cast<std::size_t>(4 * side);
  for (auto _ : state) benchmark::DoNotOptimize(mollify(c, n).mean());
}
BENCHMARK(BM_Mollify)->Arg(16)->Arg(64)->Unit(benchmark::kMillisecond);

void BM_Poisson(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const Grid g{2, n, 10.0};
  ScalarField f(g);
  for (std::size_t i = 0; i < f.size(); ++i) f[i] = static_cast<double>(i % 7) - 3.0;
  const double m = f.mean();
  for (std::size_t i = 0; i < f.size(); ++i) f[i] -= m;
  for (auto _ : state) benchmark::DoNotOptimize(solve_poisson(f).mean());
}
BENCHMARK(BM_Poisson)->Arg(64)->Arg(256)->Unit(benchmark::kMillisecond);

void BM_MoserBound(benchmark::State& state) {
  const double side = static_cast<double>(state.range(0));
  const PointCloud c = sample_poisson(1.0, Domain::torus(2, side), 2);
  for (auto _ : state) benchmark::DoNotOptimize(moser_upper_bound(c, 2.0).value);
}
BENCHMARK(BM_MoserBound)->Arg(16)->Arg(32)->Unit(benchmark::kMillisecond);

}  // namespace
