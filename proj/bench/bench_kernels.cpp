#include <benchmark/benchmark.h>

#include <vector>

#include "toptrack/artifact.hpp"
#include "toptrack/evaluate.hpp"
#include "toptrack/kernels.hpp"
#include "toptrack/synthetic.hpp"

using namespace toptrack;

namespace {

const ScalarTimeSeries& field() {
  static const auto s = synthetic::pressure_like(640, 320, 1, 7);
  return s;
}

template <auto Targets>
void descent(benchmark::State& state) {
  const auto& s = field();
  const kernels::OrientedField f{s.step(0), Polarity::minimum};
  std::vector<VertexId> out(s.topology().vertex_count());
  for (auto _ : state) {
    Targets(s.topology(), f, out);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(state.iterations() * out.size());
}

template <auto Targets, auto Roots>
void segmentation(benchmark::State& state) {
  const auto& s = field();
  const kernels::OrientedField f{s.step(0), Polarity::minimum};
  std::vector<VertexId> next(s.topology().vertex_count()), root(next.size());
  for (auto _ : state) {
    Targets(s.topology(), f, next);
    Roots(next, root);
    benchmark::DoNotOptimize(root.data());
  }
  state.SetItemsProcessed(state.iterations() * root.size());
}

const ScalarTimeSeries& series() {
  static const auto s = synthetic::pressure_like(320, 160, 16, 3);
  return s;
}

void precompute_series(benchmark::State& state) {
  PrecomputeOptions opt;
  opt.threads = static_cast<int>(state.range(0));
  const auto& s = series();
  for (auto _ : state) benchmark::DoNotOptimize(precompute(s, opt));
  state.SetItemsProcessed(state.iterations() * series().num_timesteps());
}

void evaluate_offset(benchmark::State& state) {
  static const auto a = precompute(series(), {});
  DescriptorSpec spec;
  spec.delta = {2.0, {}, ValueUnit::percent};
  for (auto _ : state) benchmark::DoNotOptimize(evaluate_descriptor(a, spec));
  state.SetItemsProcessed(state.iterations() * series().num_timesteps());
}

}  // namespace

BENCHMARK(descent<kernels::serial::descent_targets>)->Name("descent_targets/serial");
BENCHMARK(descent<kernels::omp::descent_targets>)->Name("descent_targets/omp");
BENCHMARK(segmentation<kernels::serial::descent_targets, kernels::serial::basin_roots>)
    ->Name("segmentation/serial");
BENCHMARK(segmentation<kernels::omp::descent_targets, kernels::omp::basin_roots>)
    ->Name("segmentation/omp");

BENCHMARK(precompute_series)->Name("precompute/threads")->Arg(1)->Arg(0)->Unit(benchmark::kMillisecond);
BENCHMARK(evaluate_offset)->Name("evaluate/local_offset")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
