#include <benchmark/benchmark.h>

#include <random>

#include "bspring/kernels.hpp"
#include "bspring/template_manager.hpp"

using namespace bspring;

namespace {

std::vector<double> noise(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = d(rng);
  return v;
}

ExecPolicy policy_of(const benchmark::State& state) {
  return state.range(0) == 0 ? ExecPolicy::Serial : ExecPolicy::Parallel;
}

// Three templates against one minute at 300 Hz, as in a region analysis.
void BM_SpringTraces(benchmark::State& state) {
  const auto stream = noise(18000, 1);
  const std::vector<std::vector<double>> templates{noise(250, 2), noise(250, 3), noise(250, 4)};
  for (auto _ : state) benchmark::DoNotOptimize(spring_distance_traces(stream, templates, policy_of(state)));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(stream.size() * templates.size()));
}
BENCHMARK(BM_SpringTraces)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

// One DBA iteration's alignments: a region's worth of cycles against the average.
void BM_AlignToReference(benchmark::State& state) {
  std::vector<std::vector<double>> cycles;
  for (std::uint64_t i = 0; i < 70; ++i) cycles.push_back(noise(240 + i % 20, 10 + i));
  const auto reference = noise(251, 5);
  for (auto _ : state) {
    benchmark::DoNotOptimize(align_to_reference(cycles, reference, LocalCost::Squared, policy_of(state)));
  }
}
BENCHMARK(BM_AlignToReference)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

void BM_DbaConsensus(benchmark::State& state) {
  std::vector<std::vector<double>> cycles;
  for (std::uint64_t i = 0; i < 70; ++i) cycles.push_back(noise(240 + i % 20, 100 + i));
  for (auto _ : state) benchmark::DoNotOptimize(dba_consensus(cycles, 251, 10, policy_of(state)));
}
BENCHMARK(BM_DbaConsensus)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
