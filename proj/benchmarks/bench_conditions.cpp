#include <benchmark/benchmark.h>

#include "mrk/mrk.hpp"

namespace {

void BM_Classify(benchmark::State& state) {
  const auto names = mrk::builtin_tableau_names();
  const auto t = mrk::builtin_tableau(names[state.range(0)]);
  for (auto _ : state) benchmark::DoNotOptimize(mrk::classify(t).verdicts.size());
  state.SetLabel(t.name());
}

BENCHMARK(BM_Classify)->DenseRange(0, 5);

void BM_Invmeas2Residuals(benchmark::State& state) {
  const auto t = mrk::builtin_tableau("rk2-invmeas");
  for (auto _ : state) benchmark::DoNotOptimize(mrk::max_abs_residual(mrk::invmeas2_residuals(t)));
}

BENCHMARK(BM_Invmeas2Residuals);

}  // namespace
