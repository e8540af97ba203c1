#include <benchmark/benchmark.h>

#include <cmath>

#include "mrk/mrk.hpp"

namespace {

mrk::Manifold manifold_for(int which) {
  switch (which) {
    case 0: return mrk::Manifold::sphere(3);
    case 1: return mrk::Manifold::torus(3, 1);
    default: return mrk::Manifold::special_linear(which);
  }
}

const char* potential_for(int which) {
  switch (which) {
    case 0: return "sphere-band";
    case 1: return "torus-height";
    default: return "sl-identity";
  }
}

// Arguments: manifold (0 sphere, 1 torus, m >= 2 for SL(m)), scheme index.
void BM_Advance(benchmark::State& state) {
  const int which = static_cast<int>(state.range(0));
  const char* names[] = {"euler-ie", "euler-ee", "rk2-invmeas", "sphere-rk2"};
  const std::string scheme = names[state.range(1)];
  const auto m = manifold_for(which);
  const mrk::Integrator integ(mrk::builtin_tableau(scheme), m, mrk::builtin_potential(potential_for(which), 25, m),
                              std::sqrt(2.0));
  mrk::Rng rng = mrk::trajectory_stream(1, 0);
  const mrk::NoiseSpec noise{mrk::NoiseKind::discrete3, m.ambient_dim()};
  mrk::StepWorkspace ws;
  mrk::Vec x = m.default_point();
  const double h = 1.0 / 256;
  std::int64_t failures = 0;
  for (auto _ : state) {
    const mrk::Vec xi = mrk::sample_noise(noise, rng);
    if (!integ.advance(x, h, xi, ws)) {
      ++failures;
      x = m.default_point();
    }
    benchmark::DoNotOptimize(x.data());
  }
  state.counters["failures"] = static_cast<double>(failures);
  state.SetLabel(scheme);
}

BENCHMARK(BM_Advance)
    ->Args({0, 0})
    ->Args({0, 1})
    ->Args({0, 2})
    ->Args({0, 3})
    ->Args({1, 0})
    ->Args({1, 2})
    ->Args({2, 0})
    ->Args({2, 2})
    ->Args({3, 2})
    ->Args({4, 2});

void BM_EstimateSphere(benchmark::State& state) {
  const auto s = mrk::Manifold::sphere(3);
  auto cfg = mrk::make_config(s, mrk::builtin_potential("sphere-band", 25, s), std::sqrt(2.0),
                              mrk::builtin_tableau("euler-ie"), 1, 1.0 / 64, state.range(0), 3);
  cfg.threads = 1;
  const auto phi = mrk::builtin_observable("x3sq", 3);
  for (auto _ : state) benchmark::DoNotOptimize(mrk::estimate(cfg, phi).mean);
  state.SetItemsProcessed(state.iterations() * state.range(0) * 64);
}

BENCHMARK(BM_EstimateSphere)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
