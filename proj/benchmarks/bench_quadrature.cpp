#include <benchmark/benchmark.h>

#include <cmath>

#include "mrk/mrk.hpp"

namespace {

void BM_SphereReference(benchmark::State& state) {
  const auto s = mrk::Manifold::sphere(3);
  const auto V = mrk::builtin_potential("sphere-band", static_cast<double>(state.range(0)), s);
  const auto phi = mrk::builtin_observable("x3sq", 3);
  for (auto _ : state) benchmark::DoNotOptimize(mrk::sphere_reference(V, phi, std::sqrt(2.0)).value);
}

BENCHMARK(BM_SphereReference)->Arg(1)->Arg(25)->Arg(100)->Unit(benchmark::kMicrosecond);

void BM_TorusReference(benchmark::State& state) {
  const auto t = mrk::Manifold::torus(3, 1);
  const auto V = mrk::builtin_potential("torus-height", static_cast<double>(state.range(0)), t);
  const auto phi = mrk::builtin_observable("x3sq", 3);
  for (auto _ : state) benchmark::DoNotOptimize(mrk::torus_reference(V, phi, std::sqrt(2.0), 3, 1).value);
}

BENCHMARK(BM_TorusReference)->Arg(1)->Arg(25)->Unit(benchmark::kMicrosecond);

void BM_GaussLegendre(benchmark::State& state) {
  std::vector<double> x, w;
  for (auto _ : state) {
    mrk::gauss_legendre(static_cast<int>(state.range(0)), x, w);
    benchmark::DoNotOptimize(w.data());
  }
}

BENCHMARK(BM_GaussLegendre)->Arg(32)->Arg(256);

}  // namespace
