#include <random>

#include "doctest.h"
#include "mrk/manifold.hpp"
#include "mrk/potentials.hpp"
#include "oracles.hpp"

using mrk::Manifold;
using mrk::Vec;

namespace {

Vec v3(double a, double b, double c) {
  Vec x(3);
  x << a, b, c;
  return x;
}

double rel_fd_error(const mrk::Potential& V, const Vec& x) {
  const Vec g = V.gradient(x);
  const Vec fd = oracle::fd5_gradient([&V](const Vec& y) { return V.value(y); }, x);
  return (g - fd).norm() / (1.0 + g.norm());
}

}  // namespace

TEST_SUITE("potentials") {
  TEST_CASE("built-in potential values") {
    const auto sphere = Manifold::sphere(3);
    const auto torus = Manifold::torus(3, 1);
    const auto sl = Manifold::special_linear(2);
    CHECK(mrk::builtin_potential("sphere-band", 25, sphere).value(v3(0, 0, 1)) == 25.0);
    CHECK(mrk::builtin_potential("torus-height", 25, torus).value(v3(4, 0, 0)) == 25.0);
    const auto Vsl = mrk::builtin_potential("sl-identity", 25, sl);
    CHECK(Vsl.value(sl.default_point()) == 0.0);
    CHECK(Vsl.gradient(sl.default_point()).norm() == 0.0);
    CHECK(mrk::builtin_potential("zero", 1, sphere).value(v3(0, 1, 0)) == 0.0);
  }

  TEST_CASE("analytic gradients") {
    const auto sphere = Manifold::sphere(3);
    const auto V = mrk::builtin_potential("sphere-band", 25, sphere);
    CHECK(V.gradient(v3(0.6, 0.8, 0)).isApprox(v3(-30, -40, 0), 1e-15));
    CHECK(V.drift(v3(0.6, 0.8, 0)).isApprox(v3(30, 40, 0), 1e-15));
    const auto T = mrk::builtin_potential("torus-height", 25, Manifold::torus(3, 1));
    CHECK(T.gradient(v3(3, 0, 1.5)).isApprox(v3(0, 0, 25), 1e-15));
  }

  TEST_CASE("gradients match finite differences at random points") {
    std::mt19937_64 rng(17);
    const auto sphere = Manifold::sphere(3);
    const auto torus = Manifold::torus(3, 1);
    double worst = 0.0;
    for (const char* name : {"zero", "sphere-band"}) {
      const auto V = mrk::builtin_potential(name, 25, sphere);
      for (int k = 0; k < 100; ++k) worst = std::max(worst, rel_fd_error(V, oracle::random_unit(3, rng)));
    }
    const auto T = mrk::builtin_potential("torus-height", 25, torus);
    for (int k = 0; k < 100; ++k) {
      worst = std::max(worst, rel_fd_error(T, oracle::random_torus_point(3, 1, rng)));
    }
    for (int m = 2; m <= 5; ++m) {
      const auto V = mrk::builtin_potential("sl-identity", 25, Manifold::special_linear(m));
      for (int k = 0; k < 100; ++k) worst = std::max(worst, rel_fd_error(V, oracle::random_sl_point(m, rng)));
    }
    CHECK(worst < 1e-6);
  }

  TEST_CASE("built-in observables") {
    CHECK(mrk::builtin_observable("x3sq", 3)(v3(0, 0, 1)) == 1.0);
    CHECK(mrk::builtin_observable("x3sq", 3)(v3(0, 0, 0.5)) == 0.25);
    Vec I = Vec::Zero(4);
    I(0) = I(3) = 1.0;
    CHECK(mrk::builtin_observable("trace", 4)(I) == 2.0);
    CHECK(mrk::builtin_observable("one", 3)(v3(7, 8, 9)) == 1.0);
    CHECK(mrk::builtin_observable("coordinate(1)", 3)(v3(7, 8, 9)) == 7.0);
    CHECK(mrk::builtin_observable("coordinate(3)", 3)(v3(7, 8, 9)) == 9.0);
  }

  TEST_CASE("invalid names and parameters") {
    const auto sphere = Manifold::sphere(3);
    CHECK_THROWS_AS(mrk::builtin_potential("nope", 25, sphere), mrk::ConfigError);
    CHECK_THROWS_AS(mrk::builtin_potential("sphere-band", 0, sphere), mrk::ConfigError);
    CHECK_THROWS_AS(mrk::builtin_potential("sphere-band", -1, sphere), mrk::ConfigError);
    CHECK_THROWS_AS(mrk::builtin_potential("torus-height", 25, sphere), mrk::ConfigError);
    CHECK_THROWS_AS(mrk::builtin_potential("sl-identity", 25, sphere), mrk::ConfigError);
    CHECK_THROWS_AS(mrk::builtin_observable("nope", 3), mrk::ConfigError);
    CHECK_THROWS_AS(mrk::builtin_observable("trace", 3), mrk::ConfigError);
    CHECK_THROWS_AS(mrk::builtin_observable("coordinate(0)", 3), mrk::ConfigError);
    CHECK_THROWS_AS(mrk::builtin_observable("coordinate(4)", 3), mrk::ConfigError);
    CHECK_THROWS_AS(mrk::builtin_observable("coordinate(x)", 3), mrk::ConfigError);
  }
}
