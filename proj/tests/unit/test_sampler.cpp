#include <cmath>
#include <cstring>
#include <limits>

#include "doctest.h"
#include "mrk/quadrature.hpp"
#include "mrk/sampler.hpp"
#include "oracles.hpp"

using mrk::Manifold;
using mrk::SimConfig;
using mrk::Vec;

namespace {

SimConfig sphere_config(const char* potential, const char* scheme, double T, double h,
                        std::int64_t M, std::uint64_t seed = 1) {
  const auto s = Manifold::sphere(3);
  return mrk::make_config(s, mrk::builtin_potential(potential, 25, s), std::sqrt(2.0),
                          mrk::builtin_tableau(scheme), T, h, M, seed);
}

const mrk::Observable kX3sq = mrk::builtin_observable("x3sq", 3);

}  // namespace

TEST_SUITE("sampler") {
  TEST_CASE("uniform measure on the sphere") {
    const auto cfg = sphere_config("zero", "euler-ie", 10, 1.0 / 64, 20000);
    const auto e = mrk::estimate(cfg, kX3sq);
    CHECK(std::abs(e.mean - 1.0 / 3) <= 4 * e.std_error);
    CHECK(e.discards == 0);
    CHECK(e.M_effective == 20000);
  }

  TEST_CASE("band potential matches the axisymmetric reference") {
    auto cfg = sphere_config("sphere-band", "rk2-invmeas", 5, 1.0 / 128, 20000);
    const auto e = mrk::estimate(cfg, kX3sq);
    const double ref = mrk::sphere_reference(cfg.potential, kX3sq, std::sqrt(2.0)).value;
#ifdef MRK_HAVE_BOOST
    CHECK(ref == doctest::Approx(oracle::axisymmetric_x3sq(25.0)).epsilon(1e-10));
#endif
    // bias at this step size is below 2e-4
    CHECK(std::abs(e.mean - ref) <= 2e-4 + 4 * e.std_error);
  }

  TEST_CASE("standard error scales like 1/sqrt(M)") {
    std::vector<double> se;
    for (const std::int64_t M : {1000, 4000, 16000}) {
      se.push_back(mrk::estimate(sphere_config("zero", "euler-ie", 2, 1.0 / 16, M, 3), kX3sq).std_error);
    }
    CHECK(se[0] / se[1] == doctest::Approx(2.0).epsilon(0.2));
    CHECK(se[1] / se[2] == doctest::Approx(2.0).epsilon(0.2));
  }

  TEST_CASE("standard error formula") {
    auto cfg = sphere_config("zero", "euler-ie", 1, 1.0 / 32, 50, 4);
    const auto e = mrk::estimate(cfg, kX3sq);
    double sum = 0.0, ss = 0.0;
    std::vector<double> v;
    for (int m = 0; m < 50; ++m) {
      const auto r = mrk::run_trajectory(cfg, m);
      v.push_back(kX3sq(r.final_state));
      sum += v.back();
    }
    const double mean = sum / 50;
    for (const double x : v) ss += (x - mean) * (x - mean);
    CHECK(e.mean == doctest::Approx(mean).epsilon(1e-14));
    CHECK(e.std_error == doctest::Approx(std::sqrt(ss / (50.0 * 49.0))).epsilon(1e-12));
  }

  TEST_CASE("estimates do not depend on the thread count") {
    auto cfg = sphere_config("sphere-band", "rk2-invmeas", 1, 1.0 / 32, 3000, 11);
    cfg.discard_ceiling = 1.0;
    cfg.threads = 1;
    const auto a = mrk::estimate(cfg, kX3sq);
    cfg.threads = 3;
    const auto b = mrk::estimate(cfg, kX3sq);
    CHECK(std::memcmp(&a.mean, &b.mean, sizeof(double)) == 0);
    CHECK(std::memcmp(&a.std_error, &b.std_error, sizeof(double)) == 0);
  }

  TEST_CASE("discard accounting and the quality ceiling") {
    auto cfg = sphere_config("sphere-band", "rk2-invmeas", 1, 1.0 / 32, 500, 5);
    cfg.discard_ceiling = 1.0;
    const auto e = mrk::estimate(cfg, kX3sq);
    CHECK(e.discards > 0);
    CHECK(e.M_effective + e.discards == cfg.M);
    CHECK(e.discard_fraction == doctest::Approx(double(e.discards) / cfg.M));
    cfg.discard_ceiling = 0.01;
    CHECK_THROWS_AS(mrk::estimate(cfg, kX3sq), mrk::QualityError);
  }

  TEST_CASE("equilibrium is reached by T = 10") {
    const auto a = mrk::estimate(sphere_config("sphere-band", "euler-ie", 10, 1.0 / 64, 10000, 8), kX3sq);
    const auto b = mrk::estimate(sphere_config("sphere-band", "euler-ie", 20, 1.0 / 64, 10000, 9), kX3sq);
    CHECK(std::abs(a.mean - b.mean) <= 2 * std::hypot(a.std_error, b.std_error));
  }

  TEST_CASE("single trajectories") {
    const auto cfg = sphere_config("zero", "euler-ie", 3, 1.0 / 32, 10);
    const auto r = mrk::run_trajectory(cfg, 4);
    CHECK_FALSE(r.discarded);
    CHECK(std::abs(cfg.manifold.zeta(r.final_state)) <= 1e-12);
    const auto again = mrk::run_trajectory(cfg, 4);
    CHECK(std::memcmp(r.final_state.data(), again.final_state.data(), 3 * sizeof(double)) == 0);
    CHECK((mrk::run_trajectory(cfg, 5).final_state - r.final_state).norm() > 0.0);
  }

  TEST_CASE("failure policies for trajectories") {
    auto cfg = sphere_config("sphere-band", "rk2-invmeas", 5, 0.25, 10);
    const auto r = mrk::run_trajectory(cfg, 0);
    CHECK(r.discarded);
    CHECK(r.failed_step >= 0);
    cfg.newton.on_failure = mrk::FailurePolicy::error;
    try {
      mrk::run_trajectory(cfg, 0);
      FAIL("expected a Newton failure");
    } catch (const mrk::NewtonFailure& e) {
      CHECK(std::string(e.what()).find("step") != std::string::npos);
    }
  }

  TEST_CASE("special linear group runs without discards at a fine step") {
    const auto sl = Manifold::special_linear(2);
    auto cfg = mrk::make_config(sl, mrk::builtin_potential("sl-identity", 25, sl), std::sqrt(2.0),
                                mrk::builtin_tableau("rk2-invmeas"), 10, 10.0 / 4096, 100, 2);
    const auto e = mrk::estimate(cfg, mrk::builtin_observable("trace", 4));
    CHECK(e.discards == 0);
    CHECK(std::abs(e.mean - 2.00967) <= 5 * e.std_error + 2e-3);
  }

  TEST_CASE("configuration checks") {
    auto cfg = sphere_config("zero", "euler-ie", 1, 0.3, 10);
    CHECK_THROWS_AS(cfg.steps(), mrk::ConfigError);
    CHECK_THROWS_AS(mrk::estimate(cfg, kX3sq), mrk::ConfigError);
    cfg.h = 0.25;
    CHECK(cfg.steps() == 4);
    cfg.x0(2) = 1.1;
    CHECK_THROWS_AS(cfg.check(), mrk::ConfigError);
    cfg.x0(2) = 1.0;
    cfg.M = 0;
    CHECK_THROWS_AS(cfg.check(), mrk::ConfigError);
    cfg.M = 10;
    cfg.noise.dim = 4;
    CHECK_THROWS_AS(cfg.check(), mrk::ConfigError);
  }

  TEST_CASE("time average cross-check") {
    const auto cfg = sphere_config("zero", "euler-ie", 2000, 1.0 / 32, 1);
    CHECK(mrk::time_average(cfg, kX3sq, 64) == doctest::Approx(1.0 / 3).epsilon(0.1));
    CHECK_THROWS_AS(mrk::time_average(cfg, kX3sq, cfg.steps()), mrk::ConfigError);
  }

  TEST_CASE("slope fit") {
    mrk::ConvergenceReport rep;
    for (int k = 2; k <= 6; ++k) {
      const double h = std::ldexp(1.0, -k);
      mrk::ConvergenceRow row;
      row.h = h;
      row.error = 0.3 * h * h;
      row.std_error = 1e-6;
      rep.rows.push_back(row);
    }
    rep.rows.back().std_error = 1.0;  // noise dominated, excluded
    mrk::fit_slope(rep);
    REQUIRE(rep.fitted_slope);
    CHECK(*rep.fitted_slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(rep.fit_window == std::vector<int>{0, 1, 2, 3});

    rep.rows[0].rejected = true;
    rep.rows[0].error = 10.0;
    mrk::fit_slope(rep);
    CHECK(*rep.fitted_slope == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(rep.fit_window == std::vector<int>{1, 2, 3});

    for (auto& r : rep.rows) r.std_error = 1.0;
    mrk::fit_slope(rep);
    CHECK_FALSE(rep.fitted_slope);
    CHECK(rep.fit_window.empty());
    CHECK_FALSE(rep.fit_message.empty());
  }

  TEST_CASE("convergence study against a self reference") {
    auto cfg = sphere_config("sphere-band", "euler-ie", 1, 1.0 / 16, 500, 6);
    const double self = mrk::estimate(cfg, kX3sq).mean;
    const auto rep = mrk::convergence_study(cfg, {1.0 / 16}, kX3sq, {self, "self"});
    REQUIRE(rep.rows.size() == 1);
    CHECK(rep.rows[0].error == 0.0);
    CHECK(rep.rows[0].N == 16);
    CHECK_FALSE(rep.fitted_slope);
    CHECK(rep.reference.provenance == "self");
    CHECK_THROWS_AS(mrk::convergence_study(cfg, {1.0 / 16, 1.0 / 8}, kX3sq, {self, "self"}),
                    mrk::ConfigError);
    CHECK_THROWS_AS(mrk::convergence_study(cfg, {}, kX3sq, {self, "self"}), mrk::ConfigError);
  }

  TEST_CASE("convergence study keeps rejected rows") {
    auto cfg = sphere_config("sphere-band", "rk2-invmeas", 2, 0.25, 200, 6);
    const auto rep = mrk::convergence_study(cfg, {0.25, 0.125}, kX3sq, {0.02, "fixed"});
    REQUIRE(rep.rows.size() == 2);
    CHECK(rep.rows[0].rejected);
    CHECK(rep.rows[0].discard_fraction > 0.01);
    CHECK_FALSE(rep.rows[0].note.empty());
    CHECK_FALSE(rep.fitted_slope);
  }
}
