#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mrk/integrator.hpp"
#include "mrk/manifold.hpp"
#include "mrk/potentials.hpp"
#include "mrk/tableau.hpp"

namespace mrk {

struct SimConfig {
  Manifold manifold;
  Potential potential;
  double sigma;
  ButcherTableau scheme;
  double T = 10.0;
  double h = 1.0 / 64.0;
  std::int64_t M = 1000;
  std::uint64_t seed = 0;
  NoiseSpec noise;
  NewtonControls newton;
  Vec x0;
  double discard_ceiling = 0.01;
  int threads = 0;  // 0 = hardware concurrency

  /// Number of steps T / h. Throws ConfigError unless T / h is an integer
  /// to 1e-9 and x0 lies on the manifold to 1e-10.
  std::int64_t steps() const;
  void check() const;
};

/// Defaults: discrete3 noise, discard policy, x0 from the manifold.
SimConfig make_config(Manifold manifold, Potential potential, double sigma, ButcherTableau scheme,
                      double T, double h, std::int64_t M, std::uint64_t seed);

struct TrajectoryResult {
  Vec final_state;
  bool discarded = false;
  std::int64_t failed_step = -1;
  std::string message;
};

/// Trajectory `index` runs on its own stream derived from (seed, index).
/// Under FailurePolicy::error the first failed step throws NewtonFailure
/// with the step index in the message.
TrajectoryResult run_trajectory(const SimConfig& cfg, std::int64_t index);

struct EstimateResult {
  double mean = 0.0;
  double std_error = 0.0;
  std::int64_t M_effective = 0;
  std::int64_t discards = 0;
  double discard_fraction = 0.0;
};

/// Ensemble estimator of E[phi(X_N)] with its standard error
/// sqrt(sum (phi_m - mean)^2 / (M_eff (M_eff - 1))). Values are reduced in
/// trajectory order, so results do not depend on the thread count. Throws
/// QualityError when the discard fraction exceeds cfg.discard_ceiling.
EstimateResult estimate(const SimConfig& cfg, const Observable& phi);

/// Single-trajectory time average of phi over steps (trajectory 0),
/// optional cross-check of the ensemble estimator.
double time_average(const SimConfig& cfg, const Observable& phi, std::int64_t burn_in_steps = 0);

struct ReferenceSpec {
  double value = 0.0;
  std::string provenance;
};

struct ConvergenceRow {
  double h = 0.0;
  std::int64_t N = 0;
  std::int64_t M = 0;
  double estimate = 0.0;
  double std_error = 0.0;
  double error = 0.0;
  double discard_fraction = 0.0;
  bool rejected = false;  // discard fraction above the ceiling; excluded from the fit
  std::string note;
};

struct ConvergenceReport {
  std::vector<ConvergenceRow> rows;
  std::optional<double> fitted_slope;
  std::vector<int> fit_window;
  std::string fit_message;
  ReferenceSpec reference;
};

/// Least-squares slope of log(error) against log(h) over non-rejected rows
/// whose error exceeds 3 stderr. Fewer than two such rows leaves fitted_slope empty.
void fit_slope(ConvergenceReport& report);

/// Estimates E[phi(X_N)] for each h (strictly descending) and fits the slope.
/// A step size whose discard fraction exceeds the ceiling is kept as a
/// rejected row instead of aborting the study.
ConvergenceReport convergence_study(const SimConfig& base, const std::vector<double>& h_list,
                                    const Observable& phi, const ReferenceSpec& reference);

}  // namespace mrk
