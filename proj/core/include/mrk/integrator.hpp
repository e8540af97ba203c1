#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <vector>

#include "mrk/manifold.hpp"
#include "mrk/potentials.hpp"
#include "mrk/tableau.hpp"
#include "mrk/types.hpp"

namespace mrk {

enum class NoiseKind { gaussian, discrete3 };

std::string to_string(NoiseKind kind);
NoiseKind parse_noise_kind(const std::string& name);

struct NoiseSpec {
  NoiseKind kind = NoiseKind::discrete3;
  int dim = 3;
};

using Rng = std::mt19937_64;

/// Independent stream for trajectory `index` of an ensemble seeded by `seed`.
Rng trajectory_stream(std::uint64_t seed, std::uint64_t index);

/// discrete3: components in {-sqrt(3), 0, sqrt(3)} with probabilities
/// 1/6, 2/3, 1/6 (moments 0, 1, 0, 3, 0 like a standard Gaussian).
Vec sample_noise(const NoiseSpec& spec, Rng& rng);

enum class FailurePolicy { error, discard };

struct NewtonControls {
  double tol_constraint = 1e-12;  // absolute, on |zeta|
  int max_iter = 25;
  int coupled_sweeps = 50;
  double damping = 1.0;
  /// Solutions further than this from X_n are rejected as the wrong root.
  double max_stage_distance = std::numeric_limits<double>::infinity();
  FailurePolicy on_failure = FailurePolicy::error;

  void check() const;
};

struct StageSolution {
  Vec y;
  double lambda = 0.0;
  int iterations = 0;
};

/**
 * Solves  Y = p + lambda (D0 + ahat_ii g(Y)),  zeta(Y) = 0  for (Y, lambda)
 * by Newton iteration from (x_n, 0).
 *
 * When ahat_ii != 0 and the manifold has an analytic Hessian the Jacobian
 * block dY r1 = I - lambda ahat_ii Hess zeta(Y) is exact; otherwise it is
 * frozen to the identity (simplified Newton). Throws NewtonFailure or
 * SingularProjection.
 */
StageSolution solve_stage(const Manifold& manifold, const Vec& x_n, const Vec& p,
                          const Vec& fixed_direction, double ahat_ii,
                          const NewtonControls& controls, int stage_index = 0);

enum class StepStatus { ok, newton_failed };

struct StepOutcome {
  Vec x_next;
  std::vector<Vec> stage_points;
  std::vector<double> multipliers;
  std::vector<int> newton_iters;
  StepStatus status = StepStatus::ok;
  int failed_stage = -1;
  int sweeps = 0;
  std::string message;
};

/// Scratch storage reused across steps.
struct StepWorkspace {
  std::vector<Vec> y;
  std::vector<Vec> f;
  std::vector<Vec> g;
  std::vector<double> lambda;
  std::vector<int> iters;
  int sweeps = 0;
  int failed_stage = -1;
  std::string message;
};

/**
 * One scheme bound to a manifold, potential and noise amplitude.
 *
 * Sequential tableaux (strictly lower A, lower Ahat) resolve in one forward
 * pass. Anything else is solved by Gauss-Seidel sweeps over the stages until
 * successive stage values move less than tol_constraint (1 + |x_n|).
 * f is evaluated only at stages whose A-column is non-zero.
 */
class Integrator {
 public:
  Integrator(ButcherTableau tableau, Manifold manifold, Potential potential, double sigma,
             NewtonControls controls = {});

  const ButcherTableau& tableau() const { return tableau_; }
  const Manifold& manifold() const { return manifold_; }
  const NewtonControls& controls() const { return controls_; }
  double sigma() const { return sigma_; }

  /// Full step record. Under FailurePolicy::error a failed solve throws
  /// NewtonFailure; under discard the outcome carries newton_failed.
  StepOutcome step(const Vec& x_n, double h, const Vec& xi) const;
  StepOutcome step(const Vec& x_n, double h, const NoiseSpec& noise, Rng& rng) const;

  /// Hot-path variant: overwrites x with X_{n+1}; returns false on a failed
  /// solve (never throws NewtonFailure).
  bool advance(Vec& x, double h, const Vec& xi, StepWorkspace& ws) const;

 private:
  bool forward_pass(const Vec& x_n, double h, const Vec& xi, StepWorkspace& ws) const;
  bool coupled_sweeps(const Vec& x_n, double h, const Vec& xi, StepWorkspace& ws) const;
  bool solve_one(int i, const Vec& x_n, double h, double sqrt_h, const Vec& xi,
                 StepWorkspace& ws, bool include_all) const;

  ButcherTableau tableau_;
  Manifold manifold_;
  Potential potential_;
  double sigma_;
  NewtonControls controls_;
  std::vector<bool> needs_f_;
  std::vector<bool> needs_g_;
  bool sequential_;
};

}  // namespace mrk
