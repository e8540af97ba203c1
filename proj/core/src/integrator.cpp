#include "mrk/integrator.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

namespace mrk {

std::string to_string(NoiseKind kind) {
  return kind == NoiseKind::gaussian ? "gaussian" : "discrete3";
}

NoiseKind parse_noise_kind(const std::string& name) {
  if (name == "gaussian") return NoiseKind::gaussian;
  if (name == "discrete3") return NoiseKind::discrete3;
  throw ConfigError("unknown noise kind '" + name + "' (expected gaussian or discrete3)");
}

Rng trajectory_stream(std::uint64_t seed, std::uint64_t index) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)};
  return Rng(seq);
}

Vec sample_noise(const NoiseSpec& spec, Rng& rng) {
  Vec xi(spec.dim);
  if (spec.kind == NoiseKind::gaussian) {
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int i = 0; i < spec.dim; ++i) xi(i) = normal(rng);
    return xi;
  }
  static const double root3 = std::sqrt(3.0);
  for (int i = 0; i < spec.dim; ++i) {
    // Top 32 bits scaled onto {0, ..., 5}.
    const std::uint64_t k = ((rng() >> 32) * 6u) >> 32;
    xi(i) = k == 0 ? -root3 : (k == 5 ? root3 : 0.0);
  }
  return xi;
}

void NewtonControls::check() const {
  if (!(tol_constraint > 0.0)) throw ConfigError("Newton tolerance must be positive");
  if (max_iter < 1) throw ConfigError("Newton max_iter must be >= 1");
  if (coupled_sweeps < 1) throw ConfigError("coupled_sweeps must be >= 1");
  if (!(damping > 0.0 && damping <= 1.0)) throw ConfigError("Newton damping must lie in (0, 1]");
  if (!(max_stage_distance > 0.0)) throw ConfigError("max_stage_distance must be positive");
}

namespace {

// Gaussian elimination with partial pivoting on K, applied to both right-hand
// sides at once. Returns false on an exactly singular pivot.
bool solve_two(Mat& K, Vec& u, Vec& w) {
  const int n = static_cast<int>(K.rows());
  for (int c = 0; c < n; ++c) {
    int piv = c;
    double best = std::abs(K(c, c));
    for (int r = c + 1; r < n; ++r) {
      if (std::abs(K(r, c)) > best) {
        best = std::abs(K(r, c));
        piv = r;
      }
    }
    if (best == 0.0) return false;
    if (piv != c) {
      K.row(c).swap(K.row(piv));
      std::swap(u(c), u(piv));
      std::swap(w(c), w(piv));
    }
    const double inv = 1.0 / K(c, c);
    for (int r = c + 1; r < n; ++r) {
      const double m = K(r, c) * inv;
      if (m == 0.0) continue;
      for (int k = c + 1; k < n; ++k) K(r, k) -= m * K(c, k);
      u(r) -= m * u(c);
      w(r) -= m * w(c);
    }
  }
  for (int c = n - 1; c >= 0; --c) {
    double su = u(c);
    double sw = w(c);
    for (int k = c + 1; k < n; ++k) {
      su -= K(c, k) * u(k);
      sw -= K(c, k) * w(k);
    }
    u(c) = su / K(c, c);
    w(c) = sw / K(c, c);
  }
  return true;
}

}  // namespace

StageSolution solve_stage(const Manifold& manifold, const Vec& x_n, const Vec& p,
                          const Vec& fixed_direction, double ahat_ii,
                          const NewtonControls& controls, int stage_index) {
  const int dim = manifold.ambient_dim();
  const bool full = ahat_ii != 0.0 && manifold.has_analytic_hessian();
  const double r1_tol = controls.tol_constraint * (1.0 + p.norm());

  StageSolution sol{x_n, 0.0, 0};
  for (int it = 0;; ++it) {
    if (!sol.y.allFinite() || !std::isfinite(sol.lambda)) {
      throw NewtonFailure("Newton iterate left the finite range at stage " +
                              std::to_string(stage_index + 1),
                          stage_index, it);
    }
    const Vec g = manifold.grad(sol.y);
    const Vec D = fixed_direction + ahat_ii * g;
    const Vec r1 = sol.y - p - sol.lambda * D;
    const double r2 = manifold.zeta(sol.y);
    if (std::abs(r2) <= controls.tol_constraint && r1.norm() <= r1_tol) {
      sol.iterations = it;
      break;
    }
    if (it == controls.max_iter) {
      throw NewtonFailure("Newton did not converge at stage " + std::to_string(stage_index + 1) +
                              " (|zeta| = " + std::to_string(std::abs(r2)) + ")",
                          stage_index, it);
    }

    Vec u = r1;
    Vec w = D;
    if (full && sol.lambda != 0.0) {
      Mat K(dim, dim);
      Vec e = Vec::Zero(dim);
      for (int k = 0; k < dim; ++k) {
        e(k) = 1.0;
        K.col(k) = e - sol.lambda * ahat_ii * manifold.hess_action(sol.y, e);
        e(k) = 0.0;
      }
      if (!solve_two(K, u, w)) {
        throw SingularProjection("singular Newton matrix at stage " +
                                 std::to_string(stage_index + 1));
      }
    }
    const double denom = g.dot(w);
    if (!(std::abs(denom) > 1e-12 * g.norm() * w.norm())) {
      throw SingularProjection("projection direction is tangent to the manifold at stage " +
                               std::to_string(stage_index + 1));
    }
    const double dlam = (g.dot(u) - r2) / denom;
    const Vec dy = -u + dlam * w;
    sol.y += controls.damping * dy;
    sol.lambda += controls.damping * dlam;
  }

  if ((sol.y - x_n).norm() > controls.max_stage_distance) {
    throw NewtonFailure("stage " + std::to_string(stage_index + 1) +
                            " converged to a distant root",
                        stage_index, sol.iterations);
  }
  return sol;
}

Integrator::Integrator(ButcherTableau tableau, Manifold manifold, Potential potential,
                       double sigma, NewtonControls controls)
    : tableau_(std::move(tableau)),
      manifold_(std::move(manifold)),
      potential_(std::move(potential)),
      sigma_(sigma),
      controls_(controls) {
  require_valid(tableau_);
  controls_.check();
  if (!(sigma_ >= 0.0) || !std::isfinite(sigma_)) throw ConfigError("sigma must be >= 0");
  const int s = tableau_.stages();
  needs_f_.assign(s, false);
  needs_g_.assign(s, false);
  for (int j = 0; j < s; ++j) {
    for (int k = 0; k < s; ++k) {
      if (tableau_.A()(k, j) != 0.0) needs_f_[j] = true;
      if (k != j && tableau_.Ahat()(k, j) != 0.0) needs_g_[j] = true;
    }
  }
  sequential_ = tableau_.sequential();
}

bool Integrator::solve_one(int i, const Vec& x_n, double h, double sqrt_h, const Vec& xi,
                           StepWorkspace& ws, bool include_all) const {
  const int s = tableau_.stages();
  const auto& A = tableau_.A();
  const auto& Ah = tableau_.Ahat();

  Vec p = x_n;
  for (int j = 0; j < s; ++j) {
    if (A(i, j) != 0.0 && (include_all || j < i)) p += (h * A(i, j)) * ws.f[j];
  }
  const double di = tableau_.d()(i);
  if (di != 0.0 && sigma_ != 0.0) p += (sigma_ * sqrt_h * di) * xi;

  if (!tableau_.projected(i)) {
    ws.y[i] = p;
    ws.lambda[i] = 0.0;
    ws.iters[i] = 0;
  } else {
    Vec D0 = Vec::Zero(x_n.size());
    for (int j = 0; j < s; ++j) {
      if (j != i && Ah(i, j) != 0.0 && (include_all || j < i)) D0 += Ah(i, j) * ws.g[j];
    }
    try {
      StageSolution sol = solve_stage(manifold_, x_n, p, D0, Ah(i, i), controls_, i);
      ws.y[i] = sol.y;
      ws.lambda[i] = sol.lambda;
      ws.iters[i] = sol.iterations;
    } catch (const NewtonFailure& e) {
      ws.failed_stage = i;
      ws.iters[i] = e.iterations();
      ws.message = e.what();
      return false;
    } catch (const SingularProjection& e) {
      ws.failed_stage = i;
      ws.message = e.what();
      return false;
    } catch (const DomainError& e) {
      ws.failed_stage = i;
      ws.message = e.what();
      return false;
    }
  }
  if (needs_f_[i]) ws.f[i] = potential_.drift(ws.y[i]);
  if (needs_g_[i]) ws.g[i] = manifold_.grad(ws.y[i]);
  return true;
}

bool Integrator::forward_pass(const Vec& x_n, double h, const Vec& xi, StepWorkspace& ws) const {
  const double sqrt_h = std::sqrt(h);
  for (int i = 0; i < tableau_.stages(); ++i) {
    if (!solve_one(i, x_n, h, sqrt_h, xi, ws, false)) return false;
  }
  ws.sweeps = 1;
  return true;
}

bool Integrator::coupled_sweeps(const Vec& x_n, double h, const Vec& xi, StepWorkspace& ws) const {
  const int s = tableau_.stages();
  const double sqrt_h = std::sqrt(h);
  const Vec f0 = potential_.drift(x_n);
  const Vec g0 = manifold_.grad(x_n);
  for (int j = 0; j < s; ++j) {
    ws.y[j] = x_n;
    ws.f[j] = f0;
    ws.g[j] = g0;
  }
  const double threshold = controls_.tol_constraint * (1.0 + x_n.norm());
  for (int sweep = 1; sweep <= controls_.coupled_sweeps; ++sweep) {
    double change = 0.0;
    for (int i = 0; i < s; ++i) {
      const Vec before = ws.y[i];
      if (!solve_one(i, x_n, h, sqrt_h, xi, ws, true)) return false;
      change = std::max(change, (ws.y[i] - before).norm());
    }
    ws.sweeps = sweep;
    if (change < threshold) return true;
  }
  ws.failed_stage = s - 1;
  ws.message = "coupled stage sweeps did not converge in " +
               std::to_string(controls_.coupled_sweeps) + " sweeps";
  return false;
}

bool Integrator::advance(Vec& x, double h, const Vec& xi, StepWorkspace& ws) const {
  const int s = tableau_.stages();
  if (static_cast<int>(ws.y.size()) != s) {
    ws.y.assign(s, Vec::Zero(x.size()));
    ws.f.assign(s, Vec::Zero(x.size()));
    ws.g.assign(s, Vec::Zero(x.size()));
    ws.lambda.assign(s, 0.0);
    ws.iters.assign(s, 0);
  }
  ws.failed_stage = -1;
  ws.message.clear();
  const bool ok = sequential_ ? forward_pass(x, h, xi, ws) : coupled_sweeps(x, h, xi, ws);
  if (ok) x = ws.y[s - 1];
  return ok;
}

StepOutcome Integrator::step(const Vec& x_n, double h, const Vec& xi) const {
  if (!(h > 0.0) || !std::isfinite(h)) throw PreconditionError("step size must be positive");
  if (x_n.size() != manifold_.ambient_dim() || xi.size() != x_n.size()) {
    throw PreconditionError("state and noise must match the ambient dimension");
  }
  if (std::abs(manifold_.zeta(x_n)) > 1e-10) {
    throw PreconditionError("x_n is not on the manifold");
  }
  StepWorkspace ws;
  Vec x = x_n;
  const bool ok = advance(x, h, xi, ws);

  StepOutcome out;
  out.x_next = x;
  out.stage_points = ws.y;
  out.multipliers = ws.lambda;
  out.newton_iters = ws.iters;
  out.sweeps = ws.sweeps;
  if (!ok) {
    out.status = StepStatus::newton_failed;
    out.failed_stage = ws.failed_stage;
    out.message = ws.message;
    if (controls_.on_failure == FailurePolicy::error) {
      if (ws.message.rfind("coupled", 0) == 0) throw ConvergenceError(ws.message);
      throw NewtonFailure(ws.message, ws.failed_stage,
                          ws.failed_stage >= 0 ? ws.iters[ws.failed_stage] : 0);
    }
  }
  return out;
}

StepOutcome Integrator::step(const Vec& x_n, double h, const NoiseSpec& noise, Rng& rng) const {
  return step(x_n, h, sample_noise(noise, rng));
}

}  // namespace mrk
