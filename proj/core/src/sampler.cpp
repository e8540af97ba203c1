#include "mrk/sampler.hpp"

#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>
#include <utility>

namespace mrk {

namespace {

int resolve_threads(int requested, std::int64_t work) {
  int n = requested > 0 ? requested : static_cast<int>(std::thread::hardware_concurrency());
  if (n < 1) n = 1;
  if (work < n) n = static_cast<int>(std::max<std::int64_t>(work, 1));
  return n;
}

// Calls body(m) for m in [0, count) on up to `threads` workers pulling
// fixed-size chunks. The first exception is rethrown.
template <class Body>
void parallel_for(std::int64_t count, int threads, Body body) {
  const int workers = resolve_threads(threads, count);
  if (workers == 1) {
    for (std::int64_t m = 0; m < count; ++m) body(m);
    return;
  }
  constexpr std::int64_t chunk = 256;
  std::atomic<std::int64_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      try {
        for (;;) {
          const std::int64_t begin = next.fetch_add(chunk);
          if (begin >= count) break;
          const std::int64_t end = std::min(count, begin + chunk);
          for (std::int64_t m = begin; m < end; ++m) body(m);
        }
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!error) error = std::current_exception();
        next.store(count);
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

}  // namespace

std::int64_t SimConfig::steps() const {
  if (!(T > 0.0) || !(h > 0.0) || !std::isfinite(T) || !std::isfinite(h)) {
    throw ConfigError("T and h must be positive");
  }
  const double ratio = T / h;
  const double rounded = std::round(ratio);
  if (std::abs(ratio - rounded) > 1e-9 * std::max(1.0, ratio)) {
    throw ConfigError("T / h = " + std::to_string(ratio) + " is not an integer");
  }
  return static_cast<std::int64_t>(rounded);
}

void SimConfig::check() const {
  steps();
  if (M < 1) throw ConfigError("M must be >= 1");
  if (!(sigma >= 0.0)) throw ConfigError("sigma must be >= 0");
  if (x0.size() != manifold.ambient_dim()) throw ConfigError("x0 has the wrong dimension");
  if (noise.dim != manifold.ambient_dim()) throw ConfigError("noise dimension mismatch");
  if (std::abs(manifold.zeta(x0)) > 1e-10) throw ConfigError("x0 is not on the manifold");
  if (!(discard_ceiling >= 0.0 && discard_ceiling <= 1.0)) {
    throw ConfigError("discard ceiling must lie in [0, 1]");
  }
  newton.check();
}

SimConfig make_config(Manifold manifold, Potential potential, double sigma, ButcherTableau scheme,
                      double T, double h, std::int64_t M, std::uint64_t seed) {
  const int dim = manifold.ambient_dim();
  Vec x0 = manifold.default_point();
  NewtonControls newton;
  newton.on_failure = FailurePolicy::discard;
  return SimConfig{std::move(manifold), std::move(potential), sigma, std::move(scheme), T, h, M,
                   seed, NoiseSpec{NoiseKind::discrete3, dim}, newton, std::move(x0)};
}

namespace {

TrajectoryResult run_with(const Integrator& integrator, const SimConfig& cfg, std::int64_t N,
                          std::int64_t index) {
  Rng rng = trajectory_stream(cfg.seed, static_cast<std::uint64_t>(index));
  StepWorkspace ws;
  TrajectoryResult result;
  Vec x = cfg.x0;
  for (std::int64_t n = 0; n < N; ++n) {
    const Vec xi = sample_noise(cfg.noise, rng);
    if (!integrator.advance(x, cfg.h, xi, ws)) {
      if (cfg.newton.on_failure == FailurePolicy::error) {
        throw NewtonFailure("trajectory " + std::to_string(index) + ", step " +
                                std::to_string(n) + ": " + ws.message,
                            ws.failed_stage, 0);
      }
      result.discarded = true;
      result.failed_step = n;
      result.message = ws.message;
      break;
    }
  }
  result.final_state = x;
  return result;
}

}  // namespace

TrajectoryResult run_trajectory(const SimConfig& cfg, std::int64_t index) {
  cfg.check();
  const Integrator integrator(cfg.scheme, cfg.manifold, cfg.potential, cfg.sigma, cfg.newton);
  return run_with(integrator, cfg, cfg.steps(), index);
}

namespace {

EstimateResult estimate_unchecked(const SimConfig& cfg, const Observable& phi) {
  cfg.check();
  const std::int64_t N = cfg.steps();
  const Integrator integrator(cfg.scheme, cfg.manifold, cfg.potential, cfg.sigma, cfg.newton);

  std::vector<double> values(static_cast<std::size_t>(cfg.M), 0.0);
  std::vector<unsigned char> kept(static_cast<std::size_t>(cfg.M), 0);
  parallel_for(cfg.M, cfg.threads, [&](std::int64_t m) {
    const TrajectoryResult r = run_with(integrator, cfg, N, m);
    if (!r.discarded) {
      values[static_cast<std::size_t>(m)] = phi(r.final_state);
      kept[static_cast<std::size_t>(m)] = 1;
    }
  });

  EstimateResult out;
  double sum = 0.0;
  for (std::int64_t m = 0; m < cfg.M; ++m) {
    if (kept[static_cast<std::size_t>(m)]) {
      sum += values[static_cast<std::size_t>(m)];
      ++out.M_effective;
    }
  }
  out.discards = cfg.M - out.M_effective;
  out.discard_fraction = static_cast<double>(out.discards) / static_cast<double>(cfg.M);
  if (out.M_effective == 0) {
    out.mean = out.std_error = std::numeric_limits<double>::quiet_NaN();
    return out;
  }
  out.mean = sum / static_cast<double>(out.M_effective);
  double ss = 0.0;
  for (std::int64_t m = 0; m < cfg.M; ++m) {
    if (kept[static_cast<std::size_t>(m)]) {
      const double dev = values[static_cast<std::size_t>(m)] - out.mean;
      ss += dev * dev;
    }
  }
  const double meff = static_cast<double>(out.M_effective);
  out.std_error = out.M_effective > 1 ? std::sqrt(ss / (meff * (meff - 1.0))) : 0.0;
  return out;
}

bool over_ceiling(const EstimateResult& e, const SimConfig& cfg) {
  return e.M_effective == 0 || e.discard_fraction > cfg.discard_ceiling;
}

std::string discard_message(const EstimateResult& e, const SimConfig& cfg) {
  return "discarded " + std::to_string(e.discards) + " of " + std::to_string(cfg.M) +
         " trajectories (ceiling " + std::to_string(cfg.discard_ceiling) + ")";
}

}  // namespace

EstimateResult estimate(const SimConfig& cfg, const Observable& phi) {
  EstimateResult out = estimate_unchecked(cfg, phi);
  if (over_ceiling(out, cfg)) throw QualityError(discard_message(out, cfg));
  return out;
}

double time_average(const SimConfig& cfg, const Observable& phi, std::int64_t burn_in_steps) {
  cfg.check();
  const std::int64_t N = cfg.steps();
  if (burn_in_steps < 0 || burn_in_steps >= N) throw ConfigError("burn-in must lie in [0, N)");
  const Integrator integrator(cfg.scheme, cfg.manifold, cfg.potential, cfg.sigma, cfg.newton);
  Rng rng = trajectory_stream(cfg.seed, 0);
  StepWorkspace ws;
  Vec x = cfg.x0;
  double sum = 0.0;
  for (std::int64_t n = 0; n < N; ++n) {
    if (!integrator.advance(x, cfg.h, sample_noise(cfg.noise, rng), ws)) {
      throw NewtonFailure("time average: step " + std::to_string(n) + ": " + ws.message,
                          ws.failed_stage, 0);
    }
    if (n >= burn_in_steps) sum += phi(x);
  }
  return sum / static_cast<double>(N - burn_in_steps);
}

void fit_slope(ConvergenceReport& report) {
  report.fit_window.clear();
  report.fitted_slope.reset();
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (int i = 0; i < static_cast<int>(report.rows.size()); ++i) {
    const auto& row = report.rows[i];
    if (row.rejected || !(row.error > 3.0 * row.std_error) || !(row.error > 0.0)) continue;
    const double lx = std::log(row.h);
    const double ly = std::log(row.error);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    report.fit_window.push_back(i);
  }
  const double n = static_cast<double>(report.fit_window.size());
  if (report.fit_window.size() < 2) {
    report.fit_message = "fewer than two rows with error > 3 stderr; no slope fitted";
    return;
  }
  const double denom = n * sxx - sx * sx;
  if (!(std::abs(denom) > 0.0)) {
    report.fit_message = "degenerate step sizes; no slope fitted";
    return;
  }
  report.fitted_slope = (n * sxy - sx * sy) / denom;
  report.fit_message = "ok";
}

ConvergenceReport convergence_study(const SimConfig& base, const std::vector<double>& h_list,
                                    const Observable& phi, const ReferenceSpec& reference) {
  if (h_list.empty()) throw ConfigError("h_list is empty");
  for (std::size_t i = 1; i < h_list.size(); ++i) {
    if (!(h_list[i] < h_list[i - 1])) throw ConfigError("h_list must be strictly descending");
  }
  ConvergenceReport report;
  report.reference = reference;
  for (const double h : h_list) {
    SimConfig cfg = base;
    cfg.h = h;
    const EstimateResult e = estimate_unchecked(cfg, phi);
    ConvergenceRow row;
    row.h = h;
    row.N = cfg.steps();
    row.M = cfg.M;
    row.estimate = e.mean;
    row.std_error = e.std_error;
    row.error = std::abs(e.mean - reference.value);
    row.discard_fraction = e.discard_fraction;
    if (over_ceiling(e, cfg)) {
      row.rejected = true;
      row.note = discard_message(e, cfg);
    }
    report.rows.push_back(row);
  }
  fit_slope(report);
  return report;
}

}  // namespace mrk
