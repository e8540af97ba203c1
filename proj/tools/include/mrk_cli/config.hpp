#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "mrk/mrk.hpp"

namespace mrk::cli {

using nlohmann::json;

/**
 * Experiment description read from JSON. Every field is optional; missing
 * fields take the defaults below. Unknown keys are rejected so that typos do
 * not silently fall back to defaults.
 *
 *   {
 *     "manifold":  {"kind": "sphere", "dim": 3} | {"kind": "torus", "R": 3, "r": 1}
 *                | {"kind": "special_linear", "m": 2},
 *     "potential": {"name": "sphere-band", "a": 25},
 *     "sigma": 1.4142135623730951,
 *     "scheme": "rk2-invmeas" | {"name", "A", "Ahat", "d", "delta"?} | {"file": "path.json"},
 *     "observable": "x3sq",
 *     "T": 10, "h": 0.015625, "M": 1000, "seed": 7,
 *     "noise": "discrete3",
 *     "newton": {"tol_constraint", "max_iter", "coupled_sweeps", "damping",
 *                "max_stage_distance", "on_failure": "discard" | "error"},
 *     "x0": [0, 0, 1],
 *     "discard_ceiling": 0.01,
 *     "threads": 0,
 *     "h_list": [0.25, 0.125],
 *     "reference": {"kind": "quadrature"} | {"kind": "value", "value": 0.1}
 *                | {"kind": "self", "h": 0.0006103515625, "M": 100000}
 *   }
 */
struct ExperimentConfig {
  json manifold = {{"kind", "sphere"}, {"dim", 3}};
  std::string potential = "sphere-band";
  double a = kDefaultPotentialScale;
  double sigma = 1.4142135623730951;
  json scheme = "rk2-invmeas";
  std::string observable = "x3sq";
  double T = 10.0;
  double h = 1.0 / 64.0;
  std::int64_t M = 1000;
  std::optional<std::uint64_t> seed;
  std::string noise = "discrete3";
  NewtonControls newton = discard_newton();
  std::optional<std::vector<double>> x0;
  double discard_ceiling = 0.01;
  int threads = 0;
  std::vector<double> h_list;
  json reference;  // null: quadrature for sphere/torus, self reference for SL(m)

  static NewtonControls discard_newton() {
    NewtonControls nc;
    nc.on_failure = FailurePolicy::discard;
    return nc;
  }
};

/// Throws ConfigError naming the offending field.
ExperimentConfig parse_config(const json& j);
json to_json(const ExperimentConfig& cfg);

/// Reads a config file. A run manifest is accepted too; its "config" entry is used.
ExperimentConfig load_config(const std::string& path);
json read_json_file(const std::string& path);

Manifold build_manifold(const json& spec);
ButcherTableau build_scheme(const json& spec);
ButcherTableau scheme_from_json(const json& j);
json tableau_to_json(const ButcherTableau& t);
/// Replaces a {"file": ...} scheme by its coefficients so that manifests are self-contained.
json inline_scheme(const json& spec);

/// Requires cfg.seed to be set.
SimConfig build_sim(const ExperimentConfig& cfg);

/// Shortest round-trip decimal form; "nan"/"inf"/"-inf" for non-finite values.
std::string format_double(double v);

}  // namespace mrk::cli
