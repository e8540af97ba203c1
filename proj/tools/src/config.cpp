#include "mrk_cli/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

namespace mrk::cli {

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!allowed.count(it.key())) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}

template <class T>
T read(const json& j, const std::string& key, const std::string& where) {
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError("field '" + key + "' in " + where + " is missing or has the wrong type");
  }
}

template <class T>
void read_opt(const json& j, const std::string& key, T& out, const std::string& where) {
  if (j.contains(key)) out = read<T>(j, key, where);
}

Eigen::MatrixXd matrix_from(const json& j, const std::string& key) {
  const auto rows = read<std::vector<std::vector<double>>>(j, key, "scheme");
  const auto s = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd m(s, s);
  for (Eigen::Index i = 0; i < s; ++i) {
    if (static_cast<Eigen::Index>(rows[i].size()) != s) {
      throw StructuralError("scheme matrix " + key + " must be square");
    }
    for (Eigen::Index k = 0; k < s; ++k) m(i, k) = rows[i][k];
  }
  return m;
}

Eigen::VectorXd vector_from(const json& j, const std::string& key) {
  const auto v = read<std::vector<double>>(j, key, "scheme");
  return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

json matrix_to(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
    rows.push_back(row);
  }
  return rows;
}

json vector_to(const Eigen::VectorXd& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

json newton_to(const NewtonControls& nc) {
  json j = {{"tol_constraint", nc.tol_constraint},
            {"max_iter", nc.max_iter},
            {"coupled_sweeps", nc.coupled_sweeps},
            {"damping", nc.damping},
            {"on_failure", nc.on_failure == FailurePolicy::error ? "error" : "discard"}};
  j["max_stage_distance"] = std::isfinite(nc.max_stage_distance) ? json(nc.max_stage_distance) : json();
  return j;
}

NewtonControls newton_from(const json& j) {
  if (!j.is_object()) throw ConfigError("newton must be an object");
  reject_unknown(j, {"tol_constraint", "max_iter", "coupled_sweeps", "damping", "max_stage_distance",
                     "on_failure"},
                 "newton");
  NewtonControls nc = ExperimentConfig::discard_newton();
  read_opt(j, "tol_constraint", nc.tol_constraint, "newton");
  read_opt(j, "max_iter", nc.max_iter, "newton");
  read_opt(j, "coupled_sweeps", nc.coupled_sweeps, "newton");
  read_opt(j, "damping", nc.damping, "newton");
  if (j.contains("max_stage_distance") && !j["max_stage_distance"].is_null()) {
    nc.max_stage_distance = read<double>(j, "max_stage_distance", "newton");
  }
  if (j.contains("on_failure")) {
    const auto p = read<std::string>(j, "on_failure", "newton");
    if (p == "error") {
      nc.on_failure = FailurePolicy::error;
    } else if (p == "discard") {
      nc.on_failure = FailurePolicy::discard;
    } else {
      throw ConfigError("newton.on_failure must be 'error' or 'discard'");
    }
  }
  try {
    nc.check();
  } catch (const Error& e) {
    throw ConfigError(std::string("newton: ") + e.what());
  }
  return nc;
}

}  // namespace

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  reject_unknown(j, {"manifold", "potential", "sigma", "scheme", "observable", "T", "h", "M", "seed",
                     "noise", "newton", "x0", "discard_ceiling", "threads", "h_list", "reference"},
                 "config");
  ExperimentConfig cfg;
  if (j.contains("manifold")) cfg.manifold = j["manifold"];
  if (j.contains("potential")) {
    const json& p = j["potential"];
    if (p.is_string()) {
      cfg.potential = p.get<std::string>();
    } else {
      if (!p.is_object()) throw ConfigError("potential must be a name or an object");
      reject_unknown(p, {"name", "a"}, "potential");
      cfg.potential = read<std::string>(p, "name", "potential");
      read_opt(p, "a", cfg.a, "potential");
    }
  }
  read_opt(j, "sigma", cfg.sigma, "config");
  if (j.contains("scheme")) cfg.scheme = j["scheme"];
  read_opt(j, "observable", cfg.observable, "config");
  read_opt(j, "T", cfg.T, "config");
  read_opt(j, "h", cfg.h, "config");
  read_opt(j, "M", cfg.M, "config");
  if (j.contains("seed") && !j["seed"].is_null()) cfg.seed = read<std::uint64_t>(j, "seed", "config");
  read_opt(j, "noise", cfg.noise, "config");
  if (j.contains("newton")) cfg.newton = newton_from(j["newton"]);
  if (j.contains("x0") && !j["x0"].is_null()) cfg.x0 = read<std::vector<double>>(j, "x0", "config");
  read_opt(j, "discard_ceiling", cfg.discard_ceiling, "config");
  read_opt(j, "threads", cfg.threads, "config");
  read_opt(j, "h_list", cfg.h_list, "config");
  if (j.contains("reference")) cfg.reference = j["reference"];
  return cfg;
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  j["manifold"] = cfg.manifold;
  j["potential"] = {{"name", cfg.potential}, {"a", cfg.a}};
  j["sigma"] = cfg.sigma;
  j["scheme"] = cfg.scheme;
  j["observable"] = cfg.observable;
  j["T"] = cfg.T;
  j["h"] = cfg.h;
  j["M"] = cfg.M;
  j["seed"] = cfg.seed ? json(*cfg.seed) : json();
  j["noise"] = cfg.noise;
  j["newton"] = newton_to(cfg.newton);
  j["x0"] = cfg.x0 ? json(*cfg.x0) : json();
  j["discard_ceiling"] = cfg.discard_ceiling;
  j["threads"] = cfg.threads;
  j["h_list"] = cfg.h_list;
  j["reference"] = cfg.reference;
  return j;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

ExperimentConfig load_config(const std::string& path) {
  const json j = read_json_file(path);
  if (j.is_object() && j.contains("config") && j.contains("mrk_version")) return parse_config(j["config"]);
  return parse_config(j);
}

Manifold build_manifold(const json& spec) {
  if (!spec.is_object()) throw ConfigError("manifold must be an object");
  const auto kind = read<std::string>(spec, "kind", "manifold");
  if (kind == "sphere") {
    reject_unknown(spec, {"kind", "dim"}, "manifold");
    int dim = 3;
    read_opt(spec, "dim", dim, "manifold");
    return Manifold::sphere(dim);
  }
  if (kind == "torus") {
    reject_unknown(spec, {"kind", "R", "r"}, "manifold");
    double R = 3.0, r = 1.0;
    read_opt(spec, "R", R, "manifold");
    read_opt(spec, "r", r, "manifold");
    return Manifold::torus(R, r);
  }
  if (kind == "special_linear" || kind == "sl") {
    reject_unknown(spec, {"kind", "m"}, "manifold");
    int m = 2;
    read_opt(spec, "m", m, "manifold");
    return Manifold::special_linear(m);
  }
  throw ConfigError("unknown manifold kind '" + kind + "' (sphere, torus, special_linear)");
}

ButcherTableau scheme_from_json(const json& j) {
  if (!j.is_object()) throw ConfigError("scheme must be an object");
  reject_unknown(j, {"name", "A", "Ahat", "d", "delta"}, "scheme");
  std::string name = "custom";
  read_opt(j, "name", name, "scheme");
  Eigen::MatrixXd A = matrix_from(j, "A");
  Eigen::MatrixXd Ahat = matrix_from(j, "Ahat");
  Eigen::VectorXd d = vector_from(j, "d");
  if (j.contains("delta")) {
    return ButcherTableau(name, std::move(A), std::move(Ahat), std::move(d), vector_from(j, "delta"));
  }
  return ButcherTableau::from_rows(name, std::move(A), std::move(Ahat), std::move(d));
}

json tableau_to_json(const ButcherTableau& t) {
  return {{"name", t.name()}, {"A", matrix_to(t.A())}, {"Ahat", matrix_to(t.Ahat())}, {"d", vector_to(t.d())},
          {"delta", vector_to(t.delta())}};
}

json inline_scheme(const json& spec) {
  if (spec.is_object() && spec.contains("file")) return tableau_to_json(build_scheme(spec));
  return spec;
}

ButcherTableau build_scheme(const json& spec) {
  if (spec.is_string()) return builtin_tableau(spec.get<std::string>());
  if (spec.is_object() && spec.contains("file")) {
    if (spec.size() != 1) throw ConfigError("scheme {\"file\": ...} takes no other keys");
    return scheme_from_json(read_json_file(spec["file"].get<std::string>()));
  }
  return scheme_from_json(spec);
}

SimConfig build_sim(const ExperimentConfig& cfg) {
  if (!cfg.seed) throw ConfigError("seed is not set");
  Manifold m = build_manifold(cfg.manifold);
  Potential V = builtin_potential(cfg.potential, cfg.a, m);
  SimConfig sim = make_config(m, V, cfg.sigma, build_scheme(cfg.scheme), cfg.T, cfg.h, cfg.M, *cfg.seed);
  sim.noise.kind = parse_noise_kind(cfg.noise);
  sim.newton = cfg.newton;
  sim.discard_ceiling = cfg.discard_ceiling;
  sim.threads = cfg.threads;
  if (cfg.x0) {
    const auto& x = *cfg.x0;
    if (static_cast<int>(x.size()) != m.ambient_dim()) throw ConfigError("x0 has the wrong dimension");
    sim.x0 = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
  }
  sim.check();
  return sim;
}

}  // namespace mrk::cli
