#include "mrk_cli/cli.hpp"

#include <charconv>
#include <chrono>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <random>
#include <sstream>

#include "CLI11.hpp"
#include "mrk_cli/config.hpp"

namespace mrk::cli {

namespace {

double parse_number(const std::string& text, const std::string& what) {
  double v = 0.0;
  const char* first = text.data();
  const char* last = first + text.size();
  while (first < last && *first == ' ') ++first;
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) throw ConfigError("cannot parse " + what + " '" + text + "'");
  return v;
}

std::vector<double> parse_list(const std::string& text, const std::string& what) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(parse_number(item, what));
  return out;
}

std::string timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

std::uint64_t entropy_seed() {
  std::random_device rd;
  return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

void write_text(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty()) {
    out << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot write " + path);
  f << text;
}

// Options shared by sample and converge. Flags override the config file.
struct SimOptions {
  std::string config, scheme, scheme_file, observable, potential, noise, output, manifest;
  std::uint64_t seed = 0;
  std::int64_t M = 0;
  double T = 0.0, h = 0.0, a = 0.0, sigma = 0.0, ceiling = 0.0;
  int threads = 0;
  std::string failure_policy;
  std::map<std::string, CLI::Option*> opt;

  void attach(CLI::App* sub) {
    opt["config"] = sub->add_option("--config", config, "experiment JSON or run manifest");
    opt["scheme"] = sub->add_option("--scheme", scheme, "built-in scheme name");
    opt["scheme-file"] = sub->add_option("--scheme-file", scheme_file, "scheme JSON file");
    opt["observable"] = sub->add_option("--observable", observable, "x3sq, trace, one, coordinate(i)");
    opt["potential"] = sub->add_option("--potential", potential, "zero, sphere-band, torus-height, sl-identity");
    opt["a"] = sub->add_option("--a", a, "potential scale");
    opt["sigma"] = sub->add_option("--sigma", sigma, "noise amplitude");
    opt["noise"] = sub->add_option("--noise", noise, "discrete3 or gaussian");
    opt["seed"] = sub->add_option("--seed", seed, "master seed (entropy if omitted)");
    opt["M"] = sub->add_option("--M", M, "trajectory count");
    opt["T"] = sub->add_option("--T", T, "final time");
    opt["h"] = sub->add_option("--step", h, "step size h");
    opt["threads"] = sub->add_option("--threads", threads, "worker cap (0 = all cores)");
    opt["discard-ceiling"] = sub->add_option("--discard-ceiling", ceiling, "largest tolerated discard fraction");
    opt["on-failure"] = sub->add_option("--on-failure", failure_policy, "discard or error");
    opt["output"] = sub->add_option("--output,-o", output, "CSV path (stdout if omitted)");
    opt["manifest"] = sub->add_option("--manifest", manifest, "manifest path (default <output>.manifest.json)");
    opt["scheme"]->excludes(opt["scheme-file"]);
  }

  bool given(const char* name) const { return opt.at(name)->count() > 0; }

  ExperimentConfig resolve(std::string& seed_source) const {
    ExperimentConfig cfg = config.empty() ? ExperimentConfig{} : load_config(config);
    if (given("scheme")) cfg.scheme = scheme;
    if (given("scheme-file")) cfg.scheme = json{{"file", scheme_file}};
    cfg.scheme = inline_scheme(cfg.scheme);
    if (given("observable")) cfg.observable = observable;
    if (given("potential")) cfg.potential = potential;
    if (given("a")) cfg.a = a;
    if (given("sigma")) cfg.sigma = sigma;
    if (given("noise")) cfg.noise = noise;
    if (given("M")) cfg.M = M;
    if (given("T")) cfg.T = T;
    if (given("h")) cfg.h = h;
    if (given("threads")) cfg.threads = threads;
    if (given("discard-ceiling")) cfg.discard_ceiling = ceiling;
    if (given("on-failure")) {
      if (failure_policy == "error") {
        cfg.newton.on_failure = FailurePolicy::error;
      } else if (failure_policy == "discard") {
        cfg.newton.on_failure = FailurePolicy::discard;
      } else {
        throw ConfigError("--on-failure must be 'discard' or 'error'");
      }
    }
    if (given("seed")) {
      cfg.seed = seed;
      seed_source = "flag";
    } else if (cfg.seed) {
      seed_source = "config";
    } else {
      cfg.seed = entropy_seed();
      seed_source = "entropy";
    }
    return cfg;
  }

  std::string manifest_path() const {
    if (!manifest.empty()) return manifest;
    if (!output.empty()) return output + ".manifest.json";
    return {};
  }
};

void write_manifest(const SimOptions& o, const std::string& command, const ExperimentConfig& cfg,
                    const std::string& seed_source, const std::string& started, double seconds,
                    const char* schema, json outputs) {
  const std::string path = o.manifest_path();
  if (path.empty()) return;
  json m;
  m["mrk_version"] = kVersion;
  m["command"] = command;
  m["config"] = to_json(cfg);
  m["seed"] = *cfg.seed;
  m["seed_source"] = seed_source;
  m["started_at"] = started;
  m["wall_clock_seconds"] = seconds;
  m["csv_schema"] = schema;
  m["csv_path"] = o.output;
  m["outputs"] = std::move(outputs);
  write_text(m.dump(2) + "\n", path, std::cout);
}

double elapsed(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// check ---------------------------------------------------------------------

int cmd_check(const std::string& scheme, const std::string& scheme_file,
              const std::vector<std::string>& asserts, double tol, bool as_json, std::ostream& out,
              std::ostream& err) {
  const ButcherTableau t = scheme_file.empty() ? builtin_tableau(scheme.empty() ? "rk2-invmeas" : scheme)
                                               : scheme_from_json(read_json_file(scheme_file));
  const ValidationReport validation = validate(t);
  require_valid(t);
  const ConditionReport report = classify(t, tol);
  for (const auto& a : asserts) {
    if (!report.verdicts.count(a)) {
      std::string names;
      for (const auto& [k, v] : report.verdicts) names += " " + k;
      throw ConfigError("unknown verdict '" + a + "'; available:" + names);
    }
  }

  if (as_json) {
    json j;
    j["scheme"] = report.scheme_name;
    j["stages"] = t.stages();
    j["tolerance"] = report.tolerance;
    j["advisories"] = validation.advisories;
    j["verdicts"] = report.verdicts;
    json groups = json::array();
    for (const auto& g : report.groups) {
      json rows = json::array();
      for (const auto& r : g.residuals) {
        rows.push_back({{"condition", r.condition}, {"lhs", r.lhs}, {"rhs", r.rhs}, {"residual", r.abs_residual}});
      }
      groups.push_back({{"group", g.group_id}, {"description", g.description}, {"max_residual", g.max_residual()},
                        {"residuals", rows}});
    }
    j["groups"] = groups;
    out << j.dump(2) << "\n";
  } else {
    out << "scheme " << report.scheme_name << " (" << t.stages() << " stages, tol "
        << format_double(report.tolerance) << ")\n";
    for (const auto& a : validation.advisories) out << "advisory: " << a << "\n";
    for (const auto& g : report.groups) {
      out << "  " << std::left << std::setw(20) << g.group_id << " max residual "
          << format_double(g.max_residual()) << "\n";
      for (const auto& r : g.residuals) {
        out << "      " << r.condition << "  lhs=" << format_double(r.lhs) << " rhs=" << format_double(r.rhs)
            << " |res|=" << format_double(r.abs_residual) << "\n";
      }
    }
    out << "verdicts:";
    for (const auto& [k, v] : report.verdicts) out << " " << k << "=" << (v ? "yes" : "no");
    out << "\n";
  }

  int code = kExitOk;
  for (const auto& a : asserts) {
    if (!report.verdicts.at(a)) {
      err << "verdict '" << a << "' does not hold for " << report.scheme_name << "\n";
      code = kExitVerdict;
    }
  }
  return code;
}

// sample --------------------------------------------------------------------

int cmd_sample(const SimOptions& o, std::ostream& out) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = timestamp();
  std::string seed_source;
  const ExperimentConfig cfg = o.resolve(seed_source);
  const SimConfig sim = build_sim(cfg);
  const Observable phi = builtin_observable(cfg.observable, sim.manifold.ambient_dim());
  const EstimateResult e = estimate(sim, phi);

  std::string csv = "h,N,M,estimate,stderr,M_effective,discard_fraction\n";
  csv += format_double(sim.h) + "," + std::to_string(sim.steps()) + "," + std::to_string(sim.M) + "," +
         format_double(e.mean) + "," + format_double(e.std_error) + "," + std::to_string(e.M_effective) + "," +
         format_double(e.discard_fraction) + "\n";
  const json trailer = {{"schema", kSampleCsvSchema},
                        {"scheme", sim.scheme.name()},
                        {"observable", phi.name()},
                        {"seed", *cfg.seed},
                        {"discards", e.discards}};
  csv += trailer.dump() + "\n";
  write_text(csv, o.output, out);

  write_manifest(o, "sample", cfg, seed_source, started, elapsed(t0), kSampleCsvSchema,
                 {{"estimate", e.mean},
                  {"stderr", e.std_error},
                  {"M_effective", e.M_effective},
                  {"discards", e.discards},
                  {"discard_fraction", e.discard_fraction}});
  return kExitOk;
}

// converge ------------------------------------------------------------------

struct ResolvedReference {
  ReferenceSpec spec;
  json detail;
};

ResolvedReference resolve_reference(const ExperimentConfig& cfg, const SimConfig& sim, const Observable& phi) {
  json ref = cfg.reference;
  const ManifoldKind kind = sim.manifold.kind();
  if (ref.is_null()) {
    ref = kind == ManifoldKind::special_linear ? json{{"kind", "self"}} : json{{"kind", "quadrature"}};
  }
  if (!ref.is_object() || !ref.contains("kind")) throw ConfigError("reference must be an object with a 'kind'");
  const std::string rk = ref["kind"].get<std::string>();
  ResolvedReference out;
  out.detail = ref;

  if (rk == "value") {
    out.spec.value = ref.at("value").get<double>();
    out.spec.provenance = ref.value("provenance", std::string("value"));
  } else if (rk == "quadrature") {
    ReferenceValue q;
    if (kind == ManifoldKind::sphere && sim.manifold.ambient_dim() == 3) {
      q = sphere_reference(sim.potential, phi, sim.sigma);
    } else if (kind == ManifoldKind::torus) {
      q = torus_reference(sim.potential, phi, sim.sigma, *sim.manifold.torus_major_radius(),
                          *sim.manifold.torus_minor_radius());
    } else {
      throw ConfigError("quadrature reference exists only for the 2-sphere and the torus");
    }
    out.spec.value = q.value;
    out.spec.provenance = q.method;
    out.detail["resolution"] = q.resolution;
    out.detail["est_error"] = q.est_error;
  } else if (rk == "self") {
    SimConfig fine = sim;
    fine.scheme = builtin_tableau(ref.value("scheme", std::string("rk2-invmeas")));
    fine.h = ref.contains("h") ? ref["h"].get<double>() : std::ldexp(sim.T, -14);
    fine.M = ref.contains("M") ? ref["M"].get<std::int64_t>() : sim.M;
    if (ref.contains("seed")) fine.seed = ref["seed"].get<std::uint64_t>();
    const EstimateResult e = estimate(fine, phi);
    out.spec.value = e.mean;
    out.spec.provenance = "self:" + fine.scheme.name() + " h=" + format_double(fine.h);
    out.detail["h"] = fine.h;
    out.detail["M"] = fine.M;
    out.detail["stderr"] = e.std_error;
  } else {
    throw ConfigError("unknown reference kind '" + rk + "' (quadrature, value, self)");
  }
  out.detail["value"] = out.spec.value;
  return out;
}

int cmd_converge(const SimOptions& o, const std::string& h_list, const std::string& expect_slope,
                 const std::optional<double>& reference_value, std::ostream& out, std::ostream& err) {
  const auto t0 = std::chrono::steady_clock::now();
  const std::string started = timestamp();
  std::string seed_source;
  ExperimentConfig cfg = o.resolve(seed_source);
  if (!h_list.empty()) cfg.h_list = parse_list(h_list, "--h-list");
  if (reference_value) cfg.reference = {{"kind", "value"}, {"value", *reference_value}};
  if (cfg.h_list.empty()) throw ConfigError("converge needs h_list (config) or --h-list");
  std::optional<std::pair<double, double>> window;
  if (!expect_slope.empty()) {
    const auto w = parse_list(expect_slope, "--expect-slope");
    if (w.size() != 2 || !(w[0] <= w[1])) throw ConfigError("--expect-slope takes lo,hi");
    window = {w[0], w[1]};
  }
  cfg.h = cfg.h_list.front();

  const SimConfig sim = build_sim(cfg);
  const Observable phi = builtin_observable(cfg.observable, sim.manifold.ambient_dim());
  const ResolvedReference ref = resolve_reference(cfg, sim, phi);
  const ConvergenceReport rep = convergence_study(sim, cfg.h_list, phi, ref.spec);

  std::string csv = "h,N,M,estimate,stderr,error,discard_fraction\n";
  json rejected = json::array();
  for (std::size_t i = 0; i < rep.rows.size(); ++i) {
    const auto& r = rep.rows[i];
    csv += format_double(r.h) + "," + std::to_string(r.N) + "," + std::to_string(r.M) + "," +
           format_double(r.estimate) + "," + format_double(r.std_error) + "," + format_double(r.error) + "," +
           format_double(r.discard_fraction) + "\n";
    if (r.rejected) rejected.push_back({{"row", i}, {"note", r.note}});
  }
  json trailer = {{"schema", kConvergeCsvSchema},
                  {"scheme", sim.scheme.name()},
                  {"observable", phi.name()},
                  {"seed", *cfg.seed},
                  {"fitted_slope", rep.fitted_slope ? json(*rep.fitted_slope) : json()},
                  {"fit_window", rep.fit_window},
                  {"reference", ref.spec.value},
                  {"reference_provenance", ref.spec.provenance},
                  {"rejected_rows", rejected}};
  if (!rep.fit_message.empty()) trailer["fit_message"] = rep.fit_message;
  csv += trailer.dump() + "\n";
  write_text(csv, o.output, out);

  int code = kExitOk;
  if (window) {
    if (!rep.fitted_slope) {
      err << "slope assertion failed: no slope could be fitted (" << rep.fit_message << ")\n";
      code = kExitSlope;
    } else if (*rep.fitted_slope < window->first || *rep.fitted_slope > window->second) {
      err << "slope assertion failed: " << format_double(*rep.fitted_slope) << " outside ["
          << format_double(window->first) << ", " << format_double(window->second) << "]\n";
      code = kExitSlope;
    }
  }

  json outputs = trailer;
  outputs["reference_detail"] = ref.detail;
  outputs["exit_code"] = code;
  write_manifest(o, "converge", cfg, seed_source, started, elapsed(t0), kConvergeCsvSchema, outputs);
  return code;
}

// ref -----------------------------------------------------------------------

int cmd_ref(const std::string& config, const std::map<std::string, CLI::Option*>& opt, const std::string& manifold,
            double R, double r, const std::string& potential, double a, double sigma, const std::string& observable,
            double tol, const std::string& output, std::ostream& out) {
  ExperimentConfig cfg = config.empty() ? ExperimentConfig{} : load_config(config);
  const auto given = [&](const char* k) { return opt.at(k)->count() > 0; };
  if (given("manifold")) {
    if (manifold == "sphere") {
      cfg.manifold = {{"kind", "sphere"}, {"dim", 3}};
    } else if (manifold == "torus") {
      cfg.manifold = {{"kind", "torus"}, {"R", 3.0}, {"r", 1.0}};
    } else {
      throw ConfigError("ref supports --manifold sphere or torus");
    }
  }
  if (given("R")) cfg.manifold["R"] = R;
  if (given("r")) cfg.manifold["r"] = r;
  if (given("potential")) cfg.potential = potential;
  if (given("a")) cfg.a = a;
  if (given("sigma")) cfg.sigma = sigma;
  if (given("observable")) cfg.observable = observable;

  const Manifold m = build_manifold(cfg.manifold);
  const Potential V = builtin_potential(cfg.potential, cfg.a, m);
  const Observable phi = builtin_observable(cfg.observable, m.ambient_dim());
  QuadratureControls qc;
  if (given("tol")) qc.tol = tol;
  ReferenceValue q;
  if (m.kind() == ManifoldKind::sphere && m.ambient_dim() == 3) {
    q = sphere_reference(V, phi, cfg.sigma, qc);
  } else if (m.kind() == ManifoldKind::torus) {
    q = torus_reference(V, phi, cfg.sigma, *m.torus_major_radius(), *m.torus_minor_radius(), qc);
  } else {
    throw ConfigError("quadrature reference exists only for the 2-sphere and the torus");
  }
  const json j = {{"manifold", cfg.manifold}, {"potential", cfg.potential}, {"a", cfg.a},
                  {"sigma", cfg.sigma},       {"observable", phi.name()},   {"value", q.value},
                  {"est_error", q.est_error}, {"resolution", q.resolution}, {"method", q.method}};
  write_text(j.dump(2) + "\n", output, out);
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Projected stochastic Runge-Kutta sampling on constraint manifolds", "mrk"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kVersion));

  auto* check = app.add_subcommand("check", "evaluate order conditions of a scheme");
  std::string c_scheme, c_file;
  std::vector<std::string> c_asserts;
  double c_tol = kDefaultConditionTolerance;
  bool c_json = false;
  auto* c_opt_scheme = check->add_option("--scheme", c_scheme, "built-in scheme name");
  auto* c_opt_file = check->add_option("--scheme-file", c_file, "scheme JSON file");
  c_opt_scheme->excludes(c_opt_file);
  check->add_option("--assert", c_asserts, "verdict that must hold (repeatable)");
  check->add_option("--tol", c_tol, "residual tolerance");
  check->add_flag("--json", c_json, "machine-readable report");

  SimOptions s_opts;
  auto* sample = app.add_subcommand("sample", "ensemble estimate of an observable");
  s_opts.attach(sample);

  SimOptions v_opts;
  std::string v_hlist, v_expect;
  double v_ref = 0.0;
  auto* converge = app.add_subcommand("converge", "error against a reference over a list of step sizes");
  v_opts.attach(converge);
  converge->add_option("--h-list", v_hlist, "comma-separated descending step sizes");
  converge->add_option("--expect-slope", v_expect, "lo,hi window for the fitted slope");
  auto* v_opt_ref = converge->add_option("--reference", v_ref, "fixed reference value");

  auto* ref = app.add_subcommand("ref", "quadrature reference value");
  std::string r_config, r_manifold, r_potential, r_observable, r_output;
  double r_R = 3.0, r_r = 1.0, r_a = 0.0, r_sigma = 0.0, r_tol = 0.0;
  std::map<std::string, CLI::Option*> r_opt;
  ref->add_option("--config", r_config, "experiment JSON");
  r_opt["manifold"] = ref->add_option("--manifold", r_manifold, "sphere or torus");
  r_opt["R"] = ref->add_option("--R", r_R, "torus major radius");
  r_opt["r"] = ref->add_option("--r", r_r, "torus minor radius");
  r_opt["potential"] = ref->add_option("--potential", r_potential, "potential name");
  r_opt["a"] = ref->add_option("--a", r_a, "potential scale");
  r_opt["sigma"] = ref->add_option("--sigma", r_sigma, "noise amplitude");
  r_opt["observable"] = ref->add_option("--observable", r_observable, "observable name");
  r_opt["tol"] = ref->add_option("--tol", r_tol, "self-convergence tolerance");
  ref->add_option("--output,-o", r_output, "JSON path (stdout if omitted)");

  std::vector<std::string> storage;
  storage.reserve(args.size() + 1);
  storage.emplace_back("mrk");
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (check->parsed()) return cmd_check(c_scheme, c_file, c_asserts, c_tol, c_json, out, err);
    if (sample->parsed()) return cmd_sample(s_opts, out);
    if (converge->parsed()) {
      std::optional<double> fixed;
      if (v_opt_ref->count()) fixed = v_ref;
      return cmd_converge(v_opts, v_hlist, v_expect, fixed, out, err);
    }
    if (ref->parsed()) {
      return cmd_ref(r_config, r_opt, r_manifold, r_R, r_r, r_potential, r_a, r_sigma, r_observable, r_tol, r_output,
                     out);
    }
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const StructuralError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const PreconditionError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const json::exception& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const QualityError& e) {
    err << "too many failed trajectories: " << e.what() << "\n";
    return kExitQuality;
  } catch (const NewtonFailure& e) {
    err << "Newton failure: " << e.what() << "\n";
    return kExitQuality;
  } catch (const SingularProjection& e) {
    err << "singular projection: " << e.what() << "\n";
    return kExitQuality;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return kExitConfig;
}

}  // namespace mrk::cli
