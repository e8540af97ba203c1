#include "mrk/potentials.hpp"

#include <cmath>
#include <utility>

namespace mrk {

Potential::Potential(std::string name, ValueFn value, GradientFn gradient)
    : name_(std::move(name)), value_(std::move(value)), gradient_(std::move(gradient)) {}

Observable::Observable(std::string name, Fn fn) : name_(std::move(name)), fn_(std::move(fn)) {}

Potential builtin_potential(const std::string& name, double a, const Manifold& manifold) {
  if (!(a > 0.0) || !std::isfinite(a)) throw ConfigError("potential scale a must be positive");
  const int dim = manifold.ambient_dim();

  if (name == "zero") {
    return Potential(
        name, [](const Vec&) { return 0.0; }, [dim](const Vec&) { return Vec(Vec::Zero(dim)); });
  }
  if (name == "sphere-band") {
    if (dim < 2) throw ConfigError("sphere-band needs ambient dimension >= 2");
    return Potential(
        name, [a](const Vec& x) { return a * (1.0 - x(0) * x(0) - x(1) * x(1)); },
        [a, dim](const Vec& x) {
          Vec g = Vec::Zero(dim);
          g(0) = -2.0 * a * x(0);
          g(1) = -2.0 * a * x(1);
          return g;
        });
  }
  if (name == "torus-height") {
    const auto r = manifold.torus_minor_radius();
    if (!r) throw ConfigError("torus-height requires a torus manifold");
    const double minor = *r;
    return Potential(
        name,
        [a, minor](const Vec& x) {
          const double z = x(2) - minor;
          return a * z * z;
        },
        [a, minor](const Vec& x) {
          Vec g = Vec::Zero(3);
          g(2) = 2.0 * a * (x(2) - minor);
          return g;
        });
  }
  if (name == "sl-identity") {
    const auto m = manifold.matrix_order();
    if (!m) throw ConfigError("sl-identity requires an SL(m) manifold");
    const int order = *m;
    const auto shifted = [order](const Vec& x) {
      Vec y = x;
      for (int i = 0; i < order; ++i) y(order * i + i) -= 1.0;
      return y;
    };
    return Potential(
        name, [a, shifted](const Vec& x) { return a * shifted(x).squaredNorm(); },
        [a, shifted](const Vec& x) { return Vec(2.0 * a * shifted(x)); });
  }
  throw ConfigError("unknown potential '" + name + "'");
}

Observable builtin_observable(const std::string& name, int ambient_dim) {
  if (name == "x3sq") {
    if (ambient_dim < 3) throw ConfigError("x3sq needs ambient dimension >= 3");
    return Observable(name, [](const Vec& x) { return x(2) * x(2); });
  }
  if (name == "one") return Observable(name, [](const Vec&) { return 1.0; });
  if (name == "trace") {
    const int m = static_cast<int>(std::lround(std::sqrt(static_cast<double>(ambient_dim))));
    if (m * m != ambient_dim) throw ConfigError("trace needs a square ambient dimension m*m");
    return Observable(name, [m](const Vec& x) {
      double t = 0.0;
      for (int i = 0; i < m; ++i) t += x(m * i + i);
      return t;
    });
  }
  const std::string prefix = "coordinate(";
  if (name.rfind(prefix, 0) == 0 && name.back() == ')') {
    const std::string digits = name.substr(prefix.size(), name.size() - prefix.size() - 1);
    int index = 0;
    try {
      std::size_t used = 0;
      index = std::stoi(digits, &used);
      if (used != digits.size()) throw ConfigError("bad coordinate index");
    } catch (const std::logic_error&) {
      throw ConfigError("bad coordinate index in '" + name + "'");
    }
    if (index < 1 || index > ambient_dim) {
      throw ConfigError("coordinate index " + std::to_string(index) + " out of range [1, " +
                        std::to_string(ambient_dim) + "]");
    }
    return Observable(name, [k = index - 1](const Vec& x) { return x(k); });
  }
  throw ConfigError("unknown observable '" + name + "'");
}

}  // namespace mrk
