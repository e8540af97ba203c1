#pragma once

#include <functional>
#include <string>

#include "mrk/manifold.hpp"
#include "mrk/types.hpp"

namespace mrk {

/// Smooth potential V; the drift of the Langevin dynamics is f = -grad V.
class Potential {
 public:
  using ValueFn = std::function<double(const Vec&)>;
  using GradientFn = std::function<Vec(const Vec&)>;

  Potential(std::string name, ValueFn value, GradientFn gradient);

  const std::string& name() const { return name_; }
  double value(const Vec& x) const { return value_(x); }
  Vec gradient(const Vec& x) const { return gradient_(x); }
  Vec drift(const Vec& x) const { return -gradient_(x); }

 private:
  std::string name_;
  ValueFn value_;
  GradientFn gradient_;
};

class Observable {
 public:
  using Fn = std::function<double(const Vec&)>;

  Observable(std::string name, Fn fn);

  const std::string& name() const { return name_; }
  double operator()(const Vec& x) const { return fn_(x); }

 private:
  std::string name_;
  Fn fn_;
};

inline constexpr double kDefaultPotentialScale = 25.0;

/**
 * Built-in potentials, all with analytic gradients:
 *   zero          V = 0
 *   sphere-band   V = a (1 - x1^2 - x2^2)
 *   torus-height  V = a (x3 - r)^2, r taken from the torus
 *   sl-identity   V = a Tr((X - I)^T (X - I)), m taken from SL(m)
 * Throws ConfigError for unknown names, a <= 0, or a manifold that does not
 * carry the needed geometry.
 */
Potential builtin_potential(const std::string& name, double a, const Manifold& manifold);

/// x3sq, trace, one, coordinate(i) with 1-based i.
Observable builtin_observable(const std::string& name, int ambient_dim);

}  // namespace mrk
