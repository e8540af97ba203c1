#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <string>

#include "mrk/types.hpp"

namespace mrk {

enum class ManifoldKind { sphere, torus, special_linear, custom };

std::string to_string(ManifoldKind kind);

/**
 * Codimension-one embedded manifold {x in R^d : zeta(x) = 0}.
 *
 * A Manifold is an immutable handle; copies share the underlying
 * constraint and are safe to use from concurrently running trajectories.
 *
 * Built-ins:
 *   - sphere(d):            zeta(x) = (|x|^2 - 1) / 2, so grad(x) = x.
 *   - torus(R, r):          zeta(x) = (|x|^2 + R^2 - r^2)^2 - 4 R^2 (x1^2 + x2^2).
 *   - special_linear(m):    zeta(x) = det(X) - 1, x = row-major flatten(X).
 */
class Manifold {
 public:
  using ScalarFn = std::function<double(const Vec&)>;
  using VectorFn = std::function<Vec(const Vec&)>;
  using HessianActionFn = std::function<Vec(const Vec&, const Vec&)>;

  class Impl;

  static Manifold sphere(int dim);
  static Manifold torus(double major_radius, double minor_radius);
  static Manifold special_linear(int m);
  /// Missing derivatives fall back to centered finite differences.
  static Manifold custom(int dim, ScalarFn zeta, VectorFn grad = {},
                         HessianActionFn hess_action = {});

  int ambient_dim() const;
  ManifoldKind kind() const;

  double zeta(const Vec& x) const;
  Vec grad(const Vec& x) const;
  double gram(const Vec& x) const;
  /// Action of the Hessian of zeta on v.
  Vec hess_action(const Vec& x, const Vec& v) const;
  bool has_analytic_hessian() const;

  /// v - G^{-1} (g.v) g. Throws SingularProjection when the Gram
  /// function is below 1e-12 (1 + |x|^2).
  Vec project_tangent(const Vec& x, const Vec& v) const;

  // Geometry parameters of the built-ins; nullopt for other kinds.
  std::optional<double> torus_major_radius() const;
  std::optional<double> torus_minor_radius() const;
  std::optional<int> matrix_order() const;

  /// Default starting point: north pole, outer equator (R + r, 0, 0), identity.
  Vec default_point() const;

 private:
  explicit Manifold(std::shared_ptr<const Impl> impl);
  std::shared_ptr<const Impl> impl_;
};

double gram_threshold(const Vec& x);

/// Centered finite-difference helpers, step (eps)^{1/3} (1 + |x|).
Vec fd_gradient(const std::function<double(const Vec&)>& fn, const Vec& x);
Vec fd_directional(const std::function<Vec(const Vec&)>& fn, const Vec& x,
                   const Vec& direction);

}  // namespace mrk
