#pragma once

#include <map>
#include <string>
#include <vector>

#include "mrk/tableau.hpp"

namespace mrk {

/// One scalar equality lhs = rhs of an order condition.
struct Residual {
  std::string condition;
  double lhs = 0.0;
  double rhs = 0.0;
  double abs_residual = 0.0;
};

using ResidualList = std::vector<Residual>;

struct ConditionGroup {
  std::string group_id;
  std::string description;
  ResidualList residuals;

  double max_residual() const;
};

enum class SphereMode { weak2, invmeas2 };

// Chained equalities a = b = ... = rhs expand to one residual per member
// against the final right-hand side.

/// b^T 1 = 1, d_s = 1, bhat^T d = bhat^T (delta <> d).
ResidualList consistency_residuals(const ButcherTableau& t);

/// Invariant-measure order two, general delta (12 displayed lines).
std::vector<ConditionGroup> invmeas2_groups(const ButcherTableau& t);
ResidualList invmeas2_residuals(const ButcherTableau& t);

/// Reduced list for delta = 1. Throws PreconditionError otherwise.
ResidualList invmeas2_residuals_delta_one(const ButcherTableau& t);

/// Weak order two, general delta.
std::vector<ConditionGroup> weak2_groups(const ButcherTableau& t);
ResidualList weak2_residuals(const ButcherTableau& t);

/// Unit-sphere reductions (g(x) = x).
ResidualList sphere_consistency_residuals(const ButcherTableau& t);
ResidualList sphere_residuals(const ButcherTableau& t, SphereMode mode);

/// Brownian motion on the sphere (f = 0). Requires A == 0, else
/// PreconditionError. invmeas2 yields an empty list: consistency suffices.
ResidualList bm_sphere_consistency_residuals(const ButcherTableau& t);
ResidualList bm_sphere_residuals(const ButcherTableau& t, SphereMode mode);

inline constexpr double kDefaultConditionTolerance = 1e-6;

struct ConditionReport {
  std::string scheme_name;
  std::vector<ConditionGroup> groups;
  std::map<std::string, double> max_residual_per_group;
  /// consistent, weak2, invmeas2, sphere_invmeas2, sphere_weak2, bm_sphere_weak2
  std::map<std::string, bool> verdicts;
  double tolerance = kDefaultConditionTolerance;
};

/// Evaluates every residual group. Throws StructuralError for tableaux that
/// fail validate().
ConditionReport classify(const ButcherTableau& t, double tol = kDefaultConditionTolerance);

double max_abs_residual(const ResidualList& residuals);

}  // namespace mrk
