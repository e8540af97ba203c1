#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

#include "mrk/types.hpp"

namespace mrk {

/**
 * Coefficients of a projected stochastic Runge-Kutta scheme
 *
 *   Y_i     = X_n + h sum_j a_ij f(Y_j) + sigma sqrt(h) d_i xi + lambda_i sum_j ahat_ij g(Y_j)
 *   zeta(Y_i) = 0  whenever delta_i = 1
 *   X_{n+1} = Y_s
 *
 * with delta_i = sum_j ahat_ij in {0, 1}. b, bhat are the last rows of A and
 * Ahat and c = A 1; they are derived once at construction. A tableau is
 * immutable; invariant violations are reported by validate(), not thrown, so
 * that a bad tableau can still be inspected.
 */
class ButcherTableau {
 public:
  /// Throws StructuralError on dimension mismatch, s == 0, non-finite
  /// coefficients or delta entries further than 1e-12 from {0, 1}.
  ButcherTableau(std::string name, Eigen::MatrixXd A, Eigen::MatrixXd Ahat, Eigen::VectorXd d,
                 Eigen::VectorXd delta);

  /// delta derived as the row sums of Ahat.
  static ButcherTableau from_rows(std::string name, Eigen::MatrixXd A, Eigen::MatrixXd Ahat,
                                  Eigen::VectorXd d);

  const std::string& name() const { return name_; }
  int stages() const { return static_cast<int>(d_.size()); }
  const Eigen::MatrixXd& A() const { return A_; }
  const Eigen::MatrixXd& Ahat() const { return Ahat_; }
  const Eigen::VectorXd& d() const { return d_; }
  const Eigen::VectorXd& delta() const { return delta_; }
  const Eigen::VectorXd& b() const { return b_; }
  const Eigen::VectorXd& bhat() const { return bhat_; }
  const Eigen::VectorXd& c() const { return c_; }

  bool projected(int i) const { return delta_(i) == 1.0; }
  bool drift_free() const { return A_.isZero(0.0); }
  bool strictly_lower_A() const;
  bool lower_Ahat() const;
  /// Stages can be resolved one after the other.
  bool sequential() const { return strictly_lower_A() && lower_Ahat(); }

  ButcherTableau with_name(std::string name) const;
  ButcherTableau with_zero_drift() const;

 private:
  std::string name_;
  Eigen::MatrixXd A_;
  Eigen::MatrixXd Ahat_;
  Eigen::VectorXd d_;
  Eigen::VectorXd delta_;
  Eigen::VectorXd b_;
  Eigen::VectorXd bhat_;
  Eigen::VectorXd c_;
};

struct ValidationReport {
  std::vector<std::string> violations;
  std::vector<std::string> advisories;

  bool valid() const { return violations.empty(); }
};

ValidationReport validate(const ButcherTableau& t);

/// Throws StructuralError carrying every violation when validate() fails.
void require_valid(const ButcherTableau& t);

/// euler-ee, euler-ie, rk2-invmeas, sphere-rk2, bm-sphere-weak2, dae-trap.
ButcherTableau builtin_tableau(const std::string& name);
std::vector<std::string> builtin_tableau_names();

using StageVector = Eigen::VectorXd;

/// Componentwise product.
StageVector diamond(const StageVector& u, const StageVector& v);
/// Componentwise power; u^0 is the all-ones vector.
StageVector diamond_pow(const StageVector& u, int m);

}  // namespace mrk
