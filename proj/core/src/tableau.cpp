#include "mrk/tableau.hpp"

#include <cmath>
#include <sstream>
#include <utility>

namespace mrk {

namespace {

constexpr double kDeltaSnap = 1e-12;
constexpr double kRowSumTol = 1e-14;

}  // namespace

ButcherTableau::ButcherTableau(std::string name, Eigen::MatrixXd A, Eigen::MatrixXd Ahat,
                               Eigen::VectorXd d, Eigen::VectorXd delta)
    : name_(std::move(name)),
      A_(std::move(A)),
      Ahat_(std::move(Ahat)),
      d_(std::move(d)),
      delta_(std::move(delta)) {
  const auto s = d_.size();
  if (s == 0) throw StructuralError("tableau needs at least one stage");
  if (A_.rows() != s || A_.cols() != s || Ahat_.rows() != s || Ahat_.cols() != s ||
      delta_.size() != s) {
    std::ostringstream msg;
    msg << "tableau dimension mismatch: A " << A_.rows() << "x" << A_.cols() << ", Ahat "
        << Ahat_.rows() << "x" << Ahat_.cols() << ", d " << s << ", delta " << delta_.size();
    throw StructuralError(msg.str());
  }
  if (!A_.allFinite() || !Ahat_.allFinite() || !d_.allFinite() || !delta_.allFinite()) {
    throw StructuralError("tableau coefficients must be finite");
  }
  for (Eigen::Index i = 0; i < s; ++i) {
    if (std::abs(delta_(i)) <= kDeltaSnap) {
      delta_(i) = 0.0;
    } else if (std::abs(delta_(i) - 1.0) <= kDeltaSnap) {
      delta_(i) = 1.0;
    } else {
      throw StructuralError("delta_" + std::to_string(i + 1) + " = " +
                            std::to_string(delta_(i)) + " is not in {0, 1}");
    }
  }
  b_ = A_.row(s - 1).transpose();
  bhat_ = Ahat_.row(s - 1).transpose();
  c_ = A_.rowwise().sum();
}

ButcherTableau ButcherTableau::from_rows(std::string name, Eigen::MatrixXd A,
                                         Eigen::MatrixXd Ahat, Eigen::VectorXd d) {
  Eigen::VectorXd delta = Ahat.rowwise().sum();
  return ButcherTableau(std::move(name), std::move(A), std::move(Ahat), std::move(d),
                        std::move(delta));
}

bool ButcherTableau::strictly_lower_A() const {
  for (int i = 0; i < stages(); ++i)
    for (int j = i; j < stages(); ++j)
      if (A_(i, j) != 0.0) return false;
  return true;
}

bool ButcherTableau::lower_Ahat() const {
  for (int i = 0; i < stages(); ++i)
    for (int j = i + 1; j < stages(); ++j)
      if (Ahat_(i, j) != 0.0) return false;
  return true;
}

ButcherTableau ButcherTableau::with_name(std::string name) const {
  ButcherTableau copy = *this;
  copy.name_ = std::move(name);
  return copy;
}

ButcherTableau ButcherTableau::with_zero_drift() const {
  return ButcherTableau(name_ + "/f=0", Eigen::MatrixXd::Zero(stages(), stages()), Ahat_, d_,
                        delta_);
}

ValidationReport validate(const ButcherTableau& t) {
  ValidationReport report;
  const int s = t.stages();
  for (int i = 0; i < s; ++i) {
    const double row_sum = t.Ahat().row(i).sum();
    if (std::abs(row_sum - t.delta()(i)) > kRowSumTol) {
      std::ostringstream msg;
      msg.precision(17);
      msg << "δ_i = Σ_j â_ij violated at stage " << i + 1 << ": row sum " << row_sum
          << ", delta " << t.delta()(i);
      report.violations.push_back(msg.str());
    }
    if (t.delta()(i) == 0.0 && !t.Ahat().row(i).isZero(0.0)) {
      report.violations.push_back("δ_i=0 requires â_ij=0 (stage " + std::to_string(i + 1) + ")");
    }
  }
  if (t.delta()(s - 1) != 1.0) {
    report.violations.push_back("δ_s=1 required: the last stage must be projected");
  }
  if (!t.strictly_lower_A()) {
    report.advisories.push_back("A is not strictly lower triangular (coupled drift stages)");
  }
  if (!t.lower_Ahat()) {
    report.advisories.push_back("Â is not lower triangular (coupled projection stages)");
  }
  return report;
}

void require_valid(const ButcherTableau& t) {
  const ValidationReport report = validate(t);
  if (report.valid()) return;
  std::string msg = "invalid tableau '" + t.name() + "':";
  for (const auto& v : report.violations) msg += " " + v + ";";
  throw StructuralError(msg);
}

ButcherTableau builtin_tableau(const std::string& name) {
  using Eigen::MatrixXd;
  using Eigen::VectorXd;

  if (name == "euler-ee" || name == "euler-ie") {
    MatrixXd A(2, 2), Ahat(2, 2);
    A << 0, 0, 1, 0;
    if (name == "euler-ee") {
      Ahat << 0, 0, 1, 0;
    } else {
      Ahat << 0, 0, 0, 1;
    }
    VectorXd d(2), delta(2);
    d << 0, 1;
    delta << 0, 1;
    return ButcherTableau(name, A, Ahat, d, delta);
  }

  if (name == "rk2-invmeas") {
    const double c2 = 0.621729189582953540;
    const double c3 = 0.102032386582165330;
    const double d1 = -0.898931652839146019;
    const double d2 = -1.66233102561284629;
    const double d3 = 0.318924515019668897;
    const double a21 = 0.584372887990673524;
    const double a31 = 0.887706593835748395;
    const double a32 = -0.345018694936693742;
    const double a41 = 0.0547449506054026516;
    const double a42 = -0.0205123070437693053;
    const double a22 = 1.0 - a21;
    const double a33 = 1.0 - a31 - a32;
    const double a43 = 1.0 - a41 - a42;
    MatrixXd A(4, 4), Ahat(4, 4);
    A << 0, 0, 0, 0,
         c2, 0, 0, 0,
         0, c3, 0, 0,
         a41, a42, a43, 0;
    Ahat << 1, 0, 0, 0,
            a21, a22, 0, 0,
            a31, a32, a33, 0,
            a41, a42, a43, 0;
    VectorXd d(4), delta(4);
    d << d1, d2, d3, 1.0;
    delta << 1, 1, 1, 1;
    return ButcherTableau(name, A, Ahat, d, delta);
  }

  if (name == "sphere-rk2") {
    // Stage 1 uses f(Y2) and g(Y2): coupled stages.
    const double r2 = std::sqrt(2.0);
    MatrixXd A(2, 2), Ahat(2, 2);
    A << 0, 1.5 - r2, 1, 0;
    Ahat << 2, -1, 1, 0;
    VectorXd d(2), delta(2);
    d << 1.0 - r2 / 2.0, 1.0;
    delta << 1, 1;
    return ButcherTableau(name, A, Ahat, d, delta);
  }

  if (name == "bm-sphere-weak2") {
    // X_{n+1} = X_n + sqrt(h) xi + lambda (3 X_n + sqrt(h) xi + X_{n+1}) / 4
    // with Y1 = X_n, Y2 = X_n + sqrt(h) xi, Y3 = X_{n+1}.
    MatrixXd A = MatrixXd::Zero(3, 3);
    MatrixXd Ahat = MatrixXd::Zero(3, 3);
    Ahat.row(2) << 0.5, 0.25, 0.25;
    VectorXd d(3), delta(3);
    d << 0, 1, 1;
    delta << 0, 0, 1;
    return ButcherTableau(name, A, Ahat, d, delta);
  }

  if (name == "dae-trap") {
    // Deterministic trapezoidal rule; use with sigma = 0.
    MatrixXd A(2, 2), Ahat(2, 2);
    A << 0, 0, 0.5, 0.5;
    Ahat << 0, 0, 0.5, 0.5;
    VectorXd d(2), delta(2);
    d << 0, 1;
    delta << 0, 1;
    return ButcherTableau(name, A, Ahat, d, delta);
  }

  throw ConfigError("unknown scheme '" + name + "'");
}

std::vector<std::string> builtin_tableau_names() {
  return {"euler-ee", "euler-ie", "rk2-invmeas", "sphere-rk2", "bm-sphere-weak2", "dae-trap"};
}

StageVector diamond(const StageVector& u, const StageVector& v) {
  if (u.size() != v.size()) throw StructuralError("diamond product of vectors of unequal length");
  return u.cwiseProduct(v);
}

StageVector diamond_pow(const StageVector& u, int m) {
  if (m < 0) throw PreconditionError("diamond power must be non-negative");
  StageVector out = StageVector::Ones(u.size());
  for (int k = 0; k < m; ++k) out = out.cwiseProduct(u);
  return out;
}

}  // namespace mrk
