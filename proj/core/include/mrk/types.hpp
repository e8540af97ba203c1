#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <stdexcept>
#include <string>

namespace mrk {

// Ambient dimension cap. Vectors live on the stack so the step loop never
// touches the heap; SL(m) is therefore limited to m <= 5.
inline constexpr int kMaxDim = 32;

using Vec = Eigen::Matrix<double, Eigen::Dynamic, 1, Eigen::ColMajor, kMaxDim, 1>;
using Mat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::ColMajor,
                          kMaxDim, kMaxDim>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Non-finite input or a point outside a function's domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Malformed data: dimension mismatches, invalid geometry parameters,
/// tableaux that break the scheme-class rules.
class StructuralError : public Error {
 public:
  using Error::Error;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Gram function (or the Newton Schur complement) vanished.
class SingularProjection : public Error {
 public:
  using Error::Error;
};

class NewtonFailure : public Error {
 public:
  NewtonFailure(const std::string& what, int stage, int iterations)
      : Error(what), stage_(stage), iterations_(iterations) {}
  int stage() const noexcept { return stage_; }
  int iterations() const noexcept { return iterations_; }

 private:
  int stage_;
  int iterations_;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Too many discarded trajectories for an estimate to be trusted.
class QualityError : public Error {
 public:
  using Error::Error;
};

/// An iterative procedure (quadrature refinement, coupled stage sweeps)
/// ran out of budget.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

}  // namespace mrk
