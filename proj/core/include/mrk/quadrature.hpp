#pragma once

#include <string>
#include <vector>

#include "mrk/potentials.hpp"

namespace mrk {

/// Reference value of the integral of phi against exp(-2 V / sigma^2) dsigma_M / Z.
struct ReferenceValue {
  double value = 0.0;
  int resolution = 0;      // grid parameter n of the returned value
  double est_error = 0.0;  // |Q(n) - Q(n/2)|
  std::string method;
};

struct QuadratureControls {
  int n = 32;
  double tol = 1e-12;
  int max_n = 4096;
};

/// Gauss-Legendre nodes and weights on [-1, 1].
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);

/**
 * Unit sphere in R^3: Gauss-Legendre in u = x3 = cos(theta) times the
 * trapezoid rule in the azimuth (2n points). Numerator and normalization
 * share the grid. n doubles until two successive values agree to tol;
 * throws ConvergenceError past max_n.
 */
ReferenceValue sphere_reference(const Potential& V, const Observable& phi, double sigma,
                                QuadratureControls controls = {});

/**
 * Torus x = ((R + r cos psi) cos theta, (R + r cos psi) sin theta, r sin psi)
 * with surface element r (R + r cos psi) dtheta dpsi; doubly periodic
 * trapezoid rule on an n x n grid.
 */
ReferenceValue torus_reference(const Potential& V, const Observable& phi, double sigma, double R,
                               double r, QuadratureControls controls = {});

}  // namespace mrk
