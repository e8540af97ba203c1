#include "mrk/quadrature.hpp"

#include <cmath>
#include <functional>
#include <limits>
#include <numbers>

namespace mrk {

namespace {

struct WeightedSample {
  double weight;       // quadrature weight times surface element
  double log_density;  // -2 V / sigma^2
  double phi;
};

// Self-normalized ratio with the Boltzmann factor shifted by its maximum.
double ratio(const std::vector<WeightedSample>& samples) {
  double shift = -std::numeric_limits<double>::infinity();
  for (const auto& s : samples) shift = std::max(shift, s.log_density);
  double num = 0.0;
  double den = 0.0;
  for (const auto& s : samples) {
    const double w = s.weight * std::exp(s.log_density - shift);
    num += w * s.phi;
    den += w;
  }
  return num / den;
}

double log_density(const Potential& V, const Vec& x, double sigma) {
  return -2.0 * V.value(x) / (sigma * sigma);
}

ReferenceValue refine(const std::function<double(int)>& rule, QuadratureControls controls,
                      const char* method) {
  if (controls.n < 8) throw PreconditionError("quadrature resolution n must be >= 8");
  int n = controls.n;
  double previous = rule(n);
  while (2 * n <= controls.max_n) {
    n *= 2;
    const double current = rule(n);
    const double diff = std::abs(current - previous);
    if (diff <= controls.tol) return ReferenceValue{current, n, diff, method};
    previous = current;
  }
  throw ConvergenceError(std::string(method) + " did not reach tolerance by n = " +
                         std::to_string(controls.max_n));
}

}  // namespace

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
  nodes.assign(n, 0.0);
  weights.assign(n, 0.0);
  const int half = (n + 1) / 2;
  for (int i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0;
      double p1 = 0.0;
      for (int k = 0; k < n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k + 1.0) * z * p1 - k * p2) / (k + 1.0);
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    nodes[i] = -z;
    nodes[n - 1 - i] = z;
    weights[i] = weights[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
}

ReferenceValue sphere_reference(const Potential& V, const Observable& phi, double sigma,
                                QuadratureControls controls) {
  if (!(sigma > 0.0)) throw PreconditionError("sigma must be positive");
  const auto rule = [&](int n) {
    std::vector<double> nodes, weights;
    gauss_legendre(n, nodes, weights);
    const int n_az = 2 * n;
    std::vector<WeightedSample> samples;
    samples.reserve(static_cast<std::size_t>(n) * n_az);
    Vec x(3);
    for (int i = 0; i < n; ++i) {
      const double u = nodes[i];
      const double rho = std::sqrt(std::max(0.0, 1.0 - u * u));
      for (int k = 0; k < n_az; ++k) {
        const double az = 2.0 * std::numbers::pi * k / n_az;
        x << rho * std::cos(az), rho * std::sin(az), u;
        samples.push_back({weights[i], log_density(V, x, sigma), phi(x)});
      }
    }
    return ratio(samples);
  };
  return refine(rule, controls, "sphere: gauss-legendre(x3) x trapezoid(azimuth)");
}

ReferenceValue torus_reference(const Potential& V, const Observable& phi, double sigma, double R,
                               double r, QuadratureControls controls) {
  if (!(r > 0.0) || !(R > r)) throw PreconditionError("torus reference requires R > r > 0");
  if (!(sigma > 0.0)) throw PreconditionError("sigma must be positive");
  const auto rule = [&](int n) {
    std::vector<WeightedSample> samples;
    samples.reserve(static_cast<std::size_t>(n) * n);
    Vec x(3);
    for (int i = 0; i < n; ++i) {
      const double psi = 2.0 * std::numbers::pi * i / n;
      const double ring = R + r * std::cos(psi);
      for (int k = 0; k < n; ++k) {
        const double theta = 2.0 * std::numbers::pi * k / n;
        x << ring * std::cos(theta), ring * std::sin(theta), r * std::sin(psi);
        samples.push_back({r * ring, log_density(V, x, sigma), phi(x)});
      }
    }
    return ratio(samples);
  };
  return refine(rule, controls, "torus: periodic trapezoid(theta, psi)");
}

}  // namespace mrk
