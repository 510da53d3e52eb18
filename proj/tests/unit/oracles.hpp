#pragma once

// Reference values computed independently of the library.

#include <cmath>
#include <cstdint>

namespace oracle {

// Exact mean pooled variance of the Euler recursion started at omega0,
// averaged over steps first..steps, by iterating the AR(1) variance
// v' = (1 - dt/tau)^2 v + q with q the per-step injected variance.
inline double pooled_euler_variance(double S, double tau, double lambda_per_ns, double sigma_j, double dt,
                                    std::int64_t first, std::int64_t steps) {
  const double a = 1.0 - dt / tau;
  const double q = S * S / (2.0 * tau) * dt + lambda_per_ns * dt * sigma_j * sigma_j;
  double v = 0.0, sum = 0.0;
  for (std::int64_t k = 0; k <= steps; ++k) {
    if (k >= first) sum += v;
    v = a * a * v + q;
  }
  return sum / static_cast<double>(steps - first + 1);
}

// Stationary variance of the continuous process by direct integration of the
// autocovariance kernel: each unit of injected variance rate decays as
// exp(-2 t / tau), so Var = rate * tau / 2.
inline double continuous_variance(double S, double tau, double lambda_per_ns, double sigma_j) {
  const double rate = S * S / (2.0 * tau) + lambda_per_ns * sigma_j * sigma_j;
  return rate * tau / 2.0;
}

inline double gaussian_fwhm(double sigma) { return 2.0 * std::sqrt(2.0 * std::log(2.0)) * sigma; }

}  // namespace oracle
