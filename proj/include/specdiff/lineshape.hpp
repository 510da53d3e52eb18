#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>

#include <Eigen/Core>

#include "specdiff/ensemble.hpp"
#include "specdiff/errors.hpp"
#include "specdiff/units.hpp"

namespace specdiff {

inline constexpr std::int64_t kMinHistogramSamples = 1000;
inline constexpr int kMinAutoBins = 64;
inline constexpr int kMaxBins = 1 << 20;

/// Uniform-bin histogram of pooled detuning samples.
struct Histogram {
  Eigen::VectorXd edges;  ///< n_bins + 1, uniform, strictly increasing [GHz]
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> counts;
  std::int64_t total = 0;
  PooledMoments moments;  ///< of the pooled samples, not of the binned data

  int n_bins() const { return static_cast<int>(counts.size()); }
  double width() const { return (edges(edges.size() - 1) - edges(0)) / n_bins(); }
  Eigen::VectorXd centers() const;
  /// count / (total * width) [1/GHz]
  Eigen::VectorXd densities() const;
  int occupied_bins() const;
  int bin_of(double x) const;
};

/// n_bins = nullopt selects Freedman-Diaconis with a floor of kMinAutoBins.
/// Throws InsufficientData below kMinHistogramSamples samples.
Histogram build_histogram(const TrajectoryEnsemble& ensemble, std::optional<int> n_bins = std::nullopt);
Histogram build_histogram(std::span<const double> samples, std::optional<int> n_bins = std::nullopt);

/// Streaming variant: nothing is stored, the ensemble is generated twice
/// (moments and range, then a fine histogram from which the bin rule is
/// evaluated and the final bins are merged).
Histogram build_histogram(const NoiseParams& params, const SimGrid& grid, JumpScheme scheme,
                          const RunOptions& opts = {}, std::optional<int> n_bins = std::nullopt);

/// Fixed bins; samples outside [edges.front(), edges.back()] go to the end bins.
Histogram histogram_on_edges(std::span<const double> samples, const Eigen::VectorXd& edges);
Histogram histogram_on_edges(const NoiseParams& params, const SimGrid& grid, JumpScheme scheme,
                             const Eigen::VectorXd& edges, const RunOptions& opts = {});

struct GaussianFit {
  double mu = 0.0;         ///< [GHz]
  double sigma_fit = 0.0;  ///< [GHz]
  double amplitude = 0.0;  ///< peak density [1/GHz]
  double fwhm = 0.0;       ///< kFwhmPerSigma * sigma_fit [GHz]
  double residual_rms = 0.0;
  double fwhm_stderr = 0.0;  ///< from the fit covariance [GHz]
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  int iterations = 0;
};

/// Raised when the fit does not converge; carries the moment-based fallback.
class FitFailure : public Error {
 public:
  FitFailure(const std::string& what, GaussianFit fallback)
      : Error(ErrorKind::FitFailure, what), fallback_(fallback) {}
  const GaussianFit& fallback() const noexcept { return fallback_; }

 private:
  GaussianFit fallback_;
};

inline constexpr int kMinOccupiedBins = 8;
inline constexpr int kMaxFitIterations = 200;

/// Levenberg-Marquardt fit of a exp(-(x-mu)^2 / (2 sigma^2)) to the bin
/// densities, started from the sample moments. Skewness and kurtosis are
/// copied from the pooled moments.
GaussianFit fit_gaussian(const Histogram& hist);

/// Fallback used when the fit is not possible: sigma = sample std.
GaussianFit moment_fit(const Histogram& hist);

// Stationary variance of d(omega) = -(omega - omega0)/tau dt + S sqrt(1/(2 tau)) dW + dJ.
// Diffusion: S^2/(2 tau) * tau/2. Compound Poisson jumps: lambda sigma_J^2 * tau/2.

template <typename Scalar>
Scalar diffusion_variance(Scalar S) {
  return S * S / Scalar(4);
}

template <typename Scalar>
Scalar jump_variance(Scalar lambda_per_ns, Scalar sigma_j, Scalar tau_sd) {
  return lambda_per_ns * sigma_j * sigma_j * tau_sd / Scalar(2);
}

template <typename Scalar>
Scalar stationary_variance(Scalar S, Scalar lambda_per_ns, Scalar sigma_j, Scalar tau_sd) {
  return diffusion_variance(S) + jump_variance(lambda_per_ns, sigma_j, tau_sd);
}

/// Continuous-time stationary variance [GHz^2].
double analytic_variance(const NoiseParams& params);
double analytic_fwhm(const NoiseParams& params);

/// Stationary variance of the Euler recursion itself at step dt (Bernoulli
/// jumps), (S^2/(2 tau) + lambda sigma_J^2) tau / (2 - dt/tau). Tends to
/// analytic_variance as dt -> 0.
double discrete_variance(const NoiseParams& params, double dt);

struct LineShape {
  Histogram histogram;
  GaussianFit fit;
  bool fit_converged = true;
  EnsembleStatistics statistics;
  double analytic_variance = 0.0;
};

/// Streaming lineshape: histogram (auto bins unless given), Gaussian fit with
/// fallback on failure, pooled moments and the analytic cross-check.
LineShape measure_lineshape(const NoiseParams& params, const SimGrid& grid, JumpScheme scheme,
                            const RunOptions& opts = {}, std::optional<int> n_bins = std::nullopt);
LineShape lineshape_of(const TrajectoryEnsemble& ensemble, std::optional<int> n_bins = std::nullopt);

struct LineShapeComparison {
  NoiseParams hybrid_params;
  NoiseParams ou_params;  ///< lambda_J = 0, S chosen to match the hybrid variance
  LineShape hybrid;
  LineShape ou;           ///< histogram on the hybrid's bin grid
};

/// Pure-OU reference with the same analytic variance as `hybrid`.
NoiseParams matched_ou(const NoiseParams& hybrid);

LineShapeComparison compare_ou_vs_hybrid(const NoiseParams& hybrid, const SimGrid& grid, JumpScheme scheme,
                                         const RunOptions& opts = {});

/// `omega_GHz,density`
void write_histogram_csv(std::ostream& out, const Histogram& hist);
/// `omega_GHz,density_hybrid_perGHz,density_ou_perGHz`
void write_comparison_csv(std::ostream& out, const LineShapeComparison& cmp);

}  // namespace specdiff
