#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "specdiff/ensemble.hpp"
#include "specdiff/errors.hpp"
#include "specdiff/noise_model.hpp"

namespace specdiff {

/// Empirical linewidth law Gamma(T) = A + B T^3.
struct BroadeningLaw {
  double A = 1.01;     ///< [GHz]
  double B = 3.77e-5;  ///< [GHz/K^3]
};

void validate(const BroadeningLaw& law);

/// A + B T^3 [GHz].
double target_fwhm(double T, const BroadeningLaw& law);
/// Inverse of target_fwhm; throws InvalidInput below A or for B = 0.
double temperature_for_fwhm(double fwhm, const BroadeningLaw& law);

/// Noise parameters at the reference temperature. tau_sd is shared by all
/// temperatures.
struct Baseline {
  double T0 = 4.0;            ///< [K]
  double sigma0 = 0.0;        ///< [GHz]
  double lambdaJ0_hz = 0.0;   ///< [Hz]
  double sigmaJ0 = 0.0;       ///< [GHz]
  double tau_sd = 0.5;        ///< [ns]
  double omega0 = 0.0;        ///< [GHz]

  /// Default baseline. lambdaJ0 and tau_sd are fixed; sigma0 and sigmaJ0 are
  /// solved so that the analytic FWHM is law(T0) at multipliers (1, 1, 1) and
  /// law(T_ref) at (1, 1, m_sigmaJ_ref).
  static Baseline reference(const BroadeningLaw& law = {}, double T0 = 4.0, double T_ref = 20.0,
                            double m_sigmaJ_ref = 5.0, double lambdaJ0_hz = 6e10, double tau_sd = 0.5);
};

void validate(const Baseline& base);

struct MultiplierSet {
  double m_sigma = 1.0;
  double m_lambda = 1.0;
  double m_sigmaJ = 1.0;
  double T = 0.0;  ///< [K]

  Eigen::Vector3d vector() const { return {m_sigma, m_lambda, m_sigmaJ}; }
  static MultiplierSet from_vector(const Eigen::Vector3d& v, double T) { return {v(0), v(1), v(2), T}; }
};

/// S = sigma0 m_sigma, lambda_J = lambdaJ0 m_lambda, sigma_J = sigmaJ0 m_sigma m_sigmaJ.
NoiseParams apply_multipliers(const Baseline& base, const MultiplierSet& m);

inline constexpr double kDefaultTolerance = 0.05;  ///< [GHz]
inline constexpr double kStrictTolerance = 0.02;   ///< [GHz]

struct CalibConfig {
  int grid_points = 8;  ///< per axis, log-spaced
  double box_min = 0.1;
  double box_max = 50.0;
  double tolerance = kDefaultTolerance;
  int max_evals = 40;  ///< Monte-Carlo simplex evaluations
  /// Weights of the squared log-distance to the previous multipliers
  /// (m_sigma, m_lambda, m_sigmaJ).
  Eigen::Vector3d tie_weights{1000.0, 1000.0, 1.0};
  /// "Previous temperature" for the first calibrated temperature.
  MultiplierSet initial{};
  /// Weight of the tie-break distance in the Monte-Carlo objective.
  double distance_weight = 1e-3;
  /// false: stop after the analytic stages (achieved = analytic FWHM).
  bool monte_carlo = true;
  SimGrid mc_grid{1e-3, 10.0, 10000, 0, 1.0};
  JumpScheme scheme = JumpScheme::Bernoulli;
  RunOptions run{};
};

void validate(const CalibConfig& cfg);

struct CalibrationResult {
  MultiplierSet multipliers;
  NoiseParams params;
  double target_fwhm = 0.0;     ///< [GHz]
  double achieved_fwhm = 0.0;   ///< Monte-Carlo Gaussian-fit FWHM, or analytic when monte_carlo is off [GHz]
  double surrogate_fwhm = 0.0;  ///< analytic FWHM at the multipliers [GHz]
  double residual = 0.0;        ///< achieved - target [GHz]
  int grid_evaluations = 0;
  int evaluations = 0;          ///< Monte-Carlo evaluations
  bool monte_carlo = false;
};

class CalibrationFailure : public Error {
 public:
  CalibrationFailure(const std::string& what, CalibrationResult best, std::vector<CalibrationResult> partial = {})
      : Error(ErrorKind::CalibrationFailure, what), best_(std::move(best)), partial_(std::move(partial)) {}
  const CalibrationResult& best() const noexcept { return best_; }
  /// Temperatures that succeeded before the failing one.
  const std::vector<CalibrationResult>& partial() const noexcept { return partial_; }

 private:
  CalibrationResult best_;
  std::vector<CalibrationResult> partial_;
};

inline constexpr double kMinCalibrationT = 4.0;
inline constexpr double kMaxCalibrationT = 60.0;

/// Analytic stages only: the best 3D grid point, then the exact minimiser of
/// the weighted distance to cfg.initial on the surface analytic FWHM = target,
/// subject to the box and to m >= cfg.initial.
MultiplierSet surrogate_solution(double T, const Baseline& base, const BroadeningLaw& law, const CalibConfig& cfg,
                                 int* grid_evaluations = nullptr);

/// Calibrates one temperature; cfg.initial plays the previous temperature.
CalibrationResult calibrate(double T, const Baseline& base, const BroadeningLaw& law, const CalibConfig& cfg);

/// Sequential calibration, each temperature seeded by the previous result.
CalibrationResult calibrate_at(double T, const Baseline& base, const BroadeningLaw& law, const CalibConfig& cfg,
                               const MultiplierSet& previous);
std::vector<CalibrationResult> calibrate_curve(std::span<const double> temps, const Baseline& base,
                                               const BroadeningLaw& law, const CalibConfig& cfg);

/// `T_K,m_sigma,m_lambda,m_sigmaJ,S_GHz,lambdaJ_Hz,sigmaJ_GHz,target_GHz,achieved_GHz,residual_GHz`
void write_calibration_csv(std::ostream& out, std::span<const CalibrationResult> rows);
/// Reads the format written by write_calibration_csv.
std::vector<CalibrationResult> read_calibration_csv(std::istream& in, const Baseline& base);

}  // namespace specdiff
