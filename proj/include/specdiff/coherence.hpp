#pragma once

#include <cmath>
#include <complex>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "specdiff/calibration.hpp"
#include "specdiff/errors.hpp"
#include "specdiff/interpolation.hpp"
#include "specdiff/noise_model.hpp"

namespace specdiff {

struct EmitterParams {
  double T1 = 0.0;       ///< radiative lifetime [ns]
  double T2 = 0.0;       ///< intrinsic coherence time [ns]
  double omega_R = 0.0;  ///< bare Rabi frequency [rad/ns]

  /// (1/T1 + 1/T2)/2 [1/ns]
  double intrinsic_rate() const { return 0.5 * (1.0 / T1 + 1.0 / T2); }
};

void validate(const EmitterParams& e);

enum class Regime { Oscillatory, Critical, Overdamped };
const char* to_string(Regime r) noexcept;

enum class VarianceUnit {
  GHzSquared,       ///< multiplied by (2 pi)^2 before use
  RadPerNsSquared,  ///< used as is
};

/// sqrt(Omega_R^2 - var). `magnitude` is |Omega_eff|; in the overdamped
/// regime Omega_eff = i * magnitude.
struct EffectiveRabi {
  double magnitude = 0.0;  ///< [rad/ns]
  Regime regime = Regime::Oscillatory;

  std::complex<double> value() const {
    return regime == Regime::Overdamped ? std::complex<double>(0.0, magnitude) : std::complex<double>(magnitude, 0.0);
  }
};

/// |Omega_R^2 - var| at or below this fraction of max(Omega_R^2, var) is critical.
inline constexpr double kCriticalRelTol = 1e-12;

EffectiveRabi effective_rabi(double omega_R, double variance, VarianceUnit unit = VarianceUnit::GHzSquared);

namespace detail {

template <typename Scalar>
Scalar sinc(Scalar x) {
  using std::abs, std::sin;
  if (abs(x) < Scalar(1e-4)) return Scalar(1) - x * x / Scalar(6);
  return sin(x) / x;
}

template <typename Scalar>
Scalar sinhc(Scalar x) {
  using std::abs, std::sinh;
  if (abs(x) < Scalar(1e-4)) return Scalar(1) + x * x / Scalar(6);
  return sinh(x) / x;
}

}  // namespace detail

/// g2(tau) = 1 - exp(-Gamma |tau|) [cos(W |tau|) + r |tau| sinc(W |tau|)],
/// Gamma = (1/T1 + 1/T2 + gamma)/2, r = (1/T1 + 1/T2)/2. Overdamped: cosh and
/// sinh with |W| capped at Gamma/2 so the envelope stays bounded (the
/// continuation grows without bound once |W| >= Gamma).
template <typename Scalar>
Scalar g2_kernel(Scalar tau, Scalar T1, Scalar T2, Scalar gamma, Scalar omega_eff, Regime regime) {
  using std::abs, std::cos, std::cosh, std::exp, std::min;
  const Scalar r = (Scalar(1) / T1 + Scalar(1) / T2) / Scalar(2);
  const Scalar envelope = r + gamma / Scalar(2);
  const Scalar t = abs(tau);
  Scalar bracket = Scalar(1);
  switch (regime) {
    case Regime::Oscillatory:
      bracket = cos(omega_eff * t) + r * t * detail::sinc(omega_eff * t);
      break;
    case Regime::Critical:
      bracket = Scalar(1) + r * t;
      break;
    case Regime::Overdamped: {
      const Scalar k = min(omega_eff, envelope / Scalar(2));
      bracket = cosh(k * t) + r * t * detail::sinhc(k * t);
      break;
    }
  }
  return Scalar(1) - exp(-envelope * t) * bracket;
}

double g2(double tau, const EmitterParams& emitter, double gamma, const EffectiveRabi& omega_eff);

/// Vectorised form over a tau grid.
Eigen::ArrayXd g2(const Eigen::ArrayXd& tau, const EmitterParams& emitter, double gamma,
                  const EffectiveRabi& omega_eff);

/// gamma_sd+j(T, Omega_R) = gamma_coeff(T) Omega_R with gamma_coeff
/// interpolated monotonically between nodes.
class DephasingModel {
 public:
  DephasingModel() = default;

  /// gamma_coeff(T) = kappa V_J(T) / V_J(reference_T), V_J the jump part of
  /// the stationary variance of the calibrated parameters. Also keeps the total
  /// variance for the linewidth mapping.
  static DephasingModel from_calibration(std::span<const CalibrationResult> curve, double kappa,
                                         double reference_T = 30.0);
  /// User table of (T, gamma_coeff); no variance hook.
  static DephasingModel from_table(Eigen::VectorXd T, Eigen::VectorXd gamma_coeff);

  double coefficient(double T) const { return coeff_(T); }
  double gamma(double T, double omega_R) const { return coefficient(T) * omega_R; }
  /// kappa V_J(params) / V_J(reference); only for models built from a calibration.
  double coefficient_for(const NoiseParams& params) const;
  bool has_variance() const { return variance_.has_value(); }
  /// Interpolated stationary variance [GHz^2]; throws MissingInput without a calibration.
  double variance(double T) const;
  double lower() const { return coeff_.lower(); }
  double upper() const { return coeff_.upper(); }
  const Pchip& coefficient_table() const { return coeff_; }

 private:
  Pchip coeff_;
  std::optional<Pchip> variance_;
  double kappa_ = 0.0;
  double reference_jump_variance_ = 0.0;
};

/// Scale of the default dephasing model: fitted once so that the crossover of
/// the default calibrated nodes (analytic stages, 5..30 K every 2.5 K,
/// reference 30 K) lies at 25.91 K. See anchor_kappa.
inline constexpr double kDefaultKappa = 3.52963;

struct G2Trace {
  Eigen::ArrayXd tau;  ///< [ns]
  Eigen::ArrayXd g2;
  Regime regime = Regime::Oscillatory;
  EmitterParams emitter;
  double gamma = 0.0;        ///< [1/ns]
  EffectiveRabi omega_eff;
  double variance = 0.0;     ///< [GHz^2]
};

/// tau grid from 0 to ~`decay_constants` slow-decay times, resolving the oscillation.
Eigen::ArrayXd default_tau_grid(const EmitterParams& emitter, double gamma, const EffectiveRabi& omega_eff,
                                double decay_constants = 8.0);

G2Trace make_trace(const EmitterParams& emitter, double gamma, const EffectiveRabi& omega_eff, Eigen::ArrayXd tau);

/// variance from the calibrated parameters, gamma = gamma_coeff(T) Omega_R.
G2Trace g2_trace(double T, const EmitterParams& emitter, const NoiseParams& calibrated, const DephasingModel& model,
                 std::optional<Eigen::ArrayXd> tau_grid = std::nullopt);

struct DecayFit {
  double omega_R = 0.0;     ///< [rad/ns]
  double decay_rate = 0.0;  ///< [1/ns]
  double fit_r2 = 0.0;
  int points = 0;
  bool from_peaks = false;  ///< envelope maxima (true) or tail fit (false)
  Regime regime = Regime::Oscillatory;
};

class PoorFit : public Error {
 public:
  PoorFit(const std::string& what, DecayFit fit) : Error(ErrorKind::PoorFit, what), fit_(fit) {}
  const DecayFit& fit() const noexcept { return fit_; }

 private:
  DecayFit fit_;
};

inline constexpr double kMinDecayR2 = 0.9;

/// Log-linear least squares on the maxima of |1 - g2| for tau > 0 (at least
/// two), otherwise on the tail from the first e^-1 crossing to the first
/// sign change or the 1e-10 floor.
DecayFit extract_decay_rate(const G2Trace& trace);

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
};

LinearFit linear_fit(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y);

struct DecaySweep {
  double T = 0.0;
  std::vector<DecayFit> fits;
  LinearFit slope;  ///< decay_rate vs omega_R
};

DecaySweep decay_sweep(double T, const EmitterParams& emitter, const NoiseParams& calibrated,
                       const DephasingModel& model, std::span<const double> omega_R);

class NoCrossover : public Error {
 public:
  NoCrossover(const std::string& what, double min_slope, double max_slope)
      : Error(ErrorKind::NoCrossover, what), min_slope_(min_slope), max_slope_(max_slope) {}
  double min_slope() const noexcept { return min_slope_; }
  double max_slope() const noexcept { return max_slope_; }

 private:
  double min_slope_, max_slope_;
};

struct CrossoverResult {
  double T_crit = 0.0;  ///< [K], through the linewidth law when the model has a variance hook
  double T_root = 0.0;  ///< [K], root of the slope criterion on the model's temperature axis
  double linewidth = 0.0;  ///< [GHz], analytic FWHM at T_root (0 without variance hook)
  bool degenerate = false;
  int iterations = 0;
};

/// Temperature where the decay-rate slope gamma_coeff(T)/2 reaches `slope`.
CrossoverResult crossover_temperature(const DephasingModel& model, const BroadeningLaw& law, double slope = 1.0,
                                      double rel_tol = 1e-4);

/// kappa for which crossover_temperature of from_calibration(curve, kappa,
/// reference_T) returns T_target.
double anchor_kappa(std::span<const CalibrationResult> curve, const BroadeningLaw& law, double T_target,
                    double reference_T = 30.0);

/// Default crossover nodes, 5..30 K every 2.5 K.
std::vector<double> default_crossover_nodes();

/// `tau_ns,g2`
void write_g2_csv(std::ostream& out, const G2Trace& trace);
/// `omegaR_radns,decay_rate_perns,r2,regime`
void write_decay_sweep_csv(std::ostream& out, const DecaySweep& sweep);

}  // namespace specdiff
