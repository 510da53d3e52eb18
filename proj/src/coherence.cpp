#include "specdiff/coherence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "specdiff/lineshape.hpp"

namespace specdiff {

namespace {
// |1 - g2| below this is treated as numerically zero by the decay fit.
constexpr double kEnvelopeFloor = 1e-10;
}  // namespace

void validate(const EmitterParams& e) {
  if (!std::isfinite(e.T1) || !(e.T1 > 0.0)) throw InvalidInput(fmt::format("T1 must be > 0 ns (got {})", e.T1));
  if (!std::isfinite(e.T2) || !(e.T2 > 0.0) || e.T2 > 2.0 * e.T1)
    throw InvalidInput(fmt::format("T2 must satisfy 0 < T2 <= 2 T1 (got T2 = {} ns, T1 = {} ns)", e.T2, e.T1));
  if (!std::isfinite(e.omega_R) || e.omega_R < 0.0)
    throw InvalidInput(fmt::format("Rabi frequency must be >= 0 (got {} rad/ns)", e.omega_R));
}

const char* to_string(Regime r) noexcept {
  switch (r) {
    case Regime::Oscillatory: return "oscillatory";
    case Regime::Critical: return "critical";
    case Regime::Overdamped: return "overdamped";
  }
  return "unknown";
}

EffectiveRabi effective_rabi(double omega_R, double variance, VarianceUnit unit) {
  if (!std::isfinite(omega_R) || !std::isfinite(variance) || variance < 0.0)
    throw InvalidInput("effective_rabi: need finite Omega_R and variance >= 0");
  const double var = unit == VarianceUnit::GHzSquared ? variance * units::kTwoPi * units::kTwoPi : variance;
  const double w2 = omega_R * omega_R;
  const double diff = w2 - var;
  const double scale = std::max(w2, var);
  if (std::abs(diff) <= kCriticalRelTol * scale) return {0.0, Regime::Critical};
  if (diff > 0.0) return {std::sqrt(diff), Regime::Oscillatory};
  return {std::sqrt(-diff), Regime::Overdamped};
}

double g2(double tau, const EmitterParams& e, double gamma, const EffectiveRabi& w) {
  return g2_kernel(tau, e.T1, e.T2, gamma, w.magnitude, w.regime);
}

Eigen::ArrayXd g2(const Eigen::ArrayXd& tau, const EmitterParams& e, double gamma, const EffectiveRabi& w) {
  return tau.unaryExpr([&](double t) { return g2_kernel(t, e.T1, e.T2, gamma, w.magnitude, w.regime); });
}

DephasingModel DephasingModel::from_calibration(std::span<const CalibrationResult> curve, double kappa,
                                                double reference_T) {
  if (curve.size() < 2) throw InvalidInput("dephasing model needs at least two calibrated temperatures");
  if (!std::isfinite(kappa) || kappa < 0.0) throw InvalidInput("dephasing kappa must be >= 0");
  const auto n = static_cast<Eigen::Index>(curve.size());
  Eigen::VectorXd T(n), vj(n), var(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = curve[static_cast<std::size_t>(i)].params;
    T(i) = curve[static_cast<std::size_t>(i)].multipliers.T;
    vj(i) = jump_variance(p.lambda_j, p.sigma_j, p.tau_sd);
    var(i) = analytic_variance(p);
  }
  const Pchip jump(T, vj);
  if (reference_T < jump.lower() || reference_T > jump.upper())
    throw InvalidInput(fmt::format("dephasing reference temperature {} K outside the calibrated range [{}, {}] K",
                                   reference_T, jump.lower(), jump.upper()));
  const double ref = jump(reference_T);
  if (!(ref > 0.0)) throw InvalidInput("calibrated jump variance vanishes at the reference temperature");
  DephasingModel m = from_table(T, kappa * vj / ref);
  m.variance_ = Pchip(T, var);
  m.kappa_ = kappa;
  m.reference_jump_variance_ = ref;
  return m;
}

DephasingModel DephasingModel::from_table(Eigen::VectorXd T, Eigen::VectorXd gamma_coeff) {
  if (T.size() != gamma_coeff.size() || T.size() < 2)
    throw InvalidInput("dephasing table needs at least two (T, gamma_coeff) pairs");
  for (Eigen::Index i = 0; i < gamma_coeff.size(); ++i) {
    if (!(gamma_coeff(i) >= 0.0)) throw InvalidInput("dephasing coefficients must be >= 0");
    if (i > 0 && gamma_coeff(i) < gamma_coeff(i - 1))
      throw InvalidInput("dephasing coefficients must be non-decreasing in T");
  }
  DephasingModel m;
  m.coeff_ = Pchip(std::move(T), std::move(gamma_coeff));
  return m;
}

double DephasingModel::coefficient_for(const NoiseParams& p) const {
  if (!variance_) throw MissingInput("dephasing model has no calibrated jump variance");
  return kappa_ * jump_variance(p.lambda_j, p.sigma_j, p.tau_sd) / reference_jump_variance_;
}

double DephasingModel::variance(double T) const {
  if (!variance_) throw MissingInput("dephasing model has no calibrated variance");
  return (*variance_)(T);
}

Eigen::ArrayXd default_tau_grid(const EmitterParams& e, double gamma, const EffectiveRabi& w,
                                double decay_constants) {
  const double envelope = e.intrinsic_rate() + 0.5 * gamma;
  double slow = envelope;
  if (w.regime == Regime::Overdamped) slow = envelope - std::min(w.magnitude, 0.5 * envelope);
  if (w.regime == Regime::Critical) slow = envelope / 1.5;
  double tau_max = decay_constants / slow;
  // Heavily damped oscillations: reach the second envelope maximum when it lies above the floor.
  if (w.regime == Regime::Oscillatory && w.magnitude > 0.0)
    tau_max = std::max(tau_max, std::min(4.0 * std::numbers::pi / w.magnitude, -std::log(kEnvelopeFloor) / slow));
  double dt = tau_max / 4000.0;
  if (w.regime == Regime::Oscillatory && w.magnitude > 0.0) dt = std::min(dt, units::kTwoPi / w.magnitude / 64.0);
  const auto n = static_cast<Eigen::Index>(std::min(1e6, std::ceil(tau_max / dt))) + 1;
  return Eigen::ArrayXd::LinSpaced(n, 0.0, tau_max);
}

G2Trace make_trace(const EmitterParams& e, double gamma, const EffectiveRabi& w, Eigen::ArrayXd tau) {
  validate(e);
  if (!std::isfinite(gamma) || gamma < 0.0) throw InvalidInput("dephasing rate must be >= 0");
  G2Trace t;
  t.emitter = e;
  t.gamma = gamma;
  t.omega_eff = w;
  t.regime = w.regime;
  t.g2 = g2(tau, e, gamma, w);
  t.tau = std::move(tau);
  return t;
}

G2Trace g2_trace(double T, const EmitterParams& e, const NoiseParams& calibrated, const DephasingModel& model,
                 std::optional<Eigen::ArrayXd> tau_grid) {
  validate(e);
  const double var = analytic_variance(calibrated);
  const double gamma = model.gamma(T, e.omega_R);
  const EffectiveRabi w = effective_rabi(e.omega_R, var);
  if (tau_grid && !(tau_grid->abs() == 0.0).any()) throw InvalidInput("g2 tau grid must include 0");
  G2Trace t = make_trace(e, gamma, w, tau_grid ? *tau_grid : default_tau_grid(e, gamma, w));
  t.variance = var;
  return t;
}

LinearFit linear_fit(const Eigen::ArrayXd& x, const Eigen::ArrayXd& y) {
  if (x.size() < 2) throw InvalidInput("linear fit needs at least two points");
  const double mx = x.mean(), my = y.mean();
  const double sxx = (x - mx).square().sum();
  const double sxy = ((x - mx) * (y - my)).sum();
  const double syy = (y - my).square().sum();
  if (!(sxx > 0.0)) throw InvalidInput("linear fit needs distinct abscissae");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  const double sse = (y - (f.intercept + f.slope * x)).square().sum();
  f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  return f;
}

DecayFit extract_decay_rate(const G2Trace& trace) {
  DecayFit fit;
  fit.omega_R = trace.emitter.omega_R;
  fit.regime = trace.regime;

  std::vector<Eigen::Index> idx;
  for (Eigen::Index i = 0; i < trace.tau.size(); ++i)
    if (trace.tau(i) > 0.0 || (trace.tau(i) == 0.0 && idx.empty())) idx.push_back(i);
  std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return trace.tau(a) < trace.tau(b); });
  const auto m = static_cast<Eigen::Index>(idx.size());
  Eigen::ArrayXd t(m), s(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    t(k) = trace.tau(idx[static_cast<std::size_t>(k)]);
    s(k) = 1.0 - trace.g2(idx[static_cast<std::size_t>(k)]);
  }
  const Eigen::ArrayXd y = s.abs();

  // Envelope maxima, refined by a parabola through ln|1 - g2|.
  std::vector<double> pt, pl;
  for (Eigen::Index k = 1; k + 1 < m; ++k) {
    if (!(y(k) > y(k - 1) && y(k) >= y(k + 1)) || y(k) < kEnvelopeFloor || y(k - 1) <= 0.0 || y(k + 1) <= 0.0) continue;
    const double lm = std::log(y(k - 1)), l0 = std::log(y(k)), lp = std::log(y(k + 1));
    const double h0 = t(k) - t(k - 1), h1 = t(k + 1) - t(k);
    // Parabola through three points with possibly unequal spacing.
    const double d0 = (l0 - lm) / h0, d1 = (lp - l0) / h1;
    const double a = (d1 - d0) / (h0 + h1);
    double tv = t(k), lv = l0;
    if (a < 0.0) {
      const double b = d0 - a * (t(k - 1) + t(k));
      tv = -b / (2.0 * a);
      lv = l0 + (tv - t(k)) * (d0 + a * (tv - t(k - 1)));
    }
    pt.push_back(tv);
    pl.push_back(lv);
  }

  Eigen::ArrayXd fx, fy;
  if (pt.size() >= 2) {
    fx = Eigen::Map<Eigen::ArrayXd>(pt.data(), static_cast<Eigen::Index>(pt.size()));
    fy = Eigen::Map<Eigen::ArrayXd>(pl.data(), static_cast<Eigen::Index>(pl.size()));
    fit.from_peaks = true;
  } else {
    Eigen::Index start = 0;
    while (start < m && y(start) > std::exp(-1.0)) ++start;
    Eigen::Index end = start;
    while (end < m && y(end) >= kEnvelopeFloor && (s(end) > 0.0) == (s(start) > 0.0)) ++end;
    const Eigen::Index count = end - start;
    if (count < 3) {
      fit.points = static_cast<int>(count);
      throw PoorFit(fmt::format("decay fit: only {} usable points in the tail", count), fit);
    }
    fx = t.segment(start, count);
    fy = y.segment(start, count).log();
  }
  const LinearFit lf = linear_fit(fx, fy);
  fit.decay_rate = -lf.slope;
  fit.fit_r2 = lf.r2;
  fit.points = static_cast<int>(fx.size());
  if (!(fit.fit_r2 >= kMinDecayR2) || !(fit.decay_rate > 0.0))
    throw PoorFit(fmt::format("decay fit: R^2 = {:.4g}, rate = {:.4g} /ns", fit.fit_r2, fit.decay_rate), fit);
  return fit;
}

DecaySweep decay_sweep(double T, const EmitterParams& emitter, const NoiseParams& calibrated,
                       const DephasingModel& model, std::span<const double> omega_R) {
  if (omega_R.size() < 2) throw InvalidInput("decay sweep needs at least two Rabi frequencies");
  DecaySweep sweep;
  sweep.T = T;
  for (double w : omega_R) {
    EmitterParams e = emitter;
    e.omega_R = w;
    sweep.fits.push_back(extract_decay_rate(g2_trace(T, e, calibrated, model)));
  }
  Eigen::ArrayXd x(static_cast<Eigen::Index>(sweep.fits.size())), y(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    x(i) = sweep.fits[static_cast<std::size_t>(i)].omega_R;
    y(i) = sweep.fits[static_cast<std::size_t>(i)].decay_rate;
  }
  sweep.slope = linear_fit(x, y);
  return sweep;
}

CrossoverResult crossover_temperature(const DephasingModel& model, const BroadeningLaw& law, double slope,
                                      double rel_tol) {
  if (!(slope > 0.0)) throw InvalidInput("crossover slope criterion must be > 0");
  const auto f = [&](double T) { return 0.5 * model.coefficient(T) - slope; };
  const double lo = model.lower(), hi = model.upper();
  const double flo = f(lo), fhi = f(hi);
  CrossoverResult r;
  if (flo == 0.0) {
    r.T_root = lo;
    const Eigen::VectorXd& c = model.coefficient_table().values();
    r.degenerate = (c.array() == c(0)).all();
    if (r.degenerate)
      warn(fmt::format("slope criterion holds on the whole range [{}, {}] K; returning the lower edge", lo, hi));
  } else if ((flo > 0.0) == (fhi > 0.0) && fhi != 0.0) {
    const Eigen::VectorXd& c = model.coefficient_table().values();
    const double smin = 0.5 * c.minCoeff(), smax = 0.5 * c.maxCoeff();
    throw NoCrossover(fmt::format("decay-rate slope ranges over [{:.4g}, {:.4g}] on [{}, {}] K and never reaches {}",
                                  smin, smax, lo, hi, slope),
                      smin, smax);
  } else {
    const BisectionResult b = bisect(f, lo, hi, rel_tol);
    r.T_root = b.root;
    r.iterations = b.iterations;
  }
  r.T_crit = r.T_root;
  if (model.has_variance()) {
    r.linewidth = units::kFwhmPerSigma * std::sqrt(model.variance(r.T_root));
    if (law.B > 0.0 && r.linewidth >= law.A) r.T_crit = temperature_for_fwhm(r.linewidth, law);
  }
  return r;
}

double anchor_kappa(std::span<const CalibrationResult> curve, const BroadeningLaw& law, double T_target,
                    double reference_T) {
  const DephasingModel unit = DephasingModel::from_calibration(curve, 1.0, reference_T);
  const double c_lo = unit.coefficient(unit.lower());
  const double c_hi = unit.coefficient(unit.upper());
  if (!(c_lo > 0.0) || !(c_hi > c_lo)) throw InvalidInput("anchor: calibrated jump variance is not increasing");
  // The root of kappa c(T) = 2 moves from the top to the bottom of the range as
  // kappa goes from 2/c_hi to 2/c_lo.
  const auto g = [&](double kappa) {
    const auto m = DephasingModel::from_calibration(curve, kappa, reference_T);
    return crossover_temperature(m, law, 1.0, 1e-12).T_crit - T_target;
  };
  const double k_lo = 2.0 / c_hi * (1.0 + 1e-9), k_hi = 2.0 / c_lo * (1.0 - 1e-9);
  return bisect(g, k_lo, k_hi, 1e-12).root;
}

std::vector<double> default_crossover_nodes() {
  std::vector<double> T;
  for (int i = 0; i <= 10; ++i) T.push_back(5.0 + 2.5 * i);
  return T;
}

void write_g2_csv(std::ostream& out, const G2Trace& trace) {
  fmt::print(out, "tau_ns,g2\n");
  for (Eigen::Index i = 0; i < trace.tau.size(); ++i) fmt::print(out, "{:.9g},{:.9g}\n", trace.tau(i), trace.g2(i));
}

void write_decay_sweep_csv(std::ostream& out, const DecaySweep& sweep) {
  fmt::print(out, "omegaR_radns,decay_rate_perns,r2,regime\n");
  for (const auto& f : sweep.fits)
    fmt::print(out, "{:.9g},{:.9g},{:.9g},{}\n", f.omega_R, f.decay_rate, f.fit_r2, to_string(f.regime));
}

}  // namespace specdiff
