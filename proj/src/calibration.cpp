#include "specdiff/calibration.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "specdiff/lineshape.hpp"
#include "specdiff/nelder_mead.hpp"

namespace specdiff {

void validate(const BroadeningLaw& law) {
  if (!std::isfinite(law.A) || !(law.A > 0.0)) throw InvalidInput(fmt::format("law A must be > 0 GHz (got {})", law.A));
  if (!std::isfinite(law.B) || law.B < 0.0) throw InvalidInput(fmt::format("law B must be >= 0 GHz/K^3 (got {})", law.B));
}

double target_fwhm(double T, const BroadeningLaw& law) {
  if (!(T >= 0.0)) throw InvalidInput(fmt::format("temperature must be >= 0 K (got {})", T));
  return law.A + law.B * T * T * T;
}

double temperature_for_fwhm(double fwhm, const BroadeningLaw& law) {
  if (!(law.B > 0.0)) throw InvalidInput("law with B = 0 cannot be inverted");
  if (fwhm < law.A) throw InvalidInput(fmt::format("linewidth {} GHz is below the law's floor A = {} GHz", fwhm, law.A));
  return std::cbrt((fwhm - law.A) / law.B);
}

namespace {

double variance_for_fwhm(double fwhm) {
  const double s = fwhm / units::kFwhmPerSigma;
  return s * s;
}

}  // namespace

Baseline Baseline::reference(const BroadeningLaw& law, double T0, double T_ref, double m_sigmaJ_ref,
                             double lambdaJ0_hz, double tau_sd) {
  // With a = sigma0^2/4 and c = lambda sigmaJ0^2 tau / 2 the analytic variance
  // at (1, 1, m) is a + m^2 c.
  const double v0 = variance_for_fwhm(target_fwhm(T0, law));
  const double v1 = variance_for_fwhm(target_fwhm(T_ref, law));
  const double c = (v1 - v0) / (m_sigmaJ_ref * m_sigmaJ_ref - 1.0);
  const double a = v0 - c;
  if (!(c > 0.0) || !(a > 0.0)) throw InvalidInput("reference baseline: law gives no jump excess between T0 and T_ref");
  Baseline b;
  b.T0 = T0;
  b.tau_sd = tau_sd;
  b.lambdaJ0_hz = lambdaJ0_hz;
  b.sigma0 = 2.0 * std::sqrt(a);
  b.sigmaJ0 = std::sqrt(2.0 * c / (units::per_ns_from_hz(lambdaJ0_hz) * tau_sd));
  return b;
}

void validate(const Baseline& b) {
  const auto positive = [](double v, const char* name, const char* unit) {
    if (!std::isfinite(v) || !(v > 0.0)) throw InvalidInput(fmt::format("baseline {} must be > 0 {} (got {})", name, unit, v));
  };
  positive(b.T0, "T0", "K");
  positive(b.sigma0, "sigma0", "GHz");
  positive(b.lambdaJ0_hz, "lambdaJ0", "Hz");
  positive(b.sigmaJ0, "sigmaJ0", "GHz");
  positive(b.tau_sd, "tau_sd", "ns");
  if (!std::isfinite(b.omega0)) throw InvalidInput("baseline omega0 must be finite");
}

NoiseParams apply_multipliers(const Baseline& base, const MultiplierSet& m) {
  return NoiseParams::with_rate_hz(base.omega0, base.tau_sd, base.sigma0 * m.m_sigma, base.lambdaJ0_hz * m.m_lambda,
                                   base.sigmaJ0 * m.m_sigma * m.m_sigmaJ);
}

void validate(const CalibConfig& cfg) {
  if (cfg.grid_points < 2) throw InvalidInput("simplex grid_points must be >= 2");
  if (!(cfg.box_min > 0.0) || !(cfg.box_max > cfg.box_min)) throw InvalidInput("multiplier box must satisfy 0 < min < max");
  if (!(cfg.tolerance > 0.0)) throw InvalidInput("calibration tolerance must be > 0 GHz");
  if (cfg.max_evals < 1) throw InvalidInput("simplex max_evals must be >= 1");
  if ((cfg.tie_weights.array() < 0.0).any() || !cfg.tie_weights.allFinite())
    throw InvalidInput("tie weights must be finite and >= 0");
  if (!(cfg.distance_weight >= 0.0)) throw InvalidInput("distance weight must be >= 0");
  const Eigen::Vector3d m0 = cfg.initial.vector();
  if (!((m0.array() > 0.0).all())) throw InvalidInput("initial multipliers must be > 0");
  validate(cfg.mc_grid);
}

namespace {

struct Tie {
  Eigen::Vector3d log_prev;
  Eigen::Vector3d weights;
  Eigen::Vector3d log_lower;  // max(box_min, previous)
  double log_upper;

  Tie(const CalibConfig& cfg, const MultiplierSet& prev) {
    log_prev = prev.vector().array().log();
    weights = cfg.tie_weights;
    log_lower = prev.vector().cwiseMax(cfg.box_min).array().log();
    log_upper = std::log(cfg.box_max);
  }

  double distance(const Eigen::Vector3d& log_m) const {
    return (weights.array() * (log_m - log_prev).array().square()).sum();
  }

  double violation(const Eigen::Vector3d& log_m) const {
    double v = 0.0;
    for (int i = 0; i < 3; ++i) {
      if (log_m(i) < log_lower(i)) v += (log_lower(i) - log_m(i)) * (log_lower(i) - log_m(i));
      if (log_m(i) > log_upper) v += (log_m(i) - log_upper) * (log_m(i) - log_upper);
    }
    return v;
  }
};

void check_temperature(double T) {
  if (!std::isfinite(T) || T < kMinCalibrationT || T > kMaxCalibrationT)
    throw InvalidInput(fmt::format("calibration temperature {} K outside the supported range [{}, {}] K", T,
                                   kMinCalibrationT, kMaxCalibrationT));
}

}  // namespace

MultiplierSet surrogate_solution(double T, const Baseline& base, const BroadeningLaw& law, const CalibConfig& cfg,
                                 int* grid_evaluations) {
  check_temperature(T);
  validate(base);
  validate(law);
  validate(cfg);
  const double target = target_fwhm(T, law);

  // Stage 1: coarse grid on the closed form.
  const int n = cfg.grid_points;
  const double l0 = std::log(cfg.box_min), l1 = std::log(cfg.box_max);
  Eigen::VectorXd axis(n);
  for (int i = 0; i < n; ++i) axis(i) = std::exp(l0 + (l1 - l0) * i / (n - 1));
  MultiplierSet grid_best{};
  double grid_err = std::numeric_limits<double>::infinity();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j)
      for (int k = 0; k < n; ++k) {
        const MultiplierSet m{axis(i), axis(j), axis(k), T};
        const double err = std::abs(analytic_fwhm(apply_multipliers(base, m)) - target);
        if (err < grid_err) {
          grid_err = err;
          grid_best = m;
        }
      }
  if (grid_evaluations) *grid_evaluations = n * n * n;

  // Stage 1.5: on the surface analytic FWHM = target, m_sigma follows from the
  // other two, V = m_sigma^2 (a + m_lambda m_sigmaJ^2 c). Minimise the weighted
  // distance to the previous temperature over (log m_lambda, log m_sigmaJ).
  const double v_target = variance_for_fwhm(target);
  const NoiseParams unit = apply_multipliers(base, {});
  const double a = diffusion_variance(unit.S);
  const double c = jump_variance(unit.lambda_j, unit.sigma_j, unit.tau_sd);
  const Tie tie(cfg, cfg.initial);
  auto full = [&](const Eigen::Vector2d& u) {
    const double ml = std::exp(u(0)), mj = std::exp(u(1));
    return Eigen::Vector3d(0.5 * std::log(v_target / (a + ml * mj * mj * c)), u(0), u(1));
  };
  auto objective = [&](const Eigen::Vector2d& u) {
    const Eigen::Vector3d lm = full(u);
    return tie.distance(lm) + 1e8 * tie.violation(lm);
  };
  SimplexOptions<double> so;
  so.max_evals = 4000;
  so.initial_step = 0.1;
  so.f_tol = 1e-14;
  so.x_tol = 1e-11;
  Eigen::Vector2d u(tie.log_lower(1), tie.log_lower(2));
  for (int restart = 0; restart < 3; ++restart) {
    u = nelder_mead(objective, u, so).x;
    so.initial_step = 0.01;
  }
  const Eigen::Vector3d lm = full(u);
  MultiplierSet out = MultiplierSet::from_vector(lm.array().exp(), T);
  // The tie-break surface misses the feasible box when the target lies outside
  // what the bounds allow; fall back to the grid optimum then.
  if (!std::isfinite(out.m_sigma) || tie.violation(lm) > 1e-10) out = grid_best;
  return out;
}

CalibrationResult calibrate(double T, const Baseline& base, const BroadeningLaw& law, const CalibConfig& cfg) {
  int grid_evals = 0;
  const MultiplierSet start = surrogate_solution(T, base, law, cfg, &grid_evals);
  const double target = target_fwhm(T, law);

  CalibrationResult best;
  best.target_fwhm = target;
  best.grid_evaluations = grid_evals;
  best.monte_carlo = cfg.monte_carlo;
  auto record = [&](const MultiplierSet& m, double achieved) {
    CalibrationResult r = best;
    r.multipliers = m;
    r.params = apply_multipliers(base, m);
    r.surrogate_fwhm = analytic_fwhm(r.params);
    r.achieved_fwhm = achieved;
    r.residual = achieved - target;
    return r;
  };

  if (!cfg.monte_carlo) {
    best = record(start, analytic_fwhm(apply_multipliers(base, start)));
    if (!(std::abs(best.residual) < cfg.tolerance))
      throw CalibrationFailure(fmt::format("T = {} K: analytic residual {:.4g} GHz above tolerance {} GHz", T,
                                           best.residual, cfg.tolerance),
                               best);
    return best;
  }

  // Stage 2: simplex on the Monte-Carlo FWHM in log-multiplier space with
  // common random numbers. Coordinates are clamped to the box and to the
  // previous temperature's multipliers.
  const Tie tie(cfg, cfg.initial);
  best.residual = std::numeric_limits<double>::infinity();
  int evals = 0;
  auto clamp = [&](const Eigen::Vector3d& x) {
    Eigen::Vector3d c = x;
    for (int i = 0; i < 3; ++i) c(i) = std::clamp(x(i), tie.log_lower(i), tie.log_upper);
    return c;
  };
  auto objective = [&](const Eigen::Vector3d& x) {
    const Eigen::Vector3d lx = clamp(x);
    const MultiplierSet m = MultiplierSet::from_vector(lx.array().exp(), T);
    const LineShape ls = measure_lineshape(apply_multipliers(base, m), cfg.mc_grid, cfg.scheme, cfg.run);
    ++evals;
    CalibrationResult r = record(m, ls.fit.fwhm);
    if (std::abs(r.residual) < std::abs(best.residual)) best = r;
    return std::abs(r.residual) + cfg.distance_weight * tie.distance(lx) + (x - lx).squaredNorm();
  };
  auto converged = [&](const Eigen::Vector3d&, double) { return std::abs(best.residual) < cfg.tolerance; };
  SimplexOptions<double> so;
  so.max_evals = cfg.max_evals;
  so.initial_step = 0.02;
  so.f_tol = 1e-6;
  so.x_tol = 1e-6;
  const Eigen::Vector3d x0 = start.vector().array().log();
  nelder_mead(objective, x0, so, converged);
  best.evaluations = evals;
  if (!(std::abs(best.residual) < cfg.tolerance))
    throw CalibrationFailure(fmt::format("T = {} K: best residual {:.4g} GHz after {} evaluations exceeds {} GHz", T,
                                         best.residual, evals, cfg.tolerance),
                             best);
  return best;
}

CalibrationResult calibrate_at(double T, const Baseline& base, const BroadeningLaw& law, const CalibConfig& cfg,
                               const MultiplierSet& previous) {
  CalibConfig c = cfg;
  c.initial = previous;
  return calibrate(T, base, law, c);
}

std::vector<CalibrationResult> calibrate_curve(std::span<const double> temps, const Baseline& base,
                                               const BroadeningLaw& law, const CalibConfig& cfg) {
  if (temps.empty()) throw InvalidInput("calibration needs at least one temperature");
  for (std::size_t i = 1; i < temps.size(); ++i)
    if (!(temps[i] > temps[i - 1])) throw InvalidInput("calibration temperatures must be strictly increasing");
  std::vector<CalibrationResult> out;
  MultiplierSet previous = cfg.initial;
  for (double T : temps) {
    try {
      out.push_back(calibrate_at(T, base, law, cfg, previous));
    } catch (const CalibrationFailure& e) {
      throw CalibrationFailure(e.what(), e.best(), out);
    }
    previous = out.back().multipliers;
  }
  return out;
}

void write_calibration_csv(std::ostream& out, std::span<const CalibrationResult> rows) {
  fmt::print(out, "T_K,m_sigma,m_lambda,m_sigmaJ,S_GHz,lambdaJ_Hz,sigmaJ_GHz,target_GHz,achieved_GHz,residual_GHz\n");
  for (const auto& r : rows) {
    const auto& m = r.multipliers;
    fmt::print(out, "{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g},{:.9g}\n", m.T, m.m_sigma,
               m.m_lambda, m.m_sigmaJ, r.params.S, r.params.lambda_j_hz(), r.params.sigma_j, r.target_fwhm,
               r.achieved_fwhm, r.residual);
  }
}

std::vector<CalibrationResult> read_calibration_csv(std::istream& in, const Baseline& base) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("T_K,m_sigma,m_lambda,m_sigmaJ", 0) != 0)
    throw InvalidInput("calibration file: missing or unexpected header");
  std::vector<CalibrationResult> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<double> v;
    while (std::getline(ss, cell, ',')) {
      try {
        v.push_back(std::stod(cell));
      } catch (const std::exception&) {
        throw InvalidInput(fmt::format("calibration file line {}: bad number '{}'", lineno, cell));
      }
    }
    if (v.size() != 10) throw InvalidInput(fmt::format("calibration file line {}: expected 10 columns", lineno));
    CalibrationResult r;
    r.multipliers = {v[1], v[2], v[3], v[0]};
    r.params = NoiseParams::with_rate_hz(base.omega0, base.tau_sd, v[4], v[5], v[6]);
    r.target_fwhm = v[7];
    r.achieved_fwhm = v[8];
    r.residual = v[9];
    r.surrogate_fwhm = analytic_fwhm(r.params);
    rows.push_back(r);
  }
  if (rows.empty()) throw InvalidInput("calibration file has no rows");
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (!(rows[i].multipliers.T > rows[i - 1].multipliers.T))
      throw InvalidInput("calibration file temperatures must be strictly increasing");
  return rows;
}

}  // namespace specdiff
