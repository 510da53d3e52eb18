// specdiff: simulate, calibrate and analyse the hybrid spectral-diffusion model.
//
// Exit codes: 0 ok, 1 other failure, 2 invalid input, 3 resource limit,
// 4 calibration failure, 5 missing calibration input, 6 no crossover.

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "specdiff/calibration.hpp"
#include "specdiff/coherence.hpp"
#include "specdiff/config.hpp"
#include "specdiff/ensemble.hpp"
#include "specdiff/lineshape.hpp"
#include "specdiff/output.hpp"
#include "specdiff/svg.hpp"

namespace fs = std::filesystem;
using namespace specdiff;

namespace {

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<unsigned> threads;
  bool json_errors = false;
  bool strict = false;
  std::optional<std::string> calibration;
};

// Explicit noise-parameter overrides shared by simulate, scan and compare-ou.
struct ParamFlags {
  std::optional<double> T, S, tau_sd, lambda_hz, sigma_j, omega0;
  std::optional<std::int64_t> n_traj;
  std::optional<double> dt, window, burn_in;
  std::optional<std::string> scheme;

  void add(CLI::App* app, bool with_T = true) {
    if (with_T) app->add_option("--T", T, "temperature [K]; parameters from the calibration");
    app->add_option("--S", S, "diffusion strength [GHz]");
    app->add_option("--tau-sd", tau_sd, "diffusion correlation time [ns]");
    app->add_option("--lambda-j", lambda_hz, "jump rate [Hz]");
    app->add_option("--sigma-j", sigma_j, "jump amplitude std [GHz]");
    app->add_option("--omega0", omega0, "mean detuning [GHz]");
    app->add_option("--n-traj", n_traj, "trajectories");
    app->add_option("--dt", dt, "time step [ns]");
    app->add_option("--window", window, "simulated time per trajectory [ns]");
    app->add_option("--burn-in", burn_in, "discarded initial time [ns]");
    app->add_option("--scheme", scheme, "jump scheme: bernoulli|hazard");
  }

  void apply(NoiseParams& p) const {
    if (S) p.S = *S;
    if (tau_sd) p.tau_sd = *tau_sd;
    if (lambda_hz) p.lambda_j = units::per_ns_from_hz(*lambda_hz);
    if (sigma_j) p.sigma_j = *sigma_j;
    if (omega0) p.omega0 = *omega0;
  }

  void apply(RunConfig& c) const {
    if (n_traj) c.grid.n_traj = *n_traj;
    if (dt) c.grid.dt = *dt;
    if (window) c.grid.window = *window;
    if (burn_in) c.grid.burn_in = *burn_in;
    if (scheme) c.scheme = parse_jump_scheme(*scheme);
  }
};

int exit_code(ErrorKind k) {
  switch (k) {
    case ErrorKind::InvalidInput:
    case ErrorKind::TimeStepTooCoarse:
    case ErrorKind::InsufficientData: return 2;
    case ErrorKind::Resource: return 3;
    case ErrorKind::CalibrationFailure: return 4;
    case ErrorKind::MissingInput: return 5;
    case ErrorKind::NoCrossover: return 6;
    case ErrorKind::FitFailure:
    case ErrorKind::PoorFit: return 1;
  }
  return 1;
}

int report(const Globals& g, const std::string& kind, const std::string& message, int code) {
  if (g.json_errors) {
    nlohmann::ordered_json j{{"error", kind}, {"exit_code", code}, {"message", message}};
    std::cerr << j.dump() << '\n';
  } else {
    std::cerr << "error: " << message << '\n';
  }
  return code;
}

unsigned thread_count(const Globals& g) {
  if (g.threads) return *g.threads;
  if (const char* env = std::getenv("SPECDIFF_THREADS")) {
    try {
      return static_cast<unsigned>(std::stoul(env));
    } catch (const std::exception&) {
      throw InvalidInput(fmt::format("SPECDIFF_THREADS='{}' is not a count", env));
    }
  }
  return 0;
}

class Session {
 public:
  explicit Session(const Globals& g) {
    cfg_ = g.config.empty() ? RunConfig{} : load_config(g.config);
    if (g.config.empty()) cfg_.baseline = Baseline::reference(cfg_.law);
    if (g.seed) cfg_.grid.seed = *g.seed;
    if (g.out) cfg_.out_dir = *g.out;
    if (g.strict) cfg_.calib.tolerance = kStrictTolerance;
    if (g.calibration) cfg_.calibration_file = fs::path(*g.calibration);
    threads_ = thread_count(g);
    validate(cfg_);
  }

  RunConfig& cfg() { return cfg_; }
  RunOptions run() const { return cfg_.run_options(threads_); }
  CalibConfig calib() const {
    CalibConfig c = cfg_.calibration_config();
    c.run = run();
    return c;
  }
  fs::path out(const std::string& name) const { return cfg_.out_dir / name; }

  void svg(const std::string& name, const std::vector<svg::Plot>& panels) const {
    if (!cfg_.svg) return;
    write_file(out(name), [&](std::ostream& o) { svg::write_panels(o, panels); });
  }

  /// Calibrated rows and the dephasing model. From the calibration file when
  /// one is configured (or <out>/calibration.csv exists), otherwise from the
  /// analytic calibration stages on [dephasing] nodes_K.
  void ensure_curve() {
    if (!curve_.empty()) return;
    std::optional<fs::path> file = cfg_.calibration_file;
    if (!file && fs::exists(out("calibration.csv"))) file = out("calibration.csv");
    if (file) {
      std::ifstream in(*file);
      if (!in) throw MissingInput(fmt::format("calibration file '{}' not found", file->string()));
      try {
        curve_ = read_calibration_csv(in, cfg_.baseline);
      } catch (const InvalidInput& e) {
        throw MissingInput(fmt::format("calibration file '{}': {}", file->string(), e.what()));
      }
      from_file_ = true;
    } else {
      CalibConfig c = calib();
      c.monte_carlo = false;
      curve_ = calibrate_curve(cfg_.nodes_K, cfg_.baseline, cfg_.law, c);
    }
    if (cfg_.dephasing_table) {
      table_model_ = DephasingModel::from_table(cfg_.dephasing_table->first, cfg_.dephasing_table->second);
    }
    try {
      model_ = DephasingModel::from_calibration(curve_, cfg_.kappa, cfg_.reference_T);
    } catch (const InvalidInput& e) {
      if (!table_model_) {
        if (from_file_) throw MissingInput(fmt::format("calibration does not support the dephasing model: {}", e.what()));
        throw;
      }
    }
  }

  const DephasingModel& model() {
    ensure_curve();
    return table_model_ ? *table_model_ : *model_;
  }

  /// Variance-carrying model (for crossover linewidth mapping and scans).
  const DephasingModel* calibrated_model() {
    ensure_curve();
    return model_ ? &*model_ : nullptr;
  }

  /// Calibrated parameters at T.
  NoiseParams params_at(double T) {
    ensure_curve();
    for (const auto& r : curve_)
      if (std::abs(r.multipliers.T - T) <= 1e-9 * std::max(1.0, T)) return r.params;
    if (from_file_)
      throw MissingInput(fmt::format("calibration file has no row for T = {} K; run `calibrate --temps` with it", T));
    MultiplierSet previous = cfg_.calib.initial;
    for (const auto& r : curve_)
      if (r.multipliers.T < T) previous = r.multipliers;
    CalibConfig c = calib();
    c.monte_carlo = false;
    return calibrate_at(T, cfg_.baseline, cfg_.law, c, previous).params;
  }

  /// Monte-Carlo calibrated parameters at T for the simulation commands.
  NoiseParams simulated_params_at(double T) {
    std::optional<fs::path> file = cfg_.calibration_file;
    if (!file && fs::exists(out("calibration.csv"))) file = out("calibration.csv");
    if (file) return params_at(T);
    return calibrate(T, cfg_.baseline, cfg_.law, calib()).params;
  }

  NoiseParams resolve(const ParamFlags& f) {
    NoiseParams p = f.T ? simulated_params_at(*f.T) : apply_multipliers(cfg_.baseline, {});
    f.apply(p);
    return p;
  }

 private:
  RunConfig cfg_;
  unsigned threads_ = 0;
  std::vector<CalibrationResult> curve_;
  bool from_file_ = false;
  std::optional<DephasingModel> model_;
  std::optional<DephasingModel> table_model_;
};

svg::Series series(std::string label, const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  svg::Series s;
  s.label = std::move(label);
  s.x.assign(x.data(), x.data() + x.size());
  s.y.assign(y.data(), y.data() + y.size());
  return s;
}

svg::Series series(std::string label, const Eigen::ArrayXd& x, const Eigen::ArrayXd& y) {
  return series(std::move(label), Eigen::VectorXd(x.matrix()), Eigen::VectorXd(y.matrix()));
}

// ---------------------------------------------------------------- simulate

int cmd_simulate(Session& s, const ParamFlags& f, std::optional<int> bins, std::int64_t dump) {
  f.apply(s.cfg());
  validate(s.cfg().grid);
  const NoiseParams p = s.resolve(f);
  validate(p, true);
  RunOptions run = s.run();
  run.allow_deterministic = true;
  const LineShape ls = measure_lineshape(p, s.cfg().grid, s.cfg().scheme, run, bins);

  write_file(s.out("simulate_histogram.csv"), [&](std::ostream& o) { write_histogram_csv(o, ls.histogram); });
  nlohmann::ordered_json fit = to_json(ls.fit);
  fit["converged"] = ls.fit_converged;
  write_file(s.out("simulate_fit.json"), [&](std::ostream& o) { o << fit.dump(2) << '\n'; });
  nlohmann::ordered_json stats{{"params", to_json(p)},
                               {"scheme", to_string(s.cfg().scheme)},
                               {"seed", s.cfg().grid.seed},
                               {"statistics", to_json(ls.statistics)},
                               {"analytic_variance_GHz2", ls.analytic_variance},
                               {"discrete_variance_GHz2", discrete_variance(p, s.cfg().grid.dt)},
                               {"analytic_fwhm_GHz", analytic_fwhm(p)}};
  write_file(s.out("simulate_stats.json"), [&](std::ostream& o) { o << stats.dump(2) << '\n'; });
  if (dump > 0) {
    SimGrid g = s.cfg().grid;
    g.n_traj = std::min(dump, g.n_traj);
    const TrajectoryEnsemble ens = simulate_ensemble(p, g, s.cfg().scheme, run);
    write_file(s.out("simulate_trajectories.csv"), [&](std::ostream& o) { write_trajectories_csv(o, ens); });
  }

  const Eigen::VectorXd x = ls.histogram.centers();
  Eigen::VectorXd gauss(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double z = (x(i) - ls.fit.mu) / ls.fit.sigma_fit;
    gauss(i) = ls.fit.amplitude * std::exp(-0.5 * z * z);
  }
  svg::Plot plot{"Detuning distribution", "omega [GHz]", "P(omega) [1/GHz]", {}};
  plot.series.push_back(series("simulated", x, ls.histogram.densities()));
  auto fitted = series("Gaussian fit", x, gauss);
  fitted.dashed = true;
  plot.series.push_back(fitted);
  s.svg("simulate_lineshape.svg", {plot});

  fmt::print("FWHM (Gaussian fit)      {:.6f} GHz{}\n", ls.fit.fwhm, ls.fit_converged ? "" : "  (moment fallback)");
  fmt::print("FWHM (analytic)          {:.6f} GHz\n", analytic_fwhm(p));
  fmt::print("variance (pooled)        {:.6f} GHz^2\n", ls.statistics.pooled.variance);
  fmt::print("variance (analytic)      {:.6f} GHz^2\n", ls.analytic_variance);
  fmt::print("variance (Euler, dt)     {:.6f} GHz^2\n", discrete_variance(p, s.cfg().grid.dt));
  fmt::print("skewness                 {:.4f}\n", ls.statistics.pooled.skewness);
  fmt::print("excess kurtosis          {:.4f}\n", ls.statistics.pooled.excess_kurtosis);
  fmt::print("mean jumps / trajectory  {:.4f}\n", ls.statistics.jumps.mean);
  return 0;
}

// --------------------------------------------------------------- calibrate

svg::Plot calibration_plot(const RunConfig& cfg, const std::vector<CalibrationResult>& rows) {
  svg::Plot plot{"Linewidth vs temperature", "T [K]", "FWHM [GHz]", {}};
  svg::Series law{"A + B T^3", {}, {}, false, false};
  const double hi = std::max(35.0, rows.empty() ? 0.0 : rows.back().multipliers.T * 1.1);
  for (int i = 0; i <= 200; ++i) {
    const double T = hi * i / 200.0;
    law.x.push_back(T);
    law.y.push_back(target_fwhm(T, cfg.law));
  }
  svg::Series pts{"calibrated", {}, {}, false, true};
  for (const auto& r : rows) {
    pts.x.push_back(r.multipliers.T);
    pts.y.push_back(r.achieved_fwhm);
  }
  plot.series = {law, pts};
  return plot;
}

int cmd_calibrate(Session& s, const std::vector<double>& temps) {
  if (temps.empty()) throw InvalidInput("--temps needs at least one temperature");
  std::vector<CalibrationResult> rows;
  int code = 0;
  std::string message;
  try {
    rows = calibrate_curve(temps, s.cfg().baseline, s.cfg().law, s.calib());
  } catch (const CalibrationFailure& e) {
    rows = e.partial();
    rows.push_back(e.best());
    code = 4;
    message = e.what();
  }
  write_file(s.out("calibration.csv"), [&](std::ostream& o) { write_calibration_csv(o, rows); });
  s.svg("calibration.svg", {calibration_plot(s.cfg(), rows)});
  for (const auto& r : rows)
    fmt::print("T = {:g} K  m = ({:.5f}, {:.5f}, {:.5f})  target {:.5f} GHz  achieved {:.5f} GHz  residual {:+.5f} GHz\n",
               r.multipliers.T, r.multipliers.m_sigma, r.multipliers.m_lambda, r.multipliers.m_sigmaJ, r.target_fwhm,
               r.achieved_fwhm, r.residual);
  if (code != 0) throw CalibrationFailure(message, rows.back());
  return 0;
}

// ---------------------------------------------------------------------- g2

int cmd_g2(Session& s, double T, const std::vector<double>& omega_ghz) {
  if (omega_ghz.empty()) throw InvalidInput("--omega-r needs at least one value");
  const NoiseParams p = s.params_at(T);
  const DephasingModel& model = s.model();
  const auto emitter = s.cfg().emitter();
  if (!emitter) throw InvalidInput("[emitter] T1_ns and T2_ns are required for g2");

  svg::Plot plot{fmt::format("g2 at {:g} K", T), "tau [ns]", "g2", {}};
  std::vector<std::string> summary;
  for (double w_ghz : omega_ghz) {
    if (!(w_ghz >= 0.0)) throw InvalidInput("Rabi frequencies must be >= 0 GHz");
    EmitterParams e = *emitter;
    e.omega_R = units::radns_from_ghz(w_ghz);
    const G2Trace tr = g2_trace(T, e, p, model);
    write_file(s.out(fmt::format("g2_T{}K_omegaR{}GHz.csv", tag(T), tag(w_ghz))),
               [&](std::ostream& o) { write_g2_csv(o, tr); });
    std::string decay = "nan", r2 = "nan";
    try {
      const DecayFit fit = extract_decay_rate(tr);
      decay = fmt::format("{:.9g}", fit.decay_rate);
      r2 = fmt::format("{:.9g}", fit.fit_r2);
    } catch (const PoorFit& pf) {
      warn(pf.what());
    }
    summary.push_back(fmt::format("{:.9g},{:.9g},{:.9g},{},{:.9g},{:.9g},{},{}", T, w_ghz, e.omega_R, to_string(tr.regime),
                                  tr.gamma, tr.omega_eff.magnitude, decay, r2));
    fmt::print("T = {:g} K  Omega_R = {:g} GHz  regime {}  gamma {:.4g} /ns  |Omega_eff| {:.4g} rad/ns  decay {} /ns\n", T,
               w_ghz, to_string(tr.regime), tr.gamma, tr.omega_eff.magnitude, decay);
    plot.series.push_back(series(fmt::format("{:g} GHz", w_ghz), tr.tau, tr.g2));
  }
  write_file(s.out(fmt::format("g2_summary_T{}K.csv", tag(T))), [&](std::ostream& o) {
    fmt::print(o, "T_K,omegaR_GHz,omegaR_radns,regime,gamma_perns,omega_eff_radns,decay_rate_perns,r2\n");
    for (const auto& line : summary) fmt::print(o, "{}\n", line);
  });
  s.svg(fmt::format("g2_T{}K.svg", tag(T)), {plot});
  return 0;
}

// --------------------------------------------------------------- crossover

int cmd_crossover(Session& s) {
  const DephasingModel& model = s.model();
  const CrossoverResult r = crossover_temperature(model, s.cfg().law);
  nlohmann::ordered_json j{{"T_crit_K", r.T_crit},
                           {"T_root_K", r.T_root},
                           {"linewidth_GHz", r.linewidth},
                           {"kappa", s.cfg().kappa},
                           {"degenerate", r.degenerate}};
  write_file(s.out("crossover.json"), [&](std::ostream& o) { o << j.dump(2) << '\n'; });
  fmt::print("T_crit = {:.4f} K\n", r.T_crit);

  const auto emitter = s.cfg().emitter();
  if (!emitter) {
    warn("[emitter] T1_ns/T2_ns not set; skipping the decay-rate sweeps");
    return 0;
  }
  std::vector<double> omega;
  for (double w : s.cfg().sweep_omega_r_GHz) omega.push_back(units::radns_from_ghz(w));
  svg::Plot plot{"Decay rate vs Rabi frequency", "Omega_R [rad/ns]", "decay rate [1/ns]", {}};
  std::vector<std::string> slopes;
  double hi = 0.0;
  for (double T : s.cfg().sweep_T_K) {
    const DecaySweep sw = decay_sweep(T, *emitter, s.params_at(T), model, omega);
    write_file(s.out(fmt::format("decay_sweep_T{}K.csv", tag(T))), [&](std::ostream& o) { write_decay_sweep_csv(o, sw); });
    svg::Series pts{fmt::format("{:g} K", T), {}, {}, false, true};
    for (const auto& f : sw.fits) {
      pts.x.push_back(f.omega_R);
      pts.y.push_back(f.decay_rate);
      hi = std::max({hi, f.omega_R, f.decay_rate});
    }
    plot.series.push_back(pts);
    slopes.push_back(fmt::format("{:.9g},{:.9g},{:.9g},{:.9g}", T, sw.slope.slope, sw.slope.intercept, sw.slope.r2));
    fmt::print("T = {:g} K  slope {:.4f}  (R^2 {:.5f})\n", T, sw.slope.slope, sw.slope.r2);
  }
  write_file(s.out("decay_slopes.csv"), [&](std::ostream& o) {
    fmt::print(o, "T_K,slope_perns_per_radns,intercept_perns,r2\n");
    for (const auto& line : slopes) fmt::print(o, "{}\n", line);
  });
  plot.series.push_back(svg::Series{"Gamma = Omega_R", {0.0, hi}, {0.0, hi}, true, false});
  s.svg("crossover.svg", {plot});
  return 0;
}

// -------------------------------------------------------------------- scan

int cmd_scan(Session& s, const ParamFlags& f, const std::string& vary, const std::vector<double>& values) {
  struct Axis {
    const char* name;
    const char* column;
  };
  static const Axis axes[] = {{"sigma", "sigma_GHz"}, {"tau-sd", "tau_sd_ns"}, {"lambda-j", "lambdaJ_Hz"},
                              {"sigma-j", "sigmaJ_GHz"}};
  if (vary.find(',') != std::string::npos) throw InvalidInput("scan varies exactly one axis per invocation");
  const Axis* axis = nullptr;
  for (const auto& a : axes)
    if (vary == a.name) axis = &a;
  if (!axis) throw InvalidInput(fmt::format("unknown scan axis '{}' (sigma|tau-sd|lambda-j|sigma-j)", vary));
  if (values.empty()) throw InvalidInput("--values needs at least one value");

  f.apply(s.cfg());
  const NoiseParams base = s.resolve(f);
  const auto emitter = s.cfg().emitter(units::radns_from_ghz(s.cfg().sweep_omega_r_GHz.at(0)));
  const DephasingModel* model = emitter ? s.calibrated_model() : nullptr;
  if (!emitter) warn("[emitter] T1_ns/T2_ns not set; skipping the g2 overlay");

  std::vector<std::string> rows;
  svg::Plot fw{fmt::format("FWHM vs {}", axis->name), axis->column, "FWHM [GHz]", {}};
  svg::Series mc{"Gaussian fit", {}, {}, false, true}, an{"analytic", {}, {}, true, false};
  svg::Plot g2p{fmt::format("g2 vs {}", axis->name), "tau [ns]", "g2", {}};
  for (double v : values) {
    NoiseParams p = base;
    if (vary == "sigma") p.S = v;
    if (vary == "tau-sd") p.tau_sd = v;
    if (vary == "lambda-j") p.lambda_j = units::per_ns_from_hz(v);
    if (vary == "sigma-j") p.sigma_j = v;
    SimGrid g = s.cfg().grid;
    g.dt = std::min(g.dt, p.tau_sd / 20.0);
    const LineShape ls = measure_lineshape(p, g, s.cfg().scheme, s.run());
    std::string decay = "nan";
    if (emitter && model) {
      const double gamma = model->coefficient_for(p) * emitter->omega_R;
      const EffectiveRabi w = effective_rabi(emitter->omega_R, analytic_variance(p));
      const G2Trace tr = make_trace(*emitter, gamma, w, default_tau_grid(*emitter, gamma, w));
      try {
        decay = fmt::format("{:.9g}", extract_decay_rate(tr).decay_rate);
      } catch (const PoorFit& pf) {
        warn(pf.what());
      }
      g2p.series.push_back(series(fmt::format("{:g}", v), tr.tau, tr.g2));
    }
    rows.push_back(fmt::format("{:.9g},{:.9g},{:.9g},{:.9g},{}", v, ls.fit.fwhm, analytic_fwhm(p),
                               ls.statistics.pooled.excess_kurtosis, decay));
    mc.x.push_back(v);
    mc.y.push_back(ls.fit.fwhm);
    an.x.push_back(v);
    an.y.push_back(analytic_fwhm(p));
    fmt::print("{} = {:g}  FWHM {:.5f} GHz  (analytic {:.5f})  decay {} /ns\n", axis->name, v, ls.fit.fwhm,
               analytic_fwhm(p), decay);
  }
  const std::string stem = fmt::format("scan_{}", axis->name);
  write_file(s.out(stem + ".csv"), [&](std::ostream& o) {
    fmt::print(o, "{},fwhm_GHz,analytic_fwhm_GHz,excess_kurtosis,decay_rate_perns\n", axis->column);
    for (const auto& line : rows) fmt::print(o, "{}\n", line);
  });
  fw.series = {mc, an};
  std::vector<svg::Plot> panels{fw};
  if (!g2p.series.empty()) panels.push_back(g2p);
  s.svg(stem + ".svg", panels);
  return 0;
}

// -------------------------------------------------------------- compare-ou

int cmd_compare(Session& s, const ParamFlags& f) {
  f.apply(s.cfg());
  const NoiseParams p = s.resolve(f);
  const LineShapeComparison cmp = compare_ou_vs_hybrid(p, s.cfg().grid, s.cfg().scheme, s.run());
  write_file(s.out("compare_ou.csv"), [&](std::ostream& o) { write_comparison_csv(o, cmp); });
  nlohmann::ordered_json j{
      {"hybrid", {{"params", to_json(cmp.hybrid_params)}, {"fit", to_json(cmp.hybrid.fit)}}},
      {"ou", {{"params", to_json(cmp.ou_params)}, {"fit", to_json(cmp.ou.fit)}}},
  };
  write_file(s.out("compare_ou.json"), [&](std::ostream& o) { o << j.dump(2) << '\n'; });
  svg::Plot plot{"Hybrid vs matched OU", "omega [GHz]", "P(omega) [1/GHz]", {}};
  plot.series.push_back(series("hybrid", cmp.hybrid.histogram.centers(), cmp.hybrid.histogram.densities()));
  plot.series.push_back(series("pure OU", cmp.ou.histogram.centers(), cmp.ou.histogram.densities()));
  s.svg("compare_ou.svg", {plot});
  fmt::print("hybrid: FWHM {:.5f} GHz  skewness {:.4f}  excess kurtosis {:.4f}\n", cmp.hybrid.fit.fwhm,
             cmp.hybrid.fit.skewness, cmp.hybrid.fit.excess_kurtosis);
  fmt::print("OU:     FWHM {:.5f} GHz  skewness {:.4f}  excess kurtosis {:.4f}\n", cmp.ou.fit.fwhm, cmp.ou.fit.skewness,
             cmp.ou.fit.excess_kurtosis);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid OU + Gaussian-jump spectral diffusion: simulation, calibration, g2 and crossover"};
  app.fallthrough();
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config, "INI config file");
  app.add_option("--seed", g.seed, "64-bit seed (overrides [grid] seed)");
  app.add_option("--out", g.out, "output directory (overrides [output] dir)");
  app.add_option("--threads", g.threads, "worker threads (0 = all cores; fallback SPECDIFF_THREADS)");
  app.add_flag("--json-errors", g.json_errors, "machine-readable diagnostics on stderr");
  app.add_flag("--strict", g.strict, "calibration tolerance 0.02 GHz");
  app.add_option("--calibration", g.calibration, "calibration CSV to use instead of an inline calibration");

  ParamFlags sim_f, scan_f, cmp_f;
  std::optional<int> bins;
  std::int64_t dump = 0;
  auto* sim = app.add_subcommand("simulate", "simulate an ensemble and fit its lineshape");
  sim_f.add(sim);
  sim->add_option("--bins", bins, "histogram bins (default: Freedman-Diaconis, at least 64)");
  sim->add_option("--dump-traj", dump, "write the first N trajectories to simulate_trajectories.csv");

  std::vector<double> temps;
  auto* cal = app.add_subcommand("calibrate", "calibrate multipliers to the broadening law");
  cal->add_option("--temps", temps, "temperatures [K], comma separated")->required()->delimiter(',')->expected(0, -1);

  double g2_T = 0.0;
  std::vector<double> omega_r;
  auto* g2c = app.add_subcommand("g2", "g2(tau) traces at one temperature");
  g2c->add_option("--T", g2_T, "temperature [K]")->required();
  g2c->add_option("--omega-r", omega_r, "Rabi frequencies [GHz], comma separated")->required()->delimiter(',');

  auto* cross = app.add_subcommand("crossover", "critical temperature and decay-rate sweeps");

  std::string vary;
  std::vector<double> values;
  auto* scan = app.add_subcommand("scan", "FWHM and g2 damping along one parameter axis");
  scan_f.add(scan);
  scan->add_option("--vary", vary, "sigma|tau-sd|lambda-j|sigma-j")->required();
  scan->add_option("--values", values, "values (GHz, ns, Hz, GHz), comma separated")->required()->delimiter(',');

  auto* cmp = app.add_subcommand("compare-ou", "hybrid lineshape vs a variance-matched pure OU");
  cmp_f.add(cmp);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    return report(g, "invalid-input", e.what(), 2);
  }

  set_warning_handler([&g](std::string_view msg) {
    if (g.json_errors)
      std::cerr << nlohmann::ordered_json{{"warning", std::string(msg)}}.dump() << '\n';
    else
      std::cerr << "warning: " << msg << '\n';
  });

  try {
    Session s(g);
    if (*sim) return cmd_simulate(s, sim_f, bins, dump);
    if (*cal) return cmd_calibrate(s, temps);
    if (*g2c) return cmd_g2(s, g2_T, omega_r);
    if (*cross) return cmd_crossover(s);
    if (*scan) return cmd_scan(s, scan_f, vary, values);
    if (*cmp) return cmd_compare(s, cmp_f);
  } catch (const Error& e) {
    return report(g, to_string(e.kind()), e.what(), exit_code(e.kind()));
  } catch (const std::exception& e) {
    return report(g, "internal", e.what(), 1);
  }
  return 1;
}
