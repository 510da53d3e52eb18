#include "specdiff/noise_model.hpp"

#include <cmath>
#include <fmt/format.h>

#include "specdiff/errors.hpp"

namespace specdiff {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "invalid-input";
    case ErrorKind::TimeStepTooCoarse: return "time-step-too-coarse";
    case ErrorKind::Resource: return "resource";
    case ErrorKind::InsufficientData: return "insufficient-data";
    case ErrorKind::FitFailure: return "fit-failure";
    case ErrorKind::CalibrationFailure: return "calibration-failure";
    case ErrorKind::PoorFit: return "poor-fit";
    case ErrorKind::NoCrossover: return "no-crossover";
    case ErrorKind::MissingInput: return "missing-input";
  }
  return "unknown";
}

void validate(const NoiseParams& p, bool allow_deterministic) {
  const bool finite = std::isfinite(p.omega0) && std::isfinite(p.tau_sd) && std::isfinite(p.S) &&
                      std::isfinite(p.lambda_j) && std::isfinite(p.sigma_j);
  if (!finite) throw InvalidInput("noise parameters must be finite");
  if (!(p.tau_sd > 0.0)) throw InvalidInput(fmt::format("tau_sd must be > 0 ns (got {})", p.tau_sd));
  if (p.S < 0.0) throw InvalidInput(fmt::format("S must be >= 0 GHz (got {})", p.S));
  if (p.lambda_j < 0.0) throw InvalidInput(fmt::format("lambda_J must be >= 0 (got {} Hz)", p.lambda_j_hz()));
  if (p.sigma_j < 0.0) throw InvalidInput(fmt::format("sigma_J must be >= 0 GHz (got {})", p.sigma_j));
  if (!allow_deterministic && p.deterministic())
    throw InvalidInput("S = 0 and lambda_J * sigma_J = 0 gives a deterministic trace; allow it explicitly");
}

std::int64_t SimGrid::steps() const {
  return static_cast<std::int64_t>(std::floor(window / dt * (1.0 + 1e-12)));
}

std::int64_t SimGrid::first_retained() const {
  if (burn_in <= 0.0) return 0;
  return static_cast<std::int64_t>(std::ceil(burn_in / dt * (1.0 - 1e-12)));
}

void validate(const SimGrid& g) {
  if (!std::isfinite(g.dt) || !(g.dt > 0.0)) throw InvalidInput(fmt::format("dt must be > 0 ns (got {})", g.dt));
  if (!std::isfinite(g.window) || g.window < 10.0 * g.dt * (1.0 - 1e-12))
    throw InvalidInput(fmt::format("window must be >= 10 dt (window {} ns, dt {} ns)", g.window, g.dt));
  if (g.n_traj < 1) throw InvalidInput(fmt::format("n_traj must be >= 1 (got {})", g.n_traj));
  if (!std::isfinite(g.burn_in) || g.burn_in < 0.0 || !(g.burn_in < g.window))
    throw InvalidInput(fmt::format("burn_in must lie in [0, window) (got {} ns)", g.burn_in));
}

JumpScheme parse_jump_scheme(std::string_view name) {
  if (name == "bernoulli") return JumpScheme::Bernoulli;
  if (name == "hazard") return JumpScheme::Hazard;
  throw InvalidInput(fmt::format("unknown jump scheme '{}' (expected bernoulli|hazard)", name));
}

const char* to_string(JumpScheme scheme) noexcept {
  return scheme == JumpScheme::Hazard ? "hazard" : "bernoulli";
}

double step(double omega, const NoiseParams& params, double dt, double noise, std::optional<double> jump) {
  const double j = jump.value_or(0.0);
  if (!std::isfinite(omega) || !std::isfinite(dt) || !std::isfinite(noise) || !std::isfinite(j))
    throw InvalidInput("step: non-finite input");
  if (!(dt > 0.0)) throw InvalidInput("step: dt must be > 0");
  validate(params, /*allow_deterministic=*/true);
  return euler_step(omega, params.omega0, params.tau_sd, params.S, dt, noise, j);
}

bool check_jump_resolution(const NoiseParams& params, double dt) {
  const double p = params.lambda_j * dt;
  if (p > 1.0)
    throw TimeStepTooCoarse(fmt::format(
        "lambda_J * dt = {:.3g} exceeds 1; reduce dt below {:.3g} ns", p, 1.0 / params.lambda_j));
  return p > kCoarseJumpProbability;
}

}  // namespace specdiff
