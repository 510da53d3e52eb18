#pragma once

// Hybrid Ornstein-Uhlenbeck + Gaussian-jump detuning process, Euler-Maruyama.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string_view>

#include <boost/random/exponential_distribution.hpp>
#include <boost/random/normal_distribution.hpp>

#include "specdiff/rng.hpp"
#include "specdiff/units.hpp"

namespace specdiff {

/// Instantaneous noise-model parameters at one temperature.
struct NoiseParams {
  double omega0 = 0.0;    ///< mean detuning [GHz]
  double tau_sd = 0.5;    ///< diffusion correlation time [ns]
  double S = 0.0;         ///< diffusion strength [GHz]
  double lambda_j = 0.0;  ///< jump rate [1/ns]
  double sigma_j = 0.0;   ///< jump amplitude std [GHz]

  static NoiseParams with_rate_hz(double omega0, double tau_sd, double S, double lambda_hz,
                                  double sigma_j) {
    return {omega0, tau_sd, S, units::per_ns_from_hz(lambda_hz), sigma_j};
  }
  double lambda_j_hz() const { return units::hz_from_per_ns(lambda_j); }

  bool deterministic() const { return S == 0.0 && lambda_j * sigma_j == 0.0; }

  friend bool operator==(const NoiseParams&, const NoiseParams&) = default;
};

/// Throws InvalidInput. A noiseless parameter set is rejected unless
/// `allow_deterministic` is set.
void validate(const NoiseParams& params, bool allow_deterministic = false);

/// Time discretisation and ensemble size.
struct SimGrid {
  double dt = 1e-3;             ///< [ns]
  double window = 10.0;         ///< total simulated time [ns]
  std::int64_t n_traj = 100000;
  std::uint64_t seed = 0;
  double burn_in = 1.0;         ///< excluded from statistics [ns]

  /// floor(window / dt), robust to representation error in the ratio.
  std::int64_t steps() const;
  std::int64_t samples_per_trajectory() const { return steps() + 1; }
  /// Index of the first sample at or after `burn_in`.
  std::int64_t first_retained() const;
  std::int64_t retained_per_trajectory() const { return samples_per_trajectory() - first_retained(); }
};

void validate(const SimGrid& grid);

enum class JumpScheme { Bernoulli, Hazard };

JumpScheme parse_jump_scheme(std::string_view name);
const char* to_string(JumpScheme scheme) noexcept;

/// One Euler-Maruyama update:
///   omega - (omega - omega0)/tau dt + S sqrt(1/(2 tau)) noise sqrt(dt) + jump
template <typename Scalar>
inline Scalar euler_step(Scalar omega, Scalar omega0, Scalar tau, Scalar S, Scalar dt, Scalar noise,
                         Scalar jump) {
  using std::sqrt;
  return omega - (omega - omega0) / tau * dt + S * sqrt(Scalar(1) / (Scalar(2) * tau)) * noise * sqrt(dt) +
         jump;
}

/// Checked single step. Throws InvalidInput on non-finite input or invalid params.
double step(double omega, const NoiseParams& params, double dt, double noise,
            std::optional<double> jump = std::nullopt);

/// lambda_j * dt above this is accepted but reported as coarse.
inline constexpr double kCoarseJumpProbability = 0.1;

/// Returns true when lambda_j * dt exceeds kCoarseJumpProbability.
/// Throws TimeStepTooCoarse when lambda_j * dt > 1.
bool check_jump_resolution(const NoiseParams& params, double dt);

/// Per-step Bernoulli jumps: with probability lambda_j dt emit N(0, sigma_j^2).
/// Draw order: one 64-bit word for the trial, then one normal on success.
class BernoulliJumps {
 public:
  BernoulliJumps(const NoiseParams& params, double dt)
      : threshold_(bernoulli_threshold(params.lambda_j * dt)), sigma_j_(params.sigma_j) {
    check_jump_resolution(params, dt);
  }

  template <class Engine>
  std::optional<double> operator()(Engine& engine) {
    if (engine() >= threshold_ || threshold_ == 0) return std::nullopt;
    return sigma_j_ * normal_(engine);
  }

 private:
  std::uint64_t threshold_;
  double sigma_j_;
  boost::random::normal_distribution<double> normal_;
};

/// Accumulated-hazard jumps. A unit-mean exponential threshold E is drawn at
/// construction and after every jump; each step adds lambda_j dt to the
/// hazard H, and a jump fires (H reset to 0) once H >= E.
class HazardJumps {
 public:
  template <class Engine>
  HazardJumps(const NoiseParams& params, double dt, Engine& engine)
      : increment_(params.lambda_j * dt), sigma_j_(params.sigma_j) {
    check_jump_resolution(params, dt);
    threshold_ = exponential_(engine);
  }

  template <class Engine>
  std::optional<double> operator()(Engine& engine) {
    if (increment_ <= 0.0) return std::nullopt;
    hazard_ += increment_;
    if (hazard_ < threshold_) return std::nullopt;
    const double jump = sigma_j_ * normal_(engine);
    hazard_ = 0.0;
    threshold_ = exponential_(engine);
    return jump;
  }

  double hazard() const { return hazard_; }
  double threshold() const { return threshold_; }

 private:
  double increment_;
  double sigma_j_;
  double hazard_ = 0.0;
  double threshold_ = 0.0;
  boost::random::normal_distribution<double> normal_;
  boost::random::exponential_distribution<double> exponential_;
};

template <class Engine>
std::optional<double> sample_jump_bernoulli(const NoiseParams& params, double dt, Engine& engine) {
  return BernoulliJumps(params, dt)(engine);
}

template <class Engine>
std::optional<double> sample_jump_hazard(HazardJumps& state, Engine& engine) {
  return state(engine);
}

namespace detail {

template <class Jumps, class Visitor>
std::int64_t run_trajectory(const NoiseParams& p, const SimGrid& grid, Xoshiro256pp& engine, Jumps& jumps,
                            Visitor& visit) {
  boost::random::normal_distribution<double> normal;
  const std::int64_t steps = grid.steps();
  const double dt = grid.dt;
  const double decay = dt / p.tau_sd;
  const double kick = p.S * std::sqrt(1.0 / (2.0 * p.tau_sd)) * std::sqrt(dt);
  std::int64_t n_jumps = 0;
  double omega = p.omega0;
  visit(std::int64_t{0}, omega);
  for (std::int64_t k = 1; k <= steps; ++k) {
    const double noise = normal(engine);
    double jump = 0.0;
    if (auto j = jumps(engine)) {
      jump = *j;
      ++n_jumps;
    }
    omega = omega - (omega - p.omega0) * decay + kick * noise + jump;
    visit(k, omega);
  }
  return n_jumps;
}

}  // namespace detail

/// Generates trajectory `index` of the ensemble described by (params, grid,
/// scheme), starting at omega0, and calls visit(k, omega_k) for every sample
/// k = 0..steps. Returns the number of jumps. The generator is seeded with
/// sub_seed(grid.seed, index), so a trajectory is reproducible on its own.
///
/// Per step the draws are: one standard normal (diffusion), then the jump
/// scheme's draws.
template <class Visitor>
std::int64_t generate_trajectory(const NoiseParams& params, const SimGrid& grid, JumpScheme scheme,
                                 std::int64_t index, Visitor&& visit) {
  Xoshiro256pp engine(sub_seed(grid.seed, static_cast<std::uint64_t>(index)));
  if (scheme == JumpScheme::Hazard) {
    HazardJumps jumps(params, grid.dt, engine);
    return detail::run_trajectory(params, grid, engine, jumps, visit);
  }
  BernoulliJumps jumps(params, grid.dt);
  return detail::run_trajectory(params, grid, engine, jumps, visit);
}

}  // namespace specdiff
