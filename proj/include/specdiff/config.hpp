#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "specdiff/calibration.hpp"
#include "specdiff/coherence.hpp"
#include "specdiff/noise_model.hpp"

namespace specdiff {

/// Everything a CLI run reads from the INI file. Sections and keys:
///
///   [law]        A, B
///   [baseline]   T0, sigma0_GHz, lambdaJ0_Hz, sigmaJ0_GHz, tau_sd_ns, omega0_GHz
///   [grid]       dt_ns, window_ns, burn_in_ns, n_traj, seed, scheme, max_samples
///   [simplex]    grid_points, box_min, box_max, tolerance_GHz, max_evals,
///                mc_n_traj, tie_weights, initial, distance_weight
///   [emitter]    T1_ns, T2_ns
///   [dephasing]  kappa, reference_T_K, table, nodes_K, sweep_T_K, sweep_omega_r_GHz
///   [output]     dir, svg, calibration_file
///
/// Lists are comma separated; `table` is "T:value, T:value, ...". Unknown
/// sections or keys are errors. Baseline keys that are absent keep the values
/// of Baseline::reference(law).
struct RunConfig {
  BroadeningLaw law;
  Baseline baseline;
  SimGrid grid;
  JumpScheme scheme = JumpScheme::Bernoulli;
  std::int64_t max_samples = 50'000'000;
  CalibConfig calib;
  std::int64_t mc_n_traj = 10000;
  std::optional<double> T1, T2;  ///< [ns]
  double kappa = kDefaultKappa;
  double reference_T = 30.0;
  std::optional<std::pair<Eigen::VectorXd, Eigen::VectorXd>> dephasing_table;
  std::vector<double> nodes_K = default_crossover_nodes();
  std::vector<double> sweep_T_K{5.0, 20.0, 30.0};
  std::vector<double> sweep_omega_r_GHz{1.0, 1.5, 2.0, 2.5, 3.0, 3.5, 4.0};
  std::filesystem::path out_dir = "out";
  bool svg = true;
  std::optional<std::filesystem::path> calibration_file;

  /// CalibConfig with the Monte-Carlo grid derived from [grid] and mc_n_traj.
  CalibConfig calibration_config() const;
  RunOptions run_options(unsigned threads) const;
  std::optional<EmitterParams> emitter(double omega_R = 0.0) const;
};

RunConfig parse_config(std::istream& in);
RunConfig load_config(const std::filesystem::path& path);
/// Checks cross-field invariants; throws InvalidInput.
void validate(const RunConfig& cfg);

/// "1, 2.5,3" -> {1, 2.5, 3}; throws InvalidInput on malformed input.
std::vector<double> parse_list(const std::string& text);

}  // namespace specdiff
