#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>

#include <Eigen/Core>

#include "specdiff/noise_model.hpp"

namespace specdiff {

/// Pooled sample moments. Variance, skewness and kurtosis are population
/// (1/n) estimators.
struct PooledMoments {
  std::int64_t count = 0;
  double mean = 0.0;
  double variance = 0.0;
  double skewness = 0.0;
  double excess_kurtosis = 0.0;
  double min = std::numeric_limits<double>::infinity();
  double max = -std::numeric_limits<double>::infinity();

  double stddev() const;
};

/// Power sums about a fixed shift, merged in a caller-defined order.
class MomentAccumulator {
 public:
  explicit MomentAccumulator(double shift = 0.0) : shift_(shift) {}

  void add(double x) {
    const double d = x - shift_;
    const double d2 = d * d;
    s1_ += d;
    s2_ += d2;
    s3_ += d2 * d;
    s4_ += d2 * d2;
    ++n_;
    if (x < min_) min_ = x;
    if (x > max_) max_ = x;
  }

  void merge(const MomentAccumulator& other);
  std::int64_t count() const { return n_; }
  PooledMoments result() const;

 private:
  double shift_;
  long double s1_ = 0, s2_ = 0, s3_ = 0, s4_ = 0;
  std::int64_t n_ = 0;
  double min_ = std::numeric_limits<double>::infinity();
  double max_ = -std::numeric_limits<double>::infinity();
};

struct JumpCountStats {
  std::int64_t total = 0;
  double mean = 0.0;      ///< per trajectory
  double variance = 0.0;  ///< across trajectories (1/(n-1))

  /// Standard error of `mean`.
  double standard_error(std::int64_t n_traj) const;
};

/// Summary of an ensemble: pooled post-burn-in moments, jump counts and the
/// ensemble mean/variance at the final time.
struct EnsembleStatistics {
  PooledMoments pooled;
  JumpCountStats jumps;
  double final_mean = 0.0;
  double final_variance = 0.0;
};

struct RunOptions {
  unsigned threads = 0;  ///< 0 = hardware concurrency
  /// Cap on n_traj * samples_per_trajectory for stored ensembles.
  std::int64_t max_stored_samples = 50'000'000;
  bool allow_deterministic = false;
};

/// Stored detuning time series. Row i is trajectory i, column k is t = k dt.
struct TrajectoryEnsemble {
  using SampleMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  SimGrid grid;
  NoiseParams params;
  JumpScheme scheme = JumpScheme::Bernoulli;
  SampleMatrix samples;
  Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1> jump_counts;

  std::int64_t n_traj() const { return samples.rows(); }
  double time(std::int64_t k) const { return static_cast<double>(k) * grid.dt; }
  /// Post-burn-in part of trajectory i.
  auto retained(std::int64_t i) const {
    return samples.row(i).tail(grid.retained_per_trajectory());
  }
};

/// Simulates and stores the full ensemble. Throws ResourceError when the
/// sample count exceeds `opts.max_stored_samples`; use accumulate_statistics
/// (or the streaming lineshape functions) for large runs.
TrajectoryEnsemble simulate_ensemble(const NoiseParams& params, const SimGrid& grid, JumpScheme scheme,
                                     const RunOptions& opts = {});

/// Single streaming pass; nothing is stored.
EnsembleStatistics accumulate_statistics(const NoiseParams& params, const SimGrid& grid, JumpScheme scheme,
                                         const RunOptions& opts = {});

EnsembleStatistics statistics(const TrajectoryEnsemble& ensemble);

/// Trajectories per work chunk; fixed so reductions are worker-count independent.
inline constexpr std::int64_t kTrajectoryChunk = 64;

/// Validates inputs and emits the coarse-jump warning once.
void prepare_run(const NoiseParams& params, const SimGrid& grid, const RunOptions& opts);

/// CSV `t_ns,omega_GHz,traj_id`, 9 significant digits, first `max_traj` trajectories.
void write_trajectories_csv(std::ostream& out, const TrajectoryEnsemble& ensemble,
                            std::int64_t max_traj = std::numeric_limits<std::int64_t>::max());

}  // namespace specdiff
