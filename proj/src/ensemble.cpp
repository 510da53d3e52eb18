#include "specdiff/ensemble.hpp"

#include <cmath>
#include <iostream>
#include <mutex>
#include <vector>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "specdiff/errors.hpp"
#include "specdiff/parallel.hpp"

namespace specdiff {

namespace {

std::mutex& warning_mutex() {
  static std::mutex m;
  return m;
}

WarningHandler& warning_handler() {
  static WarningHandler handler = [](std::string_view msg) { std::clog << "warning: " << msg << '\n'; };
  return handler;
}

}  // namespace

WarningHandler set_warning_handler(WarningHandler handler) {
  std::lock_guard lock(warning_mutex());
  auto previous = std::move(warning_handler());
  warning_handler() = std::move(handler);
  return previous;
}

void warn(std::string_view message) {
  std::lock_guard lock(warning_mutex());
  if (warning_handler()) warning_handler()(message);
}

double PooledMoments::stddev() const { return std::sqrt(variance); }

void MomentAccumulator::merge(const MomentAccumulator& other) {
  if (other.shift_ != shift_) throw InvalidInput("MomentAccumulator::merge: mismatched shifts");
  s1_ += other.s1_;
  s2_ += other.s2_;
  s3_ += other.s3_;
  s4_ += other.s4_;
  n_ += other.n_;
  min_ = std::min(min_, other.min_);
  max_ = std::max(max_, other.max_);
}

PooledMoments MomentAccumulator::result() const {
  PooledMoments m;
  m.count = n_;
  m.min = min_;
  m.max = max_;
  if (n_ == 0) return m;
  const long double n = static_cast<long double>(n_);
  const long double m1 = s1_ / n, m2 = s2_ / n, m3 = s3_ / n, m4 = s4_ / n;
  const long double c2 = std::max(0.0L, m2 - m1 * m1);
  const long double c3 = m3 - 3 * m1 * m2 + 2 * m1 * m1 * m1;
  const long double c4 = m4 - 4 * m1 * m3 + 6 * m1 * m1 * m2 - 3 * m1 * m1 * m1 * m1;
  m.mean = static_cast<double>(shift_ + m1);
  m.variance = static_cast<double>(c2);
  if (c2 > 0) {
    m.skewness = static_cast<double>(c3 / std::pow(c2, 1.5L));
    m.excess_kurtosis = static_cast<double>(c4 / (c2 * c2) - 3);
  }
  return m;
}

double JumpCountStats::standard_error(std::int64_t n_traj) const {
  return n_traj > 0 ? std::sqrt(variance / static_cast<double>(n_traj)) : 0.0;
}

void prepare_run(const NoiseParams& params, const SimGrid& grid, const RunOptions& opts) {
  validate(params, opts.allow_deterministic);
  validate(grid);
  if (check_jump_resolution(params, grid.dt))
    warn(fmt::format("lambda_J * dt = {:.3g} > {}: jump discretisation is coarse", params.lambda_j * grid.dt,
                     kCoarseJumpProbability));
}

namespace {

struct ChunkStats {
  MomentAccumulator pooled;
  MomentAccumulator final_value;
  MomentAccumulator jumps{0.0};
};

// Reduces per-chunk summaries in chunk order.
EnsembleStatistics reduce(const std::vector<ChunkStats>& chunks, double shift, std::int64_t n_traj) {
  MomentAccumulator pooled(shift), final_value(shift), jumps(0.0);
  for (const auto& c : chunks) {
    pooled.merge(c.pooled);
    final_value.merge(c.final_value);
    jumps.merge(c.jumps);
  }
  EnsembleStatistics s;
  s.pooled = pooled.result();
  const auto fm = final_value.result();
  s.final_mean = fm.mean;
  s.final_variance = fm.variance;
  const auto jm = jumps.result();
  s.jumps.mean = jm.mean;
  s.jumps.total = static_cast<std::int64_t>(std::llround(jm.mean * static_cast<double>(jm.count)));
  s.jumps.variance = n_traj > 1 ? jm.variance * static_cast<double>(n_traj) / static_cast<double>(n_traj - 1) : 0.0;
  return s;
}

}  // namespace

EnsembleStatistics accumulate_statistics(const NoiseParams& params, const SimGrid& grid, JumpScheme scheme,
                                         const RunOptions& opts) {
  prepare_run(params, grid, opts);
  const std::int64_t first = grid.first_retained();
  const std::int64_t last = grid.steps();
  const double shift = params.omega0;
  const std::int64_t n_chunks = (grid.n_traj + kTrajectoryChunk - 1) / kTrajectoryChunk;
  std::vector<ChunkStats> chunks(static_cast<std::size_t>(n_chunks),
                                 ChunkStats{MomentAccumulator(shift), MomentAccumulator(shift), MomentAccumulator(0.0)});
  parallel_chunks(grid.n_traj, kTrajectoryChunk, opts.threads, [&](std::int64_t c, std::int64_t b, std::int64_t e) {
    ChunkStats& out = chunks[static_cast<std::size_t>(c)];
    for (std::int64_t i = b; i < e; ++i) {
      MomentAccumulator local(shift);
      double final_value = shift;
      const std::int64_t n_jumps = generate_trajectory(params, grid, scheme, i, [&](std::int64_t k, double w) {
        if (k >= first) local.add(w);
        if (k == last) final_value = w;
      });
      out.pooled.merge(local);
      out.final_value.add(final_value);
      out.jumps.add(static_cast<double>(n_jumps));
    }
  });
  return reduce(chunks, shift, grid.n_traj);
}

TrajectoryEnsemble simulate_ensemble(const NoiseParams& params, const SimGrid& grid, JumpScheme scheme,
                                     const RunOptions& opts) {
  prepare_run(params, grid, opts);
  const std::int64_t per_traj = grid.samples_per_trajectory();
  if (grid.n_traj > opts.max_stored_samples / per_traj)
    throw ResourceError(fmt::format(
        "ensemble of {} x {} samples exceeds the stored-sample cap of {}; use streaming statistics "
        "(accumulate_statistics / measure_lineshape) instead",
        grid.n_traj, per_traj, opts.max_stored_samples));

  TrajectoryEnsemble ens;
  ens.grid = grid;
  ens.params = params;
  ens.scheme = scheme;
  ens.samples.resize(grid.n_traj, per_traj);
  ens.jump_counts.resize(grid.n_traj);
  parallel_chunks(grid.n_traj, kTrajectoryChunk, opts.threads, [&](std::int64_t, std::int64_t b, std::int64_t e) {
    for (std::int64_t i = b; i < e; ++i) {
      double* row = ens.samples.row(i).data();
      ens.jump_counts(i) = generate_trajectory(params, grid, scheme, i, [row](std::int64_t k, double w) { row[k] = w; });
    }
  });
  return ens;
}

EnsembleStatistics statistics(const TrajectoryEnsemble& ens) {
  const double shift = ens.params.omega0;
  const std::int64_t n_chunks = (ens.n_traj() + kTrajectoryChunk - 1) / kTrajectoryChunk;
  std::vector<ChunkStats> chunks(static_cast<std::size_t>(n_chunks),
                                 ChunkStats{MomentAccumulator(shift), MomentAccumulator(shift), MomentAccumulator(0.0)});
  for (std::int64_t i = 0; i < ens.n_traj(); ++i) {
    ChunkStats& out = chunks[static_cast<std::size_t>(i / kTrajectoryChunk)];
    MomentAccumulator local(shift);
    for (double w : ens.retained(i)) local.add(w);
    out.pooled.merge(local);
    out.final_value.add(ens.samples(i, ens.samples.cols() - 1));
    out.jumps.add(static_cast<double>(ens.jump_counts(i)));
  }
  return reduce(chunks, shift, ens.n_traj());
}

void write_trajectories_csv(std::ostream& out, const TrajectoryEnsemble& ens, std::int64_t max_traj) {
  fmt::print(out, "t_ns,omega_GHz,traj_id\n");
  const std::int64_t n = std::min(max_traj, ens.n_traj());
  for (std::int64_t i = 0; i < n; ++i)
    for (std::int64_t k = 0; k < ens.samples.cols(); ++k)
      fmt::print(out, "{:.9g},{:.9g},{}\n", ens.time(k), ens.samples(i, k), i);
}

}  // namespace specdiff
