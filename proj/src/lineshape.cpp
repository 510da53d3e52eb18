#include "specdiff/lineshape.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <ostream>
#include <vector>

#include <Eigen/Dense>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "specdiff/parallel.hpp"

namespace specdiff {

Eigen::VectorXd Histogram::centers() const {
  return 0.5 * (edges.head(n_bins()) + edges.tail(n_bins()));
}

Eigen::VectorXd Histogram::densities() const {
  const double norm = static_cast<double>(total) * width();
  return counts.cast<double>() / norm;
}

int Histogram::occupied_bins() const { return static_cast<int>((counts.array() > 0).count()); }

int Histogram::bin_of(double x) const {
  const double lo = edges(0);
  const int n = n_bins();
  const double f = (x - lo) / width();
  if (!(f >= 0.0)) return 0;
  return std::min(n - 1, static_cast<int>(f));
}

namespace {

using Counts = Eigen::Matrix<std::int64_t, Eigen::Dynamic, 1>;

Eigen::VectorXd uniform_edges(double lo, double hi, int n) {
  Eigen::VectorXd e(n + 1);
  const double w = (hi - lo) / n;
  for (int i = 0; i <= n; ++i) e(i) = lo + w * i;
  e(n) = hi;
  return e;
}

// Range used for the bins: [min, max], widened symmetrically when degenerate.
std::pair<double, double> bin_range(double lo, double hi) {
  if (hi > lo) return {lo, hi};
  const double half = std::max(std::abs(lo), 1.0) * 1e-9;
  return {lo - half, hi + half};
}

int freedman_diaconis(double range, double iqr, std::int64_t n) {
  if (!(iqr > 0.0) || !(range > 0.0)) return kMinAutoBins;
  const double h = 2.0 * iqr / std::cbrt(static_cast<double>(n));
  const double bins = std::ceil(range / h);
  return static_cast<int>(std::clamp(bins, double(kMinAutoBins), double(kMaxBins)));
}

void check_samples(std::int64_t n) {
  if (n < kMinHistogramSamples)
    throw InsufficientData(
        fmt::format("{} pooled samples; at least {} are needed for a histogram", n, kMinHistogramSamples));
}

void check_bins(int n) {
  if (n < 1 || n > kMaxBins) throw InvalidInput(fmt::format("n_bins must lie in [1, {}] (got {})", kMaxBins, n));
}

Histogram fill(std::span<const double> samples, Eigen::VectorXd edges, const PooledMoments& m) {
  Histogram h;
  h.edges = std::move(edges);
  h.counts = Counts::Zero(h.edges.size() - 1);
  h.total = static_cast<std::int64_t>(samples.size());
  h.moments = m;
  for (double x : samples) ++h.counts(h.bin_of(x));
  return h;
}

PooledMoments moments_of(std::span<const double> samples) {
  MomentAccumulator acc(samples.empty() ? 0.0 : samples[0]);
  for (double x : samples) acc.add(x);
  return acc.result();
}

// Quantile of the binned data, linear within a bin.
double binned_quantile(const Histogram& h, double q) {
  const double target = q * static_cast<double>(h.total);
  double cum = 0.0;
  const double w = h.width();
  for (int i = 0; i < h.n_bins(); ++i) {
    const double c = static_cast<double>(h.counts(i));
    if (cum + c >= target && c > 0) return h.edges(i) + w * (target - cum) / c;
    cum += c;
  }
  return h.edges(h.n_bins());
}

Histogram merge_bins(const Histogram& fine, int factor) {
  if (factor <= 1) return fine;
  const int n = fine.n_bins() / factor;
  Histogram h;
  h.edges.resize(n + 1);
  for (int i = 0; i <= n; ++i) h.edges(i) = fine.edges(i * factor);
  h.counts = Counts::Zero(n);
  for (int i = 0; i < n; ++i) h.counts(i) = fine.counts.segment(i * factor, factor).sum();
  h.total = fine.total;
  h.moments = fine.moments;
  return h;
}

struct Source {
  NoiseParams params;
  SimGrid grid;
  JumpScheme scheme;
};

// Pass over the retained samples of every trajectory, filling `edges`.
// Counts are integers, so merging under a lock is order independent.
Histogram stream_fill(const Source& s, const RunOptions& opts, const Eigen::VectorXd& edges,
                      const PooledMoments& moments) {
  Histogram h;
  h.edges = edges;
  h.counts = Counts::Zero(edges.size() - 1);
  h.moments = moments;
  const std::int64_t first = s.grid.first_retained();
  std::mutex merge;
  parallel_chunks(s.grid.n_traj, kTrajectoryChunk, opts.threads, [&](std::int64_t, std::int64_t b, std::int64_t e) {
    Counts local = Counts::Zero(h.counts.size());
    std::int64_t n = 0;
    for (std::int64_t i = b; i < e; ++i)
      generate_trajectory(s.params, s.grid, s.scheme, i, [&](std::int64_t k, double w) {
        if (k >= first) {
          ++local(h.bin_of(w));
          ++n;
        }
      });
    std::lock_guard lock(merge);
    h.counts += local;
    h.total += n;
  });
  return h;
}

constexpr int kFineBins = 1 << 16;

// Auto-binned histograms of several sources on one shared grid. The range is
// the union of the sources' ranges; the bin rule is evaluated on the first
// source. Freedman-Diaconis is applied to a fine histogram and the final bin
// count is the fine count divided by a power of two (so at least the FD
// count, at most twice it).
std::vector<Histogram> shared_histograms(const std::vector<Source>& sources, const RunOptions& opts,
                                         std::optional<int> n_bins, std::vector<EnsembleStatistics>* stats_out) {
  std::vector<EnsembleStatistics> stats;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& s : sources) {
    stats.push_back(accumulate_statistics(s.params, s.grid, s.scheme, opts));
    check_samples(stats.back().pooled.count);
    lo = std::min(lo, stats.back().pooled.min);
    hi = std::max(hi, stats.back().pooled.max);
  }
  const auto [a, b] = bin_range(lo, hi);
  std::vector<Histogram> out;
  if (n_bins) {
    check_bins(*n_bins);
    const Eigen::VectorXd edges = uniform_edges(a, b, *n_bins);
    for (std::size_t i = 0; i < sources.size(); ++i) out.push_back(stream_fill(sources[i], opts, edges, stats[i].pooled));
  } else if (!(hi > lo)) {
    const Eigen::VectorXd edges = uniform_edges(a, b, kMinAutoBins);
    for (std::size_t i = 0; i < sources.size(); ++i) out.push_back(stream_fill(sources[i], opts, edges, stats[i].pooled));
  } else {
    const Eigen::VectorXd fine_edges = uniform_edges(a, b, kFineBins);
    std::vector<Histogram> fine;
    for (std::size_t i = 0; i < sources.size(); ++i)
      fine.push_back(stream_fill(sources[i], opts, fine_edges, stats[i].pooled));
    const double iqr = binned_quantile(fine[0], 0.75) - binned_quantile(fine[0], 0.25);
    const int target = freedman_diaconis(b - a, iqr, fine[0].total);
    int factor = 1;
    while (kFineBins / (factor * 2) >= target) factor *= 2;
    for (const auto& f : fine) out.push_back(merge_bins(f, factor));
  }
  if (stats_out) *stats_out = std::move(stats);
  return out;
}

}  // namespace

Histogram build_histogram(std::span<const double> samples, std::optional<int> n_bins) {
  check_samples(static_cast<std::int64_t>(samples.size()));
  const PooledMoments m = moments_of(samples);
  const auto [a, b] = bin_range(m.min, m.max);
  int n = kMinAutoBins;
  if (n_bins) {
    check_bins(*n_bins);
    n = *n_bins;
  } else if (m.max > m.min) {
    std::vector<double> sorted(samples.begin(), samples.end());
    const auto q = [&](double p) {
      const auto k = static_cast<std::size_t>(p * static_cast<double>(sorted.size() - 1));
      std::nth_element(sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k), sorted.end());
      return sorted[k];
    };
    const double q1 = q(0.25);
    const double q3 = q(0.75);
    n = freedman_diaconis(m.max - m.min, q3 - q1, m.count);
  }
  return fill(samples, uniform_edges(a, b, n), m);
}

Histogram build_histogram(const TrajectoryEnsemble& ens, std::optional<int> n_bins) {
  const std::int64_t per = ens.grid.retained_per_trajectory();
  std::vector<double> pooled;
  pooled.reserve(static_cast<std::size_t>(per * ens.n_traj()));
  for (std::int64_t i = 0; i < ens.n_traj(); ++i)
    for (double w : ens.retained(i)) pooled.push_back(w);
  Histogram h = build_histogram(std::span<const double>(pooled), n_bins);
  // Report moments with the same chunked reduction as the streaming path.
  h.moments = statistics(ens).pooled;
  return h;
}

Histogram build_histogram(const NoiseParams& params, const SimGrid& grid, JumpScheme scheme, const RunOptions& opts,
                          std::optional<int> n_bins) {
  return shared_histograms({Source{params, grid, scheme}}, opts, n_bins, nullptr).front();
}

Histogram histogram_on_edges(std::span<const double> samples, const Eigen::VectorXd& edges) {
  if (edges.size() < 2) throw InvalidInput("histogram needs at least two edges");
  return fill(samples, edges, moments_of(samples));
}

Histogram histogram_on_edges(const NoiseParams& params, const SimGrid& grid, JumpScheme scheme,
                             const Eigen::VectorXd& edges, const RunOptions& opts) {
  if (edges.size() < 2) throw InvalidInput("histogram needs at least two edges");
  const auto stats = accumulate_statistics(params, grid, scheme, opts);
  return stream_fill(Source{params, grid, scheme}, opts, edges, stats.pooled);
}

GaussianFit moment_fit(const Histogram& hist) {
  GaussianFit f;
  f.mu = hist.moments.mean;
  f.sigma_fit = hist.moments.stddev();
  f.amplitude = f.sigma_fit > 0 ? 1.0 / (f.sigma_fit * std::sqrt(units::kTwoPi)) : 0.0;
  f.fwhm = units::kFwhmPerSigma * f.sigma_fit;
  f.skewness = hist.moments.skewness;
  f.excess_kurtosis = hist.moments.excess_kurtosis;
  return f;
}

GaussianFit fit_gaussian(const Histogram& hist) {
  GaussianFit fallback = moment_fit(hist);
  const int occupied = hist.occupied_bins();
  if (occupied < kMinOccupiedBins)
    throw FitFailure(fmt::format("{} occupied bins; a Gaussian fit needs at least {}", occupied, kMinOccupiedBins),
                     fallback);
  if (!(fallback.sigma_fit > 0.0)) throw FitFailure("zero sample variance", fallback);

  const Eigen::VectorXd x = hist.centers();
  const Eigen::VectorXd y = hist.densities();
  const Eigen::Index n = x.size();

  Eigen::Vector3d p(fallback.amplitude, fallback.mu, fallback.sigma_fit);
  auto residuals = [&](const Eigen::Vector3d& q, Eigen::VectorXd& r, Eigen::MatrixXd* J) {
    r.resize(n);
    if (J) J->resize(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double z = (x(i) - q(1)) / q(2);
      const double g = std::exp(-0.5 * z * z);
      r(i) = q(0) * g - y(i);
      if (J) {
        (*J)(i, 0) = g;
        (*J)(i, 1) = q(0) * g * z / q(2);
        (*J)(i, 2) = q(0) * g * z * z / q(2);
      }
    }
  };

  Eigen::VectorXd r;
  Eigen::MatrixXd J;
  residuals(p, r, &J);
  double cost = r.squaredNorm();
  double mu_damp = 1e-3 * (J.transpose() * J).diagonal().maxCoeff();
  double nu = 2.0;
  bool converged = false;
  int it = 0;
  for (; it < kMaxFitIterations && !converged; ++it) {
    const Eigen::Matrix3d A = J.transpose() * J;
    const Eigen::Vector3d g = J.transpose() * r;
    if (g.lpNorm<Eigen::Infinity>() <= 1e-14 * std::max(1.0, cost)) {
      converged = true;
      break;
    }
    Eigen::Matrix3d damped = A;
    damped.diagonal().array() += mu_damp * A.diagonal().array().max(1e-300);
    const Eigen::Vector3d delta = damped.ldlt().solve(-g);
    if (delta.norm() <= 1e-12 * (p.norm() + 1e-12)) {
      converged = true;
      break;
    }
    const Eigen::Vector3d trial = p + delta;
    if (!(trial(2) > 0.0) || !(trial(0) > 0.0)) {
      mu_damp *= nu;
      nu *= 2.0;
      continue;
    }
    Eigen::VectorXd r_trial;
    residuals(trial, r_trial, nullptr);
    const double trial_cost = r_trial.squaredNorm();
    const double predicted = delta.dot(mu_damp * A.diagonal().cwiseMax(1e-300).cwiseProduct(delta) - g);
    const double rho = predicted > 0 ? (cost - trial_cost) / predicted : -1.0;
    if (rho > 0) {
      const double rel = (cost - trial_cost) / std::max(cost, 1e-300);
      p = trial;
      cost = trial_cost;
      residuals(p, r, &J);
      mu_damp *= std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
      nu = 2.0;
      if (rel < 1e-14) converged = true;
    } else {
      mu_damp *= nu;
      nu *= 2.0;
    }
  }
  if (!converged || !p.allFinite())
    throw FitFailure(fmt::format("Gaussian fit did not converge in {} iterations", kMaxFitIterations), fallback);

  GaussianFit f;
  f.amplitude = p(0);
  f.mu = p(1);
  f.sigma_fit = p(2);
  f.fwhm = units::kFwhmPerSigma * f.sigma_fit;
  f.residual_rms = std::sqrt(cost / static_cast<double>(n));
  if (n > 3) {
    const Eigen::Matrix3d cov = (J.transpose() * J).inverse() * (cost / static_cast<double>(n - 3));
    f.fwhm_stderr = units::kFwhmPerSigma * std::sqrt(std::max(0.0, cov(2, 2)));
  }
  f.skewness = hist.moments.skewness;
  f.excess_kurtosis = hist.moments.excess_kurtosis;
  f.iterations = it;
  return f;
}

double analytic_variance(const NoiseParams& p) {
  return stationary_variance(p.S, p.lambda_j, p.sigma_j, p.tau_sd);
}

double analytic_fwhm(const NoiseParams& p) { return units::kFwhmPerSigma * std::sqrt(analytic_variance(p)); }

double discrete_variance(const NoiseParams& p, double dt) {
  const double a = dt / p.tau_sd;
  return (p.S * p.S / (2.0 * p.tau_sd) + p.lambda_j * p.sigma_j * p.sigma_j) * p.tau_sd / (2.0 - a);
}

namespace {

LineShape finish(Histogram hist, EnsembleStatistics stats, const NoiseParams& params) {
  LineShape ls;
  ls.histogram = std::move(hist);
  ls.statistics = stats;
  ls.analytic_variance = analytic_variance(params);
  try {
    ls.fit = fit_gaussian(ls.histogram);
  } catch (const FitFailure& e) {
    ls.fit = e.fallback();
    ls.fit_converged = false;
  }
  return ls;
}

}  // namespace

LineShape measure_lineshape(const NoiseParams& params, const SimGrid& grid, JumpScheme scheme, const RunOptions& opts,
                            std::optional<int> n_bins) {
  std::vector<EnsembleStatistics> stats;
  auto hists = shared_histograms({Source{params, grid, scheme}}, opts, n_bins, &stats);
  return finish(std::move(hists.front()), stats.front(), params);
}

LineShape lineshape_of(const TrajectoryEnsemble& ensemble, std::optional<int> n_bins) {
  return finish(build_histogram(ensemble, n_bins), statistics(ensemble), ensemble.params);
}

NoiseParams matched_ou(const NoiseParams& hybrid) {
  NoiseParams ou = hybrid;
  ou.lambda_j = 0.0;
  ou.sigma_j = 0.0;
  ou.S = 2.0 * std::sqrt(analytic_variance(hybrid));
  return ou;
}

LineShapeComparison compare_ou_vs_hybrid(const NoiseParams& hybrid, const SimGrid& grid, JumpScheme scheme,
                                         const RunOptions& opts) {
  LineShapeComparison cmp;
  cmp.hybrid_params = hybrid;
  cmp.ou_params = matched_ou(hybrid);
  std::vector<EnsembleStatistics> stats;
  auto hists = shared_histograms({Source{hybrid, grid, scheme}, Source{cmp.ou_params, grid, scheme}}, opts,
                                 std::nullopt, &stats);
  cmp.hybrid = finish(std::move(hists[0]), stats[0], hybrid);
  cmp.ou = finish(std::move(hists[1]), stats[1], cmp.ou_params);
  return cmp;
}

void write_histogram_csv(std::ostream& out, const Histogram& hist) {
  const Eigen::VectorXd c = hist.centers();
  const Eigen::VectorXd d = hist.densities();
  fmt::print(out, "omega_GHz,density\n");
  for (Eigen::Index i = 0; i < c.size(); ++i) fmt::print(out, "{:.9g},{:.9g}\n", c(i), d(i));
}

void write_comparison_csv(std::ostream& out, const LineShapeComparison& cmp) {
  const Eigen::VectorXd c = cmp.hybrid.histogram.centers();
  const Eigen::VectorXd dh = cmp.hybrid.histogram.densities();
  const Eigen::VectorXd dou = cmp.ou.histogram.densities();
  fmt::print(out, "omega_GHz,density_hybrid_perGHz,density_ou_perGHz\n");
  for (Eigen::Index i = 0; i < c.size(); ++i) fmt::print(out, "{:.9g},{:.9g},{:.9g}\n", c(i), dh(i), dou(i));
}

}  // namespace specdiff
