#include "specdiff/output.hpp"

#include <fstream>

#include <fmt/format.h>

namespace specdiff {

void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw ResourceError(fmt::format("cannot create directory '{}': {}", path.parent_path().string(), ec.message()));
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ResourceError(fmt::format("cannot open '{}' for writing", path.string()));
  body(out);
  out.flush();
  if (!out) throw ResourceError(fmt::format("write to '{}' failed", path.string()));
}

nlohmann::ordered_json to_json(const GaussianFit& f) {
  return {{"mu", f.mu},
          {"sigma_fit", f.sigma_fit},
          {"fwhm", f.fwhm},
          {"residual_rms", f.residual_rms},
          {"skewness", f.skewness},
          {"excess_kurtosis", f.excess_kurtosis},
          {"amplitude", f.amplitude},
          {"fwhm_stderr", f.fwhm_stderr}};
}

nlohmann::ordered_json to_json(const EnsembleStatistics& s) {
  return {{"samples", s.pooled.count},
          {"mean_GHz", s.pooled.mean},
          {"variance_GHz2", s.pooled.variance},
          {"skewness", s.pooled.skewness},
          {"excess_kurtosis", s.pooled.excess_kurtosis},
          {"min_GHz", s.pooled.min},
          {"max_GHz", s.pooled.max},
          {"jumps_total", s.jumps.total},
          {"jumps_mean_per_traj", s.jumps.mean},
          {"jumps_variance_per_traj", s.jumps.variance},
          {"final_mean_GHz", s.final_mean},
          {"final_variance_GHz2", s.final_variance}};
}

nlohmann::ordered_json to_json(const NoiseParams& p) {
  return {{"omega0_GHz", p.omega0},
          {"tau_sd_ns", p.tau_sd},
          {"S_GHz", p.S},
          {"lambdaJ_Hz", p.lambda_j_hz()},
          {"sigmaJ_GHz", p.sigma_j}};
}

std::string tag(double value) { return fmt::format("{:g}", value); }

}  // namespace specdiff
