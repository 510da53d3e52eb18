#pragma once

#include <filesystem>
#include <functional>
#include <iosfwd>
#include <string>

#include "json.hpp"

#include "specdiff/ensemble.hpp"
#include "specdiff/lineshape.hpp"

namespace specdiff {

/// Writes `path` through `body`, creating parent directories. Throws
/// ResourceError when the file cannot be written.
void write_file(const std::filesystem::path& path, const std::function<void(std::ostream&)>& body);

/// mu, sigma_fit, fwhm, residual_rms, skewness, excess_kurtosis (+ amplitude, fwhm_stderr).
nlohmann::ordered_json to_json(const GaussianFit& fit);
nlohmann::ordered_json to_json(const EnsembleStatistics& stats);
nlohmann::ordered_json to_json(const NoiseParams& params);

/// Number formatted for file names: 20 -> "20", 2.5 -> "2.5".
std::string tag(double value);

}  // namespace specdiff
