#pragma once

#include <numbers>

// Unit conventions used throughout:
//   time        ns
//   detuning    GHz, ordinary frequency (no 2*pi inside the noise model)
//   jump rate   1/ns internally, Hz at every user-facing interface
//   Rabi freq.  rad/ns inside the coherence model, GHz at the CLI
namespace specdiff::units {

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// FWHM of a Gaussian in units of its standard deviation, 2*sqrt(2 ln 2).
inline constexpr double kFwhmPerSigma = 2.3548200450309493;

constexpr double per_ns_from_hz(double hz) { return hz * 1e-9; }
constexpr double hz_from_per_ns(double per_ns) { return per_ns * 1e9; }

constexpr double radns_from_ghz(double ghz) { return kTwoPi * ghz; }
constexpr double ghz_from_radns(double radns) { return radns / kTwoPi; }

}  // namespace specdiff::units
