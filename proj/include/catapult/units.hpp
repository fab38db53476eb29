#pragma once

#include <numbers>

// All quantities are SI internally: angular frequencies in rad/s, times in s.
// The CLI and config files speak kHz/MHz (meaning omega/2pi) and microseconds.
namespace catapult::units {

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

constexpr double khz(double f) { return two_pi * 1e3 * f; }
constexpr double mhz(double f) { return two_pi * 1e6 * f; }
constexpr double us(double t) { return 1e-6 * t; }

constexpr double to_khz(double omega) { return omega / (two_pi * 1e3); }
constexpr double to_mhz(double omega) { return omega / (two_pi * 1e6); }
constexpr double to_us(double t) { return t * 1e6; }

/// Rate given as a lifetime 1/rate in microseconds.
constexpr double per_us(double lifetime_us) { return 1.0 / (1e-6 * lifetime_us); }

}  // namespace catapult::units
