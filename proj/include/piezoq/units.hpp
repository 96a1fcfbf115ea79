#pragma once

#include <cmath>
#include <numbers>

// Unit conventions used throughout the library:
//   - all internal frequencies and couplings are angular (rad/s),
//   - all decay/dephasing/linewidth rates are 1/s,
//   - all file and CLI I/O uses ordinary frequency (Hz), seconds, farads,
//     henries and ohms.
// The conversion happens exactly once, at the I/O boundary.

namespace piezoq {

inline constexpr double two_pi = 2.0 * std::numbers::pi;

// 2019 SI exact values.
inline constexpr double planck_h = 6.62607015e-34;          // J s
inline constexpr double elementary_charge = 1.602176634e-19;  // C
inline constexpr double flux_quantum = planck_h / (2.0 * elementary_charge);  // Wb

constexpr double hz_to_rad(double f_hz) { return two_pi * f_hz; }
constexpr double rad_to_hz(double omega) { return omega / two_pi; }

}  // namespace piezoq
