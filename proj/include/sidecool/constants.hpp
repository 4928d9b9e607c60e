#pragma once

#include <numbers>

namespace sidecool {

namespace constants {

// CODATA 2018. SI units throughout the library.
inline constexpr double hbar = 1.054571817e-34;  // J s
inline constexpr double k_b = 1.380649e-23;      // J/K
inline constexpr double two_pi = 2.0 * std::numbers::pi;

}  // namespace constants

// All frequencies and rates are kept angular (rad/s, s^-1) inside the
// library. File and config I/O is in plain Hz; these two helpers are the
// only place the 2*pi factor lives.
constexpr double angular_from_hz(double hz) { return constants::two_pi * hz; }
constexpr double hz_from_angular(double w) { return w / constants::two_pi; }

}  // namespace sidecool
