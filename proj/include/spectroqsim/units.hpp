#pragma once

#include <numbers>

namespace spectroqsim::units {

/// Speed of light in cm/fs. All energies in the library are quoted in cm^-1
/// and all times in fs.
inline constexpr double speed_of_light = 2.99792458e-5;

inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// cm^-1 -> rad/fs, i.e. omega = 2 pi c nu.
constexpr double wavenumber_to_angular(double nu) { return two_pi * speed_of_light * nu; }

/// rad/fs -> cm^-1.
constexpr double angular_to_wavenumber(double omega) { return omega / (two_pi * speed_of_light); }

/// Dimensionless c * nu * t, the "cycles" convention used when quoting
/// products such as J t3 (10 cm^-1 x 725 fs -> 0.217).
constexpr double cycles(double nu, double t_fs) { return speed_of_light * nu * t_fs; }

/// Dimensionless omega * t = 2 pi c nu t.
constexpr double radians(double nu, double t_fs) { return wavenumber_to_angular(nu) * t_fs; }

/// Period in fs of an oscillation at nu cm^-1.
constexpr double period_fs(double nu) { return 1.0 / (speed_of_light * nu); }

}  // namespace spectroqsim::units
