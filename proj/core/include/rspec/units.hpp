#pragma once

#include <cstdint>
#include <numbers>

namespace rspec {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr double kPicosecond = 1e-12;

/// Angular frequency (rad/s) of vacuum wavelength given in nm.
double omega_from_nm(double lambda_nm);

/// Vacuum wavelength (nm) of angular frequency given in rad/s.
double nm_from_omega(double omega);

/// Converts a wavelength width (nm) around `center_nm` into an angular
/// frequency width (rad/s), to first order in width/center.
double omega_width_from_nm(double width_nm, double center_nm);

/// Inverse of omega_width_from_nm at the same center.
double nm_width_from_omega(double width_omega, double center_nm);

/// Seconds -> integer picoseconds, rounded to nearest.
std::int64_t to_ps(double seconds);

}  // namespace rspec
