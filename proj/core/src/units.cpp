#include "rspec/units.hpp"

#include <cmath>

namespace rspec {

double omega_from_nm(double lambda_nm) { return kTwoPi * kSpeedOfLight / (lambda_nm * 1e-9); }

double nm_from_omega(double omega) { return kTwoPi * kSpeedOfLight / omega * 1e9; }

double omega_width_from_nm(double width_nm, double center_nm) {
  const double lambda = center_nm * 1e-9;
  return kTwoPi * kSpeedOfLight * (width_nm * 1e-9) / (lambda * lambda);
}

double nm_width_from_omega(double width_omega, double center_nm) {
  const double lambda = center_nm * 1e-9;
  return width_omega * lambda * lambda / (kTwoPi * kSpeedOfLight) * 1e9;
}

std::int64_t to_ps(double seconds) { return std::llround(seconds / kPicosecond); }

}  // namespace rspec
