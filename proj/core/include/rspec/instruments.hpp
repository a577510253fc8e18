#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rspec/montecarlo.hpp"
#include "rspec/spectra.hpp"
#include "rspec/timetag.hpp"

namespace rspec {

enum class Arm { signal, idler };

/// Single-photon counting module: detection efficiency (optionally linear
/// in wavelength), dark counts, gaussian timing jitter and non-paralyzable
/// dead time.
struct DetectorModel {
  double efficiency = 0.5;
  double dark_rate = 100.0;       // counts/s
  double jitter_fwhm = 350e-12;   // s
  double dead_time = 50e-9;       // s
  double efficiency_slope = 0.0;  // 1/nm
  double reference_lambda_nm = 0.0;

  void validate() const;
  /// efficiency + slope * (lambda - reference), clamped to [0, 1].
  double efficiency_at(double lambda_nm) const;
};

/// Pi(omega - omega_M): `response` is centered at zero.
struct MonochromatorSetting {
  double omega_M = 0.0;
  SpectralFunction response = SpectralFunction::gaussian(0.0, 1e12, 0.3);

  void validate() const;
  std::complex<double> transmission(double omega) const { return response(omega - omega_M); }
};

/// Survival flag per pair for the photon in `arm`, true with probability
/// |function(omega_arm - shift)|^2. Each photon consumes exactly one uniform
/// draw, so enlarging |function|^2 never removes a survivor.
std::vector<std::uint8_t> transmit(std::span<const PairSample> pairs, Arm arm,
                                   const SpectralFunction& function, std::uint64_t seed,
                                   double shift = 0.0);

std::vector<std::uint8_t> transmit(std::span<const PairSample> pairs, Arm arm,
                                   const MonochromatorSetting& setting, std::uint64_t seed);

struct PhotonArrival {
  double time;   // s, reference clock
  double omega;  // rad/s
};

/// Click train on the reference clock at 1 ps resolution, limited to
/// [0, duration). `arrivals` must be sorted by time.
EventStream detect(std::span<const PhotonArrival> arrivals, const DetectorModel& model,
                   double duration, std::uint8_t detector_id, std::uint64_t seed);

}  // namespace rspec
