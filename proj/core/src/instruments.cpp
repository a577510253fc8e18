#include "rspec/instruments.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rspec/units.hpp"

namespace rspec {

namespace {

// FWHM -> standard deviation of a gaussian
constexpr double kFwhmToSigma = 0.42466090014400953;

}  // namespace

void DetectorModel::validate() const {
  if (!(efficiency >= 0.0 && efficiency <= 1.0)) {
    throw std::invalid_argument("detector efficiency must lie in [0, 1]");
  }
  if (!(dark_rate >= 0.0)) throw std::invalid_argument("dark_rate must be non-negative");
  if (!(jitter_fwhm >= 0.0)) throw std::invalid_argument("jitter_fwhm must be non-negative");
  if (!(dead_time >= 0.0)) throw std::invalid_argument("dead_time must be non-negative");
  if (!std::isfinite(efficiency_slope)) throw std::invalid_argument("efficiency_slope must be finite");
}

double DetectorModel::efficiency_at(double lambda_nm) const {
  if (efficiency_slope == 0.0) return efficiency;
  return std::clamp(efficiency + efficiency_slope * (lambda_nm - reference_lambda_nm), 0.0, 1.0);
}

void MonochromatorSetting::validate() const {
  if (!(response.width() > 0.0)) throw std::invalid_argument("monochromator width must be positive");
  if (!(omega_M > 0.0)) throw std::invalid_argument("monochromator setting must be positive");
}

std::vector<std::uint8_t> transmit(std::span<const PairSample> pairs, Arm arm,
                                   const SpectralFunction& function, std::uint64_t seed,
                                   double shift) {
  Rng rng(seed);
  std::vector<std::uint8_t> survives(pairs.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    const double omega = arm == Arm::signal ? pairs[i].omega_s : pairs[i].omega_i;
    const double u = rng.uniform();
    survives[i] = u < function.intensity(omega - shift) ? 1 : 0;
  }
  return survives;
}

std::vector<std::uint8_t> transmit(std::span<const PairSample> pairs, Arm arm,
                                   const MonochromatorSetting& setting, std::uint64_t seed) {
  return transmit(pairs, arm, setting.response, seed, setting.omega_M);
}

EventStream detect(std::span<const PhotonArrival> arrivals, const DetectorModel& model,
                   double duration, std::uint8_t detector_id, std::uint64_t seed) {
  model.validate();
  Rng rng(seed);
  const double sigma = model.jitter_fwhm * kFwhmToSigma;
  const auto duration_ps = to_ps(duration);

  std::vector<std::int64_t> clicks;
  clicks.reserve(arrivals.size() / 2 + 16);
  for (const auto& a : arrivals) {
    const double eta = model.efficiency_at(nm_from_omega(a.omega));
    const double u = rng.uniform();
    const double jitter = sigma > 0.0 ? sigma * rng.normal() : 0.0;
    if (u >= eta) continue;
    clicks.push_back(to_ps(a.time + jitter));
  }
  if (model.dark_rate > 0.0) {
    Rng dark(derive_seed(seed, 1));
    for (double t = dark.exponential(model.dark_rate); t < duration; t += dark.exponential(model.dark_rate)) {
      clicks.push_back(to_ps(t));
    }
  }
  std::sort(clicks.begin(), clicks.end());

  EventStream out;
  out.detector_id = detector_id;
  out.resolution_ps = 1;
  out.duration_ps = static_cast<std::uint64_t>(std::max<std::int64_t>(duration_ps, 0));
  out.ticks.reserve(clicks.size());
  const auto dead_ps = to_ps(model.dead_time);
  std::int64_t last = 0;
  bool any = false;
  for (auto c : clicks) {
    if (c < 0 || c >= duration_ps) continue;
    // non-paralyzable: only accepted clicks open a dead interval
    if (any && (c - last < dead_ps || c == last)) continue;
    out.ticks.push_back(static_cast<std::uint64_t>(c));
    last = c;
    any = true;
  }
  return out;
}

}  // namespace rspec
