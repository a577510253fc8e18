#include "rspec/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <tuple>

namespace rspec {

namespace {

std::size_t default_nodes(const SpectralFunction& fn) {
  // sinc needs to resolve ~400 lobes
  return fn.kind() == SpectralKind::sinc_phase_matching ? (std::size_t{1} << 16) + 1
                                                        : (std::size_t{1} << 14) + 1;
}

}  // namespace

void SourceConfig::validate() const {
  if (!(pair_rate > 0.0) || !std::isfinite(pair_rate)) {
    throw std::invalid_argument("pair_rate must be positive");
  }
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw std::invalid_argument("duration must be positive");
  }
  if (!(omega_p > 0.0) || !(omega_s0 > 0.0) || !(omega_i0 > 0.0)) {
    throw std::invalid_argument("pump and pair center frequencies must be positive");
  }
  if (std::abs(omega_s0 + omega_i0 - omega_p) > 1e-12 * omega_p) {
    throw std::invalid_argument("omega_s0 + omega_i0 must equal omega_p");
  }
  if (!phi.bounded()) throw std::invalid_argument("phi must have bounded support for sampling");
  const auto [lo, hi] = phi.support();
  if (!(omega_s0 + lo > 0.0) || !(omega_i0 - hi > 0.0)) {
    throw std::invalid_argument("phi support reaches non-positive pair frequencies");
  }
}

IntensitySampler::IntensitySampler(const SpectralFunction& fn, std::size_t n_nodes) {
  std::tie(lo_, hi_) = fn.support();
  if (fn.kind() == SpectralKind::rectangle) {
    uniform_ = true;
    return;
  }
  const std::size_t n = n_nodes >= 2 ? n_nodes : default_nodes(fn);
  step_ = (hi_ - lo_) / static_cast<double>(n - 1);
  density_.resize(n);
  cdf_.resize(n);
  for (std::size_t j = 0; j < n; ++j) density_[j] = fn.intensity(lo_ + static_cast<double>(j) * step_);
  cdf_[0] = 0.0;
  for (std::size_t j = 1; j < n; ++j) {
    cdf_[j] = cdf_[j - 1] + 0.5 * step_ * (density_[j - 1] + density_[j]);
  }
  const double total = cdf_.back();
  if (!(total > 0.0)) throw std::invalid_argument("spectral intensity integrates to zero");
  for (auto& v : cdf_) v /= total;
  for (auto& v : density_) v /= total;
}

double IntensitySampler::sample(Rng& rng) const {
  const double u = rng.uniform();
  if (uniform_) return lo_ + u * (hi_ - lo_);
  auto it = std::upper_bound(cdf_.begin(), cdf_.end(), u);
  const auto j = static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(
      it - cdf_.begin() - 1, 0, static_cast<std::ptrdiff_t>(cdf_.size()) - 2));
  // invert the linear-density cumulative inside cell j
  const double a = density_[j];
  const double b = density_[j + 1];
  const double q = (u - cdf_[j]) / step_;
  const double disc = std::max(0.0, a * a + 2.0 * (b - a) * q);
  const double denom = a + std::sqrt(disc);
  const double t = denom > 0.0 ? std::clamp(2.0 * q / denom, 0.0, 1.0) : 0.5;
  return lo_ + (static_cast<double>(j) + t) * step_;
}

PairSample make_pair(double birth_time, double nu, double omega_p, double omega_s0,
                     double omega_i0) {
  double omega_s = omega_s0 + nu;
  double omega_i = omega_i0 - nu;
  // The larger partner lies in [omega_p/2, omega_p], so omega_p minus it is
  // exact (Sterbenz) and the double sum reproduces omega_p bit for bit.
  if (omega_s >= omega_i) {
    omega_i = omega_p - omega_s;
  } else {
    omega_s = omega_p - omega_i;
  }
  return {birth_time, nu, omega_s, omega_i};
}

std::vector<PairSample> generate_pairs(const SourceConfig& config) {
  config.validate();
  const double expected = config.pair_rate * config.duration;
  if (expected > 4294967296.0) {
    throw CapacityError("expected pair count exceeds 2^32; generate in shorter chunks");
  }
  const IntensitySampler sampler(config.phi);
  Rng time_rng(derive_seed(config.rng_seed, 0));
  Rng nu_rng(derive_seed(config.rng_seed, 1));

  std::vector<PairSample> pairs;
  pairs.reserve(static_cast<std::size_t>(expected + 6.0 * std::sqrt(expected) + 16.0));
  double t = 0.0;
  while (true) {
    t += time_rng.exponential(config.pair_rate);
    if (t >= config.duration) break;
    const double nu = sampler.sample(nu_rng);
    pairs.push_back(make_pair(t, nu, config.omega_p, config.omega_s0, config.omega_i0));
  }
  return pairs;
}

TauSampler TauSampler::delta() { return TauSampler(); }

TauSampler::TauSampler(const TwoPhotonWavefunction& wavefunction) {
  const auto& g2 = wavefunction.g2;
  double total = 0.0;
  for (double v : g2) total += v;
  if (!(total > 0.0) || g2.empty()) return;  // delta
  step_ = wavefunction.tau_step;
  origin_ = wavefunction.tau_origin - 0.5 * step_;
  cdf_.resize(g2.size());
  double run = 0.0;
  for (std::size_t k = 0; k < g2.size(); ++k) {
    run += g2[k];
    cdf_[k] = run / total;
  }
  cdf_.back() = 1.0;
}

double TauSampler::sample(Rng& rng) const {
  if (cdf_.empty()) return 0.0;
  const double u = rng.uniform();
  const auto k = static_cast<std::size_t>(std::upper_bound(cdf_.begin(), cdf_.end(), u) - cdf_.begin());
  const std::size_t cell = std::min(k, cdf_.size() - 1);
  const double below = cell == 0 ? 0.0 : cdf_[cell - 1];
  const double width = cdf_[cell] - below;
  const double frac = width > 0.0 ? (u - below) / width : 0.5;
  return origin_ + (static_cast<double>(cell) + frac) * step_;
}

ArrivalTimes pair_arrival_times(const PairSample& pair, const DispersiveMedium& signal_path,
                                const DispersiveMedium& idler_path, const TauSampler& jitter,
                                Rng& rng) {
  const double tau = jitter.sample(rng);
  return {pair.birth_time + signal_path.group_delay() - 0.5 * tau,
          pair.birth_time + idler_path.group_delay() + 0.5 * tau};
}

}  // namespace rspec
