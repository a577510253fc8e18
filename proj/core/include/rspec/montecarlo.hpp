#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "rspec/random.hpp"
#include "rspec/spectra.hpp"

namespace rspec {

/// One down-converted pair. omega_s + omega_i == omega_p holds exactly in
/// double arithmetic.
struct PairSample {
  double birth_time;  // s, laboratory reference clock
  double nu;          // rad/s
  double omega_s;
  double omega_i;
};

struct SourceConfig {
  double pair_rate = 5e6;  // pairs/s
  double duration = 1.0;   // s
  double omega_p = 0.0;
  double omega_s0 = 0.0;
  double omega_i0 = 0.0;
  SpectralFunction phi = SpectralFunction::gaussian(0.0, 1e13);
  std::uint64_t rng_seed = 0;

  /// Throws std::invalid_argument on the first violated invariant.
  void validate() const;
};

class CapacityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Inverse-CDF sampler for a density proportional to |F|^2 on F's support,
/// with |F|^2 interpolated linearly between grid nodes.
class IntensitySampler {
 public:
  explicit IntensitySampler(const SpectralFunction& fn, std::size_t n_nodes = 0);

  double sample(Rng& rng) const;
  double lower() const { return lo_; }
  double upper() const { return hi_; }

 private:
  double lo_ = 0.0;
  double hi_ = 0.0;
  double step_ = 0.0;
  bool uniform_ = false;
  std::vector<double> density_;  // at nodes
  std::vector<double> cdf_;      // at nodes, normalized to 1 at the end
};

/// Pair birth times form a homogeneous Poisson process on [0, duration);
/// detunings are i.i.d. with density |Phi(nu)|^2. Throws CapacityError when
/// the expected count exceeds 2^32.
std::vector<PairSample> generate_pairs(const SourceConfig& config);

/// Builds omega_s, omega_i for a detuning such that their double sum is
/// exactly omega_p.
PairSample make_pair(double birth_time, double nu, double omega_p, double omega_s0,
                     double omega_i0);

/// Samples the signal-idler detection-time difference tau from a normalized
/// G2(tau); piecewise-constant density over the tau cells.
class TauSampler {
 public:
  /// Always returns 0 (perfect correlation).
  static TauSampler delta();
  explicit TauSampler(const TwoPhotonWavefunction& wavefunction);

  double sample(Rng& rng) const;
  bool is_delta() const { return cdf_.empty(); }

 private:
  TauSampler() = default;
  double origin_ = 0.0;  // left edge of the first cell
  double step_ = 0.0;
  std::vector<double> cdf_;
};

struct ArrivalTimes {
  double signal;  // t1
  double idler;   // t2
};

/// t1 = birth + r1/u1 - tau/2, t2 = birth + r2/u2 + tau/2 with tau drawn
/// from `jitter`.
ArrivalTimes pair_arrival_times(const PairSample& pair, const DispersiveMedium& signal_path,
                                const DispersiveMedium& idler_path, const TauSampler& jitter,
                                Rng& rng);

}  // namespace rspec
