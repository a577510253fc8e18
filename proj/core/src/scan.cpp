#include "rspec/scan.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <mutex>
#include <ostream>
#include <thread>

#include "rspec/instruments.hpp"
#include "rspec/montecarlo.hpp"
#include "rspec/units.hpp"

namespace rspec {

namespace {

constexpr std::size_t kQuadratureNodes = (std::size_t{1} << 16) + 1;
constexpr std::size_t kPassbandNodes = 4097;
constexpr double kJitterSpanFactor = 32.0;

// Source-side quantities shared by every scan point.
struct SourceIntegrals {
  double phi_norm = 0.0;  // integral of |Phi|^2 over its sampled support
  double d1_rate = 0.0;   // true (pre dead-time) detector-1 rate including darks
};

SourceIntegrals source_integrals(const RunConfig& config) {
  const auto phi = config.phi();
  const auto remote = config.remote();
  const auto [lo, hi] = phi.support();
  const double step = (hi - lo) / static_cast<double>(kQuadratureNodes - 1);
  const double omega_s0 = config.omega_s0();
  double z = 0.0;
  double transmitted = 0.0;
  for (std::size_t j = 0; j < kQuadratureNodes; ++j) {
    const double nu = lo + static_cast<double>(j) * step;
    const double w = (j == 0 || j + 1 == kQuadratureNodes) ? 0.5 : 1.0;
    const double p = phi.intensity(nu);
    z += w * p;
    const double omega_s = omega_s0 + nu;
    if (p > 0.0) {
      transmitted += w * p * remote.intensity(omega_s) * config.detector1.efficiency_at(nm_from_omega(omega_s));
    }
  }
  SourceIntegrals out;
  out.phi_norm = z * step;
  out.d1_rate = config.source.pair_rate * transmitted / z + config.detector1.dark_rate;
  return out;
}

struct ExpectedRates {
  double singles1 = 0.0;  // measured, after dead time
  double singles2 = 0.0;
  double true_coincidences = 0.0;  // after dead time, before accidentals
  double accidentals = 0.0;
};

ExpectedRates expected_rates(const RunConfig& config, const SourceIntegrals& src, double lambda_M_nm) {
  const auto phi = config.phi();
  const auto remote = config.remote();
  const auto mono = config.monochromator_at(lambda_M_nm);
  const double omega_s0 = config.omega_s0();
  const double omega_i0 = config.omega_i0();

  // nu range where the monochromator transmits, clipped to Phi's support
  auto [lo, hi] = phi.support();
  if (mono.response.bounded()) {
    const auto [pass_lo, pass_hi] = mono.response.support();
    lo = std::max(lo, omega_i0 - mono.omega_M - pass_hi);
    hi = std::min(hi, omega_i0 - mono.omega_M - pass_lo);
  }
  double idler = 0.0;
  double joint = 0.0;
  if (hi > lo) {
    const double step = (hi - lo) / static_cast<double>(kPassbandNodes - 1);
    for (std::size_t j = 0; j < kPassbandNodes; ++j) {
      const double nu = lo + static_cast<double>(j) * step;
      const double w = (j == 0 || j + 1 == kPassbandNodes) ? 0.5 : 1.0;
      const double omega_i = omega_i0 - nu;
      const double p = phi.intensity(nu) * mono.response.intensity(omega_i - mono.omega_M);
      if (!(p > 0.0)) continue;
      const double eta2 = config.detector2.efficiency_at(nm_from_omega(omega_i));
      idler += w * p * eta2;
      const double omega_s = omega_s0 + nu;
      joint += w * p * eta2 * remote.intensity(omega_s) * config.detector1.efficiency_at(nm_from_omega(omega_s));
    }
    idler *= step / src.phi_norm;
    joint *= step / src.phi_norm;
  }
  const double rate = config.source.pair_rate;

  const double n1 = src.d1_rate;
  const double n2 = rate * idler + config.detector2.dark_rate;
  const double live1 = 1.0 / (1.0 + n1 * config.detector1.dead_time);
  const double live2 = 1.0 / (1.0 + n2 * config.detector2.dead_time);

  ExpectedRates out;
  out.singles1 = n1 * live1;
  out.singles2 = n2 * live2;
  out.true_coincidences = rate * joint * live1 * live2;
  out.accidentals = out.singles1 * out.singles2 * config.window().width;
  return out;
}

std::optional<double> normalize(double coincidences, double singles2) {
  if (!(singles2 > 0.0)) return std::nullopt;
  return coincidences / singles2;
}

TauSampler jitter_sampler(const OpticalSetup& setup) {
  const auto grid = auto_grid(setup, kJitterSpanFactor);
  return TauSampler(compute_psi(grid, setup));
}

std::size_t analytic_peak_index(const RunConfig& config, const std::vector<double>& grid) {
  const auto src = source_integrals(config);
  std::size_t best = 0;
  double best_rate = -1.0;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const double r = expected_rates(config, src, grid[i]).true_coincidences;
    if (r > best_rate) {
      best_rate = r;
      best = i;
    }
  }
  return best;
}

template <typename Fn>
void parallel_for(std::size_t n, unsigned threads, Fn&& fn) {
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(n)));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  {
    std::vector<std::jthread> workers;
    for (unsigned w = 0; w < threads; ++w) {
      workers.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            std::lock_guard lock(error_mutex);
            if (!error) error = std::current_exception();
          }
        }
      });
    }
  }
  if (error) std::rethrow_exception(error);
}

unsigned thread_count(const RunConfig& config) {
  return config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
}

void put_number(std::ostream& out, double v) {
  char buf[64];
  auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, p - buf);
}

}  // namespace

Acquisition acquire(const RunConfig& config, double lambda_M_nm, double duration, std::uint64_t seed) {
  const auto pairs = generate_pairs(config.source_config(duration, derive_seed(seed, 0)));
  const auto remote = config.remote();
  const auto mono = config.monochromator_at(lambda_M_nm);
  const auto signal_ok = transmit(pairs, Arm::signal, remote, derive_seed(seed, 1));
  const auto idler_ok = transmit(pairs, Arm::idler, mono, derive_seed(seed, 2));

  OpticalSetup setup;
  setup.phi = config.phi();
  setup.remote = remote;
  setup.monochromator = mono.response;
  setup.omega_M = mono.omega_M;
  setup.omega_s0 = config.omega_s0();
  setup.omega_i0 = config.omega_i0();
  setup.signal_path = config.signal_path;
  setup.idler_path = config.idler_path;
  const auto jitter = jitter_sampler(setup);

  Rng tau_rng(derive_seed(seed, 3));
  std::vector<PhotonArrival> arrivals1;
  std::vector<PhotonArrival> arrivals2;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (!signal_ok[i] && !idler_ok[i]) continue;
    const auto t = pair_arrival_times(pairs[i], config.signal_path, config.idler_path, jitter, tau_rng);
    if (signal_ok[i]) arrivals1.push_back({t.signal, pairs[i].omega_s});
    if (idler_ok[i]) arrivals2.push_back({t.idler, pairs[i].omega_i});
  }
  auto by_time = [](const PhotonArrival& a, const PhotonArrival& b) { return a.time < b.time; };
  std::sort(arrivals1.begin(), arrivals1.end(), by_time);
  std::sort(arrivals2.begin(), arrivals2.end(), by_time);

  const auto d1 = detect(arrivals1, config.detector1, duration, 1, derive_seed(seed, 4));
  const auto d2 = detect(arrivals2, config.detector2, duration, 2, derive_seed(seed, 5));
  return {apply_clock(d1, config.clock1), apply_clock(d2, config.clock2)};
}

double resolve_dwell(const RunConfig& config) {
  if (config.scan.dwell_s) return *config.scan.dwell_s;
  const auto grid = config.scan_grid_nm();
  const auto src = source_integrals(config);
  double peak = 0.0;
  for (double lambda : grid) peak = std::max(peak, expected_rates(config, src, lambda).true_coincidences);
  if (!(peak > 0.0)) throw ConfigError({"scan: no coincidences expected anywhere on the grid"});
  return std::ceil(config.scan.min_peak_coincidences / peak / 0.01) * 0.01;
}

ScanCurve analytic_scan(const RunConfig& config) {
  config.validate();
  const auto grid = config.scan_grid_nm();
  const double dwell = resolve_dwell(config);
  const auto src = source_integrals(config);

  ScanCurve curve;
  curve.analytic = true;
  curve.pump_lambda_nm = config.pump_lambda_nm;
  for (double lambda : grid) {
    const auto r = expected_rates(config, src, lambda);
    ScanPoint p;
    p.lambda_M_nm = lambda;
    p.lambda_conj_nm = conjugate_wavelength(config.pump_lambda_nm, lambda);
    p.dwell_s = dwell;
    p.singles1 = r.singles1 * dwell;
    p.singles2 = r.singles2 * dwell;
    p.coincidences = (r.true_coincidences + r.accidentals) * dwell;
    p.normalized = normalize(p.coincidences, p.singles2);
    curve.points.push_back(p);
  }
  RunConfig resolved = config;
  resolved.scan.dwell_s = dwell;
  curve.config = to_json(resolved);
  return curve;
}

ScanCurve run_scan(const RunConfig& config) {
  config.validate();
  const auto grid = config.scan_grid_nm();
  const double dwell = resolve_dwell(config);
  const std::size_t align_index = config.scan.align_point
                                      ? static_cast<std::size_t>(*config.scan.align_point)
                                      : analytic_peak_index(config, grid);
  const auto point_seed = [&](std::size_t i) { return derive_seed(config.seed, i); };

  std::vector<std::optional<Acquisition>> acquisitions(grid.size());
  acquisitions[align_index] = acquire(config, grid[align_index], dwell, point_seed(align_index));
  auto alignment = align(acquisitions[align_index]->detector1, acquisitions[align_index]->detector2,
                         config.alignment_options());
  if (!alignment.aligned) {
    const double sig = alignment.global_significance;
    throw NoAlignmentError("no alignment: coincidence peak significance " + std::to_string(sig) +
                               " below threshold " +
                               std::to_string(config.coincidence.significance_threshold),
                           std::move(alignment));
  }

  const auto offset = alignment.best_offset_ps;
  const auto width = config.window().width_ps();
  std::vector<ScanPoint> points(grid.size());
  parallel_for(grid.size(), thread_count(config), [&](std::size_t i) {
    const Acquisition acq = acquisitions[i] ? std::move(*acquisitions[i])
                                            : acquire(config, grid[i], dwell, point_seed(i));
    const auto t1 = acq.detector1.times_ps();
    const auto t2 = acq.detector2.times_ps();
    ScanPoint& p = points[i];
    p.lambda_M_nm = grid[i];
    p.lambda_conj_nm = conjugate_wavelength(config.pump_lambda_nm, grid[i]);
    p.dwell_s = dwell;
    p.singles1 = static_cast<double>(t1.size());
    p.singles2 = static_cast<double>(t2.size());
    p.coincidences = static_cast<double>(count_coincidences(t1, t2, offset, width));
    p.normalized = normalize(p.coincidences, p.singles2);
    const double accidentals = p.singles1 * p.singles2 * config.window().width / dwell;
    p.verify_significance = accidentals > 0.0 ? (p.coincidences - accidentals) / std::sqrt(accidentals)
                                              : (p.coincidences > 0.0 ? INFINITY : 0.0);
  });

  ScanCurve curve;
  curve.pump_lambda_nm = config.pump_lambda_nm;
  curve.points = std::move(points);
  curve.alignment = std::move(alignment);
  RunConfig resolved = config;
  resolved.scan.dwell_s = dwell;
  resolved.scan.align_point = static_cast<int>(align_index);
  curve.config = to_json(resolved);
  return curve;
}

SpectralFunction reconstruct(const ScanCurve& curve) {
  double peak = 0.0;
  for (const auto& p : curve.points) {
    if (p.normalized) peak = std::max(peak, *p.normalized);
  }
  if (!(peak > 0.0)) throw EmptyReconstructionError("scan has no positive normalized coincidence rate");
  std::vector<SpectralNode> nodes;
  for (const auto& p : curve.points) {
    if (!p.normalized) continue;
    nodes.push_back({omega_from_nm(p.lambda_conj_nm), std::sqrt(std::max(0.0, *p.normalized) / peak)});
  }
  std::sort(nodes.begin(), nodes.end(), [](const auto& a, const auto& b) { return a.omega < b.omega; });
  return SpectralFunction::tabulated(std::move(nodes));
}

void write_scan_csv(const ScanCurve& curve, std::ostream& out) {
  out << "lambda_M_nm,lambda_conj_nm,singles1,singles2,coinc,dwell_s,normalized\n";
  for (const auto& p : curve.points) {
    for (double v : {p.lambda_M_nm, p.lambda_conj_nm, p.singles1, p.singles2, p.coincidences, p.dwell_s}) {
      put_number(out, v);
      out << ',';
    }
    if (p.normalized) {
      put_number(out, *p.normalized);
    } else {
      out << "nan";
    }
    out << '\n';
  }
}

}  // namespace rspec
