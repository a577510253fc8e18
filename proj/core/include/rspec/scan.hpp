#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

#include "rspec/coincidence.hpp"
#include "rspec/config.hpp"
#include "rspec/timetag.hpp"

namespace rspec {

struct ScanPoint {
  double lambda_M_nm = 0.0;     // idler, set on the local monochromator
  double lambda_conj_nm = 0.0;  // signal, inferred at the remote end
  double singles1 = 0.0;
  double singles2 = 0.0;
  double coincidences = 0.0;
  double dwell_s = 0.0;
  /// coincidences / singles2; empty when singles2 is zero.
  std::optional<double> normalized;
  /// (coincidences - expected accidentals) / sqrt(expected accidentals) at
  /// the recovered offset; Monte Carlo scans only.
  double verify_significance = 0.0;
};

struct ScanCurve {
  double pump_lambda_nm = 0.0;
  std::vector<ScanPoint> points;
  nlohmann::json config;  // snapshot with auto fields resolved
  bool analytic = false;
  std::optional<AlignmentResult> alignment;
};

class NoAlignmentError : public std::runtime_error {
 public:
  NoAlignmentError(const std::string& what, AlignmentResult result)
      : std::runtime_error(what), result_(std::move(result)) {}
  const AlignmentResult& result() const { return result_; }

 private:
  AlignmentResult result_;
};

class EmptyReconstructionError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Both detector streams of one monochromator setting, on local clocks.
struct Acquisition {
  EventStream detector1;
  EventStream detector2;
};

/// Source -> f (signal) and Pi (idler) -> detectors -> clocks for one
/// monochromator setting. Deterministic in (config, seed).
Acquisition acquire(const RunConfig& config, double lambda_M_nm, double duration, std::uint64_t seed);

/// Expected-value scan from the narrowband coincidence rate, scaled by
/// dwell, detector efficiencies and Pi's integrated intensity, with
/// dead-time losses and accidentals added.
ScanCurve analytic_scan(const RunConfig& config);

/// Monte Carlo measurement over the scan grid. Aligns the two time bases
/// once, then counts coincidences at every point with the recovered offset.
/// Throws NoAlignmentError when the alignment acquisition shows no peak.
ScanCurve run_scan(const RunConfig& config);

/// Dwell used by run_scan/analytic_scan: the configured value, or the
/// shortest multiple of 10 ms giving min_peak_coincidences at the analytic
/// peak.
double resolve_dwell(const RunConfig& config);

/// Peak-normalized |f|^2 estimate on the signal axis, returned as a
/// tabulated amplitude (sqrt of the normalized intensity). Points without a
/// normalized value are skipped. Throws EmptyReconstructionError when
/// nothing is left or everything is zero.
SpectralFunction reconstruct(const ScanCurve& curve);

/// `lambda_M_nm,lambda_conj_nm,singles1,singles2,coinc,dwell_s,normalized`
void write_scan_csv(const ScanCurve& curve, std::ostream& out);

}  // namespace rspec
