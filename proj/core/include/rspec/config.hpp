#pragma once

// One JSON document carries every parameter of a run. Wavelength-valued
// fields are in nm; the spectral functions are resolved to angular frequency
// when a run starts.

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rspec/coincidence.hpp"
#include "rspec/instruments.hpp"
#include "rspec/montecarlo.hpp"
#include "rspec/spectra.hpp"
#include "rspec/timetag.hpp"

namespace rspec {

/// User-facing description of a SpectralFunction. Centers and widths may be
/// given in nm or rad/s; nm widths are converted at a reference wavelength.
struct SpectralSpec {
  std::string kind = "gaussian";  // gaussian|rectangle|flat|sinc_phase_matching|edge|tabulated
  std::optional<double> center_nm;
  std::optional<double> center_rad_s;
  std::optional<double> width_nm;
  std::optional<double> width_rad_s;
  double peak = 1.0;
  double mismatch_s_per_m = 0.0;
  double crystal_length_m = 8e-3;
  std::string pass = "short";  // edge: transmit wavelengths shorter/longer than center
  std::string file;            // tabulated CSV

  /// Function of absolute angular frequency.
  SpectralFunction resolve_absolute() const;
  /// Function of a frequency offset (detuning), nm widths taken at `reference_nm`.
  SpectralFunction resolve_relative(double reference_nm) const;
  /// Width in nm at `reference_nm`, if the kind has one.
  std::optional<double> width_in_nm(double reference_nm) const;
};

struct RunConfig {
  double pump_lambda_nm = 457.9;

  struct Source {
    double pair_rate = 5e6;
    std::optional<double> signal_center_nm;  // defaults to the remote filter center
    SpectralSpec phi;
  } source;

  SpectralSpec remote_filter;
  SpectralSpec monochromator;

  DetectorModel detector1;
  DetectorModel detector2;
  ClockModel clock1;
  ClockModel clock2;
  DispersiveMedium signal_path;
  DispersiveMedium idler_path;

  struct Coincidence {
    double window_ns = 5.0;
    double search_s = 1.0;
    double coarse_ns = 100.0;
    double significance_threshold = 5.0;
  } coincidence;

  struct Scan {
    int points = 60;
    std::optional<double> lambda_start_nm;
    std::optional<double> lambda_stop_nm;
    double span_fwhm = 3.0;       // half-span of the auto grid, in filter FWHMs
    double half_span_nm = 30.0;   // auto grid half-span for filters without a width
    std::optional<double> dwell_s;  // auto: min_peak_coincidences at the analytic peak
    double min_peak_coincidences = 400.0;
    std::optional<int> align_point;  // auto: analytic peak
  } scan;

  struct Simulate {
    std::optional<double> lambda_M_nm;  // defaults to the conjugate of the filter center
    double duration_s = 1.0;
  } simulate;

  std::uint64_t seed = 20030317;
  unsigned threads = 0;

  struct Output {
    std::string dir = ".";
    std::string prefix = "rspec";
  } output;

  /// 850 nm / 10 nm gaussian remote filter, 457.9 nm pump, 2 nm monochromator.
  static RunConfig defaults();

  double omega_p() const;
  double signal_center_nm() const;
  double idler_center_nm() const;
  double omega_s0() const;
  double omega_i0() const;
  SpectralFunction phi() const;
  SpectralFunction remote() const;
  MonochromatorSetting monochromator_at(double lambda_M_nm) const;
  SourceConfig source_config(double duration, std::uint64_t seed) const;
  AlignmentOptions alignment_options() const;
  CoincidenceWindow window() const;
  /// Ascending monochromator wavelengths (nm).
  std::vector<double> scan_grid_nm() const;
  double simulate_lambda_nm() const;

  /// Throws ConfigError listing every violated constraint by field path.
  void validate() const;
};

class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> problems);
  const std::vector<std::string>& problems() const { return problems_; }

 private:
  std::vector<std::string> problems_;
};

nlohmann::json to_json(const RunConfig& config);
/// Unknown keys and type mismatches are reported with their field paths.
RunConfig config_from_json(const nlohmann::json& doc);
RunConfig load_config(const std::string& path);

/// Applies `dotted.path=value`; the value is parsed as JSON, falling back to
/// a plain string.
void apply_override(nlohmann::json& doc, const std::string& assignment);

}  // namespace rspec
