#pragma once

// Frequency-domain bookkeeping for a collinear photon pair: spectral
// functions, the conjugate-wavelength map and the effective two-photon
// wavefunction psi(tau) with its correlation G2(tau) = |psi|^2.
//
// Frequencies are angular (rad/s) throughout. The pair detuning nu is
// measured from the signal/idler centers: omega_s = omega_s0 + nu and
// omega_i = omega_i0 - nu.

#include <complex>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rspec {

/// Uniform frequency grid with a power-of-two number of points, symmetric
/// about `center_nu`.
class FrequencyGrid {
 public:
  /// Throws std::invalid_argument unless n_points >= 2 is a power of two
  /// and span > 0.
  static FrequencyGrid make(double center_nu, double span, std::size_t n_points);

  double center_nu() const { return center_; }
  double span() const { return span_; }
  std::size_t size() const { return n_; }
  double spacing() const { return span_ / static_cast<double>(n_ - 1); }
  double at(std::size_t j) const {
    return center_ - 0.5 * span_ + static_cast<double>(j) * spacing();
  }
  /// Time step of the conjugate tau grid, 2 pi / (N dnu).
  double tau_spacing() const;

 private:
  FrequencyGrid(double center, double span, std::size_t n) : center_(center), span_(span), n_(n) {}
  double center_;
  double span_;
  std::size_t n_;
};

enum class SpectralKind { gaussian, rectangle, sinc_phase_matching, edge, tabulated };

/// Which side of an edge filter transmits, on the angular-frequency axis.
enum class EdgePass { above, below };

struct SpectralNode {
  double omega;
  std::complex<double> amplitude;
};

/// Complex amplitude transmission (or spectral amplitude) over angular
/// frequency. Widths are FWHM of the amplitude for gaussian and the full
/// support for rectangle. All instances satisfy |value| <= peak <= 1.
class SpectralFunction {
 public:
  static SpectralFunction gaussian(double center, double fwhm, double peak = 1.0);
  static SpectralFunction rectangle(double center, double width, double peak = 1.0);
  /// Rectangle of unbounded width.
  static SpectralFunction flat(double peak = 1.0);
  /// peak * sinc(mismatch * length * (omega - center) / 2), with `mismatch`
  /// the group-velocity mismatch (s/m) and `length` the crystal length (m).
  static SpectralFunction sinc_phase_matching(double center, double mismatch, double length,
                                              double peak = 1.0);
  static SpectralFunction edge(double center, EdgePass pass, double peak = 1.0);
  /// Nodes must have strictly increasing omega; linear interpolation in
  /// between, zero outside.
  static SpectralFunction tabulated(std::vector<SpectralNode> nodes);

  std::complex<double> operator()(double omega) const;
  double intensity(double omega) const { return std::norm((*this)(omega)); }

  SpectralKind kind() const { return kind_; }
  double center() const { return center_; }
  /// Amplitude FWHM (gaussian, sinc), support width (rectangle, tabulated),
  /// zero for edge. Infinite for flat.
  double width() const;
  double peak() const { return peak_; }
  double mismatch() const { return mismatch_; }
  double crystal_length() const { return length_; }
  EdgePass edge_pass() const { return pass_; }
  const std::vector<SpectralNode>& nodes() const { return nodes_; }

  /// True when the function vanishes (or decays) away from a finite band.
  bool bounded() const;
  /// Finite interval holding essentially all of |F|^2; throws
  /// std::domain_error for unbounded kinds.
  std::pair<double, double> support() const;
  /// Integral of |F(omega)|^2 d omega; infinity for unbounded kinds.
  double integrated_intensity() const;

  /// Same function translated by `delta` along the frequency axis.
  SpectralFunction shifted(double delta) const;

 private:
  SpectralFunction() = default;

  SpectralKind kind_ = SpectralKind::rectangle;
  double center_ = 0.0;
  double width_ = 0.0;
  double peak_ = 1.0;
  double mismatch_ = 0.0;
  double length_ = 0.0;
  EdgePass pass_ = EdgePass::above;
  std::vector<SpectralNode> nodes_;
};

struct DispersiveMedium {
  double inverse_group_velocity = 0.0;  // k' = 1/u, s/m
  double gvd = 0.0;                     // k'', s^2/m
  double length = 0.0;                  // m

  double group_delay() const { return inverse_group_velocity * length; }
  double gvd_length() const { return gvd * length; }
};

/// Everything that shapes psi(tau) for one monochromator setting.
struct OpticalSetup {
  SpectralFunction phi = SpectralFunction::flat();            // over detuning nu
  SpectralFunction remote = SpectralFunction::flat();         // f, absolute omega
  SpectralFunction monochromator = SpectralFunction::flat();  // Pi, over omega - omega_M
  double omega_M = 0.0;
  double omega_s0 = 0.0;
  double omega_i0 = 0.0;
  DispersiveMedium signal_path;
  DispersiveMedium idler_path;

  /// Phi(nu) f(omega_s0 + nu) Pi(omega_i0 - nu - omega_M), without the
  /// dispersion phase.
  std::complex<double> spectral_product(double nu) const;
  /// Dispersion phase coefficient k''_1 r_1 + k''_2 r_2.
  double total_gvd_length() const;
};

/// psi(tau_k) and G2(tau_k) on the uniform time grid conjugate to the
/// frequency grid used to compute them. Normalized so that
/// sum g2 dtau = sum |product|^2 dnu.
struct TwoPhotonWavefunction {
  double tau_origin = 0.0;
  double tau_step = 0.0;
  std::vector<std::complex<double>> psi;
  std::vector<double> g2;

  double tau(std::size_t k) const { return tau_origin + static_cast<double>(k) * tau_step; }
  double integrated_g2() const;
};

class AliasingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Largest allowed |integrand| at the grid ends, relative to its maximum.
inline constexpr double kEdgeDecayLimit = 1e-6;

/// psi(tau) as the Fourier transform of the spectral product times the
/// second-order dispersion phase, evaluated with an FFT. Throws
/// AliasingError when the integrand has not decayed at the grid edges.
TwoPhotonWavefunction compute_psi(const FrequencyGrid& grid, const OpticalSetup& setup);

/// Grid centered on the narrowest bounded factor of the product, spanning
/// at least `span_factor` times the widest bounded factor and resolving the
/// narrowest with >= 16 points. Doubles the span until the edge-decay
/// condition holds.
FrequencyGrid auto_grid(const OpticalSetup& setup, double span_factor = 8.0);

/// lambda_2 with 1/lambda_pump = 1/lambda_one + 1/lambda_2 (all nm).
/// Throws std::domain_error unless 0 < lambda_pump < lambda_one.
double conjugate_wavelength(double lambda_pump, double lambda_one);

/// Narrowband-monochromator coincidence rate
/// |Phi(omega_i0 - omega_M)|^2 |f(omega_p - omega_M)|^2.
double coincidence_rate_analytic(const SpectralFunction& phi, const SpectralFunction& remote,
                                 double omega_M, double omega_p, double omega_i0);

/// FWHM of a sampled single-peaked curve by linear interpolation of the
/// half-maximum crossings on either side of the maximum. NaN when a side
/// never drops below half maximum.
double full_width_half_max(std::span<const double> x, std::span<const double> y);

/// Midpoint of the same two half-maximum crossings; less sensitive to noise
/// on a flat top than the argmax. NaN when a side never drops below half.
double half_maximum_center(std::span<const double> x, std::span<const double> y);

/// Reads `omega_or_lambda,amplitude[,phase_rad]` CSV with a header row. A
/// first-column name containing "lambda" or "nm" is read as wavelength in nm,
/// anything else as angular frequency in rad/s. Throws std::runtime_error
/// with the offending line number on malformed input.
SpectralFunction load_tabulated_csv(std::istream& in);
SpectralFunction load_tabulated_csv(const std::filesystem::path& path);

/// Writes `lambda_nm,amplitude,phase_rad` rows in ascending wavelength.
void write_tabulated_csv(const SpectralFunction& table, std::ostream& out);

}  // namespace rspec
