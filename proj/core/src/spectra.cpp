#include "rspec/spectra.hpp"

#include <fftw3.h>

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>

#include "rspec/units.hpp"

namespace rspec {

namespace {

constexpr double kFourLn2 = 4.0 * std::numbers::ln2;
// sinc(x) = 1/2 at x = 1.895494267...
constexpr double kSincHalfPoint = 1.8954942670339809;
// |sinc|^2 tail beyond this many zeros carries < 0.1% of the power.
constexpr double kSincSupportZeros = 200.0;
constexpr double kGaussianSupportWidths = 4.0;

double sinc(double x) {
  if (std::abs(x) < 1e-8) return 1.0 - x * x / 6.0;
  return std::sin(x) / x;
}

void require_peak(double peak) {
  if (!(peak >= 0.0 && peak <= 1.0)) {
    throw std::invalid_argument("spectral peak amplitude must lie in [0, 1]");
  }
}

// FFTW planning is not thread-safe; execution on distinct plans is.
std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}

void forward_fft(std::vector<std::complex<double>>& data) {
  auto* buffer = reinterpret_cast<fftw_complex*>(data.data());
  fftw_plan plan;
  {
    std::lock_guard lock(fftw_planner_mutex());
    plan = fftw_plan_dft_1d(static_cast<int>(data.size()), buffer, buffer, FFTW_FORWARD,
                            FFTW_ESTIMATE);
  }
  fftw_execute(plan);
  std::lock_guard lock(fftw_planner_mutex());
  fftw_destroy_plan(plan);
}

struct Factor {
  double nu_center;
  double width;
};

std::vector<Factor> bounded_factors(const OpticalSetup& s) {
  std::vector<Factor> out;
  auto add = [&](const SpectralFunction& fn, double nu_center) {
    if (!fn.bounded()) return;
    const double w = fn.width();
    if (std::isfinite(w) && w > 0.0) out.push_back({nu_center, w});
  };
  auto tab_center = [](const SpectralFunction& fn) {
    if (fn.kind() != SpectralKind::tabulated) return fn.center();
    return 0.5 * (fn.nodes().front().omega + fn.nodes().back().omega);
  };
  add(s.phi, tab_center(s.phi));
  add(s.remote, tab_center(s.remote) - s.omega_s0);
  add(s.monochromator, s.omega_i0 - s.omega_M - tab_center(s.monochromator));
  return out;
}

bool edges_decayed(const FrequencyGrid& grid, const OpticalSetup& setup, double* ratio) {
  double peak = 0.0;
  for (std::size_t j = 0; j < grid.size(); ++j) {
    peak = std::max(peak, std::abs(setup.spectral_product(grid.at(j))));
  }
  const double edge = std::max(std::abs(setup.spectral_product(grid.at(0))),
                               std::abs(setup.spectral_product(grid.at(grid.size() - 1))));
  if (ratio) *ratio = peak > 0.0 ? edge / peak : 0.0;
  return peak == 0.0 || edge / peak < kEdgeDecayLimit;
}

}  // namespace

// ---------------------------------------------------------------- grid

FrequencyGrid FrequencyGrid::make(double center_nu, double span, std::size_t n_points) {
  if (n_points < 2 || !std::has_single_bit(n_points)) {
    throw std::invalid_argument("frequency grid size must be a power of two >= 2");
  }
  if (!(span > 0.0) || !std::isfinite(span) || !std::isfinite(center_nu)) {
    throw std::invalid_argument("frequency grid span must be positive and finite");
  }
  return FrequencyGrid(center_nu, span, n_points);
}

double FrequencyGrid::tau_spacing() const { return kTwoPi / (static_cast<double>(n_) * spacing()); }

// ---------------------------------------------------------------- spectral functions

SpectralFunction SpectralFunction::gaussian(double center, double fwhm, double peak) {
  require_peak(peak);
  if (!(fwhm > 0.0)) throw std::invalid_argument("gaussian FWHM must be positive");
  SpectralFunction f;
  f.kind_ = SpectralKind::gaussian;
  f.center_ = center;
  f.width_ = fwhm;
  f.peak_ = peak;
  return f;
}

SpectralFunction SpectralFunction::rectangle(double center, double width, double peak) {
  require_peak(peak);
  if (!(width > 0.0)) throw std::invalid_argument("rectangle width must be positive");
  SpectralFunction f;
  f.kind_ = SpectralKind::rectangle;
  f.center_ = center;
  f.width_ = width;
  f.peak_ = peak;
  return f;
}

SpectralFunction SpectralFunction::flat(double peak) {
  return rectangle(0.0, std::numeric_limits<double>::infinity(), peak);
}

SpectralFunction SpectralFunction::sinc_phase_matching(double center, double mismatch,
                                                       double length, double peak) {
  require_peak(peak);
  if (!(mismatch > 0.0) || !(length > 0.0)) {
    throw std::invalid_argument("phase-matching mismatch and crystal length must be positive");
  }
  SpectralFunction f;
  f.kind_ = SpectralKind::sinc_phase_matching;
  f.center_ = center;
  f.peak_ = peak;
  f.mismatch_ = mismatch;
  f.length_ = length;
  f.width_ = 4.0 * kSincHalfPoint / (mismatch * length);
  return f;
}

SpectralFunction SpectralFunction::edge(double center, EdgePass pass, double peak) {
  require_peak(peak);
  SpectralFunction f;
  f.kind_ = SpectralKind::edge;
  f.center_ = center;
  f.peak_ = peak;
  f.pass_ = pass;
  return f;
}

SpectralFunction SpectralFunction::tabulated(std::vector<SpectralNode> nodes) {
  if (nodes.empty()) throw std::invalid_argument("tabulated spectral function needs nodes");
  double peak = 0.0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i > 0 && !(nodes[i].omega > nodes[i - 1].omega)) {
      throw std::invalid_argument("tabulated abscissae must be strictly increasing");
    }
    peak = std::max(peak, std::abs(nodes[i].amplitude));
  }
  require_peak(peak);
  SpectralFunction f;
  f.kind_ = SpectralKind::tabulated;
  f.center_ = 0.5 * (nodes.front().omega + nodes.back().omega);
  f.width_ = nodes.back().omega - nodes.front().omega;
  f.peak_ = peak;
  f.nodes_ = std::move(nodes);
  return f;
}

std::complex<double> SpectralFunction::operator()(double omega) const {
  const double x = omega - center_;
  switch (kind_) {
    case SpectralKind::gaussian:
      return peak_ * std::exp(-kFourLn2 * x * x / (width_ * width_));
    case SpectralKind::rectangle:
      return std::abs(x) <= 0.5 * width_ ? peak_ : 0.0;
    case SpectralKind::sinc_phase_matching:
      return peak_ * sinc(0.5 * mismatch_ * length_ * x);
    case SpectralKind::edge:
      if (pass_ == EdgePass::above) return x >= 0.0 ? peak_ : 0.0;
      return x <= 0.0 ? peak_ : 0.0;
    case SpectralKind::tabulated: {
      if (omega < nodes_.front().omega || omega > nodes_.back().omega) return 0.0;
      auto it = std::upper_bound(nodes_.begin(), nodes_.end(), omega,
                                 [](double w, const SpectralNode& n) { return w < n.omega; });
      if (it == nodes_.end()) return nodes_.back().amplitude;
      const auto& hi = *it;
      const auto& lo = *(it - 1);
      const double t = (omega - lo.omega) / (hi.omega - lo.omega);
      return lo.amplitude + t * (hi.amplitude - lo.amplitude);
    }
  }
  return 0.0;
}

double SpectralFunction::width() const {
  return kind_ == SpectralKind::edge ? 0.0 : width_;
}

bool SpectralFunction::bounded() const {
  switch (kind_) {
    case SpectralKind::edge:
      return false;
    case SpectralKind::rectangle:
      return std::isfinite(width_);
    default:
      return true;
  }
}

std::pair<double, double> SpectralFunction::support() const {
  if (!bounded()) throw std::domain_error("spectral function has unbounded support");
  switch (kind_) {
    case SpectralKind::gaussian:
      return {center_ - kGaussianSupportWidths * width_, center_ + kGaussianSupportWidths * width_};
    case SpectralKind::rectangle:
      return {center_ - 0.5 * width_, center_ + 0.5 * width_};
    case SpectralKind::sinc_phase_matching: {
      const double half = kSincSupportZeros * kTwoPi / (mismatch_ * length_);
      return {center_ - half, center_ + half};
    }
    case SpectralKind::tabulated:
      return {nodes_.front().omega, nodes_.back().omega};
    case SpectralKind::edge:
      break;
  }
  throw std::domain_error("spectral function has unbounded support");
}

double SpectralFunction::integrated_intensity() const {
  const double p2 = peak_ * peak_;
  switch (kind_) {
    case SpectralKind::gaussian:
      return p2 * width_ * std::sqrt(std::numbers::pi / (2.0 * kFourLn2));
    case SpectralKind::rectangle:
      return p2 * width_;
    case SpectralKind::sinc_phase_matching:
      return p2 * kTwoPi / (mismatch_ * length_);
    case SpectralKind::edge:
      return p2 > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    case SpectralKind::tabulated: {
      // exact for the piecewise-linear interpolant
      double sum = 0.0;
      for (std::size_t i = 1; i < nodes_.size(); ++i) {
        const auto a = nodes_[i - 1].amplitude;
        const auto b = nodes_[i].amplitude;
        const double h = nodes_[i].omega - nodes_[i - 1].omega;
        sum += h * (std::norm(a) + std::real(a * std::conj(b)) + std::norm(b)) / 3.0;
      }
      return sum;
    }
  }
  return 0.0;
}

SpectralFunction SpectralFunction::shifted(double delta) const {
  SpectralFunction f = *this;
  f.center_ += delta;
  for (auto& n : f.nodes_) n.omega += delta;
  return f;
}

// ---------------------------------------------------------------- psi(tau)

std::complex<double> OpticalSetup::spectral_product(double nu) const {
  return phi(nu) * remote(omega_s0 + nu) * monochromator(omega_i0 - nu - omega_M);
}

double OpticalSetup::total_gvd_length() const {
  return signal_path.gvd_length() + idler_path.gvd_length();
}

double TwoPhotonWavefunction::integrated_g2() const {
  double sum = 0.0;
  for (double v : g2) sum += v;
  return sum * tau_step;
}

TwoPhotonWavefunction compute_psi(const FrequencyGrid& grid, const OpticalSetup& setup) {
  const std::size_t n = grid.size();
  const double dnu = grid.spacing();
  const double chirp = setup.total_gvd_length();

  std::vector<std::complex<double>> data(n);
  double peak = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const double nu = grid.at(j);
    auto value = setup.spectral_product(nu) * std::polar(1.0, -0.5 * chirp * nu * nu);
    peak = std::max(peak, std::abs(value));
    // (-1)^j moves the tau origin to the middle of the output
    data[j] = (j % 2 == 0) ? value : -value;
  }
  const double edge = std::max(std::abs(data.front()), std::abs(data.back()));
  if (peak > 0.0 && !(edge / peak < kEdgeDecayLimit)) {
    std::ostringstream msg;
    msg << "spectral product not decayed at grid edges: |edge|/|max| = " << edge / peak
        << " (limit " << kEdgeDecayLimit << ", grid center " << grid.center_nu() << " rad/s, span "
        << grid.span() << " rad/s)";
    throw AliasingError(msg.str());
  }

  forward_fft(data);

  TwoPhotonWavefunction out;
  out.tau_step = grid.tau_spacing();
  out.tau_origin = -static_cast<double>(n / 2) * out.tau_step;
  out.psi.resize(n);
  out.g2.resize(n);
  const double nu0 = grid.at(0);
  const double scale = dnu / std::sqrt(kTwoPi);
  for (std::size_t k = 0; k < n; ++k) {
    const double tau = out.tau(k);
    out.psi[k] = scale * std::polar(1.0, -nu0 * tau) * data[k];
    out.g2[k] = std::norm(out.psi[k]);
  }
  return out;
}

FrequencyGrid auto_grid(const OpticalSetup& setup, double span_factor) {
  const auto factors = bounded_factors(setup);
  if (factors.empty()) {
    throw std::invalid_argument("spectral product has no bounded factor; cannot size a grid");
  }
  auto narrow = std::min_element(factors.begin(), factors.end(),
                                 [](const Factor& a, const Factor& b) { return a.width < b.width; });
  auto wide = std::max_element(factors.begin(), factors.end(),
                               [](const Factor& a, const Factor& b) { return a.width < b.width; });
  const double max_step = narrow->width / 16.0;
  double span = span_factor * wide->width;
  constexpr std::size_t kMaxPoints = std::size_t{1} << 24;
  double ratio = 0.0;
  while (true) {
    const auto needed = static_cast<std::size_t>(std::ceil(span / max_step)) + 1;
    const std::size_t n = std::bit_ceil(std::max<std::size_t>(needed, 16));
    if (n > kMaxPoints) break;
    auto grid = FrequencyGrid::make(narrow->nu_center, span, n);
    if (edges_decayed(grid, setup, &ratio)) return grid;
    span *= 2.0;
  }
  std::ostringstream msg;
  msg << "no grid up to " << kMaxPoints << " points satisfies edge decay (last ratio " << ratio << ")";
  throw AliasingError(msg.str());
}

// ---------------------------------------------------------------- analytic rates

double conjugate_wavelength(double lambda_pump, double lambda_one) {
  if (!(lambda_pump > 0.0) || !(lambda_one > lambda_pump) || !std::isfinite(lambda_one)) {
    throw std::domain_error("conjugate wavelength requires 0 < lambda_pump < lambda_one");
  }
  return lambda_pump * lambda_one / (lambda_one - lambda_pump);
}

double coincidence_rate_analytic(const SpectralFunction& phi, const SpectralFunction& remote,
                                 double omega_M, double omega_p, double omega_i0) {
  return phi.intensity(omega_i0 - omega_M) * remote.intensity(omega_p - omega_M);
}

namespace {

// Interpolated half-maximum crossings either side of the maximum.
std::optional<std::pair<double, double>> half_max_crossings(std::span<const double> x,
                                                            std::span<const double> y) {
  if (x.size() != y.size() || y.empty()) return std::nullopt;
  const auto imax = static_cast<std::size_t>(std::max_element(y.begin(), y.end()) - y.begin());
  const double half = 0.5 * y[imax];
  auto cross = [&](std::size_t inside, std::size_t outside) {
    const double t = (y[inside] - half) / (y[inside] - y[outside]);
    return x[inside] + t * (x[outside] - x[inside]);
  };
  std::size_t j = imax;
  while (j > 0 && y[j - 1] >= half) --j;
  if (j == 0) return std::nullopt;
  std::size_t k = imax;
  while (k + 1 < y.size() && y[k + 1] >= half) ++k;
  if (k + 1 == y.size()) return std::nullopt;
  return std::pair{cross(j, j - 1), cross(k, k + 1)};
}

}  // namespace

double full_width_half_max(std::span<const double> x, std::span<const double> y) {
  const auto c = half_max_crossings(x, y);
  return c ? std::abs(c->second - c->first) : std::numeric_limits<double>::quiet_NaN();
}

double half_maximum_center(std::span<const double> x, std::span<const double> y) {
  const auto c = half_max_crossings(x, y);
  return c ? 0.5 * (c->first + c->second) : std::numeric_limits<double>::quiet_NaN();
}

}  // namespace rspec
