#include "rspec/coincidence.hpp"

#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>

#include "rspec/units.hpp"

namespace rspec {

namespace {

constexpr std::size_t kBackgroundHalfWidth = 256;  // bins either side of the peak
constexpr std::size_t kPeakExclusion = 2;
constexpr double kMaxSignificance = 40.0;

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
  const std::int64_t q = a / b;
  return (a % b != 0 && ((a < 0) != (b < 0))) ? q - 1 : q;
}

bool closer_to_zero(std::int64_t a, std::int64_t b) {
  const auto aa = a < 0 ? -a : a;
  const auto bb = b < 0 ? -b : b;
  return aa < bb || (aa == bb && a < b);
}

void sweep(std::span<const std::int64_t> t1, std::span<const std::int64_t> t2, std::int64_t lo,
           std::int64_t hi, std::int64_t origin, std::int64_t bin, std::uint32_t* counts) {
  std::size_t j = 0;
  for (const auto a : t1) {
    while (j < t2.size() && t2[j] - a < lo) ++j;
    for (std::size_t k = j; k < t2.size(); ++k) {
      const auto d = t2[k] - a;
      if (d >= hi) break;
      ++counts[(d - origin) / bin];
    }
  }
}

double global_significance(std::uint64_t peak, double background, std::size_t trials) {
  using boost::math::normal;
  if (peak == 0) return -kMaxSignificance;
  double p_local = 0.0;
  if (background > 0.0) {
    p_local = boost::math::gamma_p(static_cast<double>(peak), background);
  }
  const double p_global = p_local >= 1.0 ? 1.0 : -std::expm1(static_cast<double>(trials) * std::log1p(-p_local));
  const double p = std::clamp(p_global, 1e-300, 1.0 - 1e-16);
  return std::clamp(boost::math::quantile(boost::math::complement(normal(), p)), -kMaxSignificance,
                    kMaxSignificance);
}

}  // namespace

void CoincidenceWindow::validate() const {
  if (!(width > 0.0) || width_ps() <= 0) throw std::invalid_argument("coincidence window must be positive");
}

std::int64_t CoincidenceWindow::width_ps() const { return to_ps(width); }

MatchSummary match_coincidences(std::span<const std::int64_t> t1, std::span<const std::int64_t> t2,
                                std::int64_t offset_ps, std::int64_t width_ps) {
  MatchSummary out;
  std::size_t i = 0;
  std::size_t j = 0;
  while (i < t1.size() && j < t2.size()) {
    const std::int64_t d = t2[j] - offset_ps - t1[i];
    if (2 * d < -width_ps) {
      ++j;
    } else if (2 * d > width_ps) {
      ++i;
    } else {
      ++out.count;
      out.residual_sum_ps += d;
      ++i;
      ++j;
    }
  }
  return out;
}

std::uint64_t count_coincidences(std::span<const std::int64_t> t1, std::span<const std::int64_t> t2,
                                 std::int64_t offset_ps, std::int64_t width_ps) {
  return match_coincidences(t1, t2, offset_ps, width_ps).count;
}

std::uint64_t count_coincidences(const EventStream& s1, const EventStream& s2, double offset,
                                 const CoincidenceWindow& window) {
  window.validate();
  const auto t1 = s1.times_ps();
  const auto t2 = s2.times_ps();
  return count_coincidences(t1, t2, to_ps(offset), window.width_ps());
}

std::size_t DifferenceHistogram::bin_of(std::int64_t shift_ps) const {
  if (shift_ps < origin_ps) return counts.size();
  const auto i = static_cast<std::size_t>((shift_ps - origin_ps) / bin_ps);
  return std::min(i, counts.size());
}

DifferenceHistogram difference_histogram(std::span<const std::int64_t> t1,
                                         std::span<const std::int64_t> t2, std::int64_t range_ps,
                                         std::int64_t bin_ps, unsigned threads) {
  if (bin_ps <= 0 || range_ps <= 0) throw std::invalid_argument("histogram bin and range must be positive");
  DifferenceHistogram h;
  h.bin_ps = bin_ps;
  const std::int64_t half_bins = floor_div(range_ps + bin_ps - 1, bin_ps);
  h.origin_ps = -half_bins * bin_ps;
  const auto nbins = static_cast<std::size_t>(2 * half_bins);
  h.counts.assign(nbins, 0);

  threads = std::max(1u, threads);
  const std::size_t per = (nbins + threads - 1) / threads;
  std::vector<std::jthread> workers;
  for (unsigned w = 0; w < threads; ++w) {
    const std::size_t first = w * per;
    if (first >= nbins) break;
    const std::size_t last = std::min(nbins, first + per);
    const std::int64_t lo = h.bin_start(first);
    const std::int64_t hi = h.bin_start(last);
    auto job = [=, &h] { sweep(t1, t2, lo, hi, h.origin_ps, bin_ps, h.counts.data()); };
    if (threads == 1) {
      job();
    } else {
      workers.emplace_back(job);
    }
  }
  return h;
}

void AlignmentOptions::validate() const {
  window.validate();
  if (!(search_range > 0.0)) throw std::invalid_argument("search range must be positive");
  if (!(coarse_bin >= window.width)) {
    throw std::invalid_argument("coarse bin must be at least the coincidence window");
  }
}

AlignmentResult align(const EventStream& s1, const EventStream& s2, const AlignmentOptions& options) {
  options.validate();
  const auto t1 = s1.times_ps();
  const auto t2 = s2.times_ps();
  const unsigned threads = options.threads ? options.threads : std::max(1u, std::thread::hardware_concurrency());

  AlignmentResult r;
  r.histogram = difference_histogram(t1, t2, to_ps(options.search_range), to_ps(options.coarse_bin), threads);
  const auto& counts = r.histogram.counts;

  // coarse peak, ties toward the smallest |shift|
  std::size_t peak = 0;
  for (std::size_t i = 1; i < counts.size(); ++i) {
    if (counts[i] > counts[peak] ||
        (counts[i] == counts[peak] &&
         closer_to_zero(r.histogram.bin_center(i), r.histogram.bin_center(peak)))) {
      peak = i;
    }
  }

  // local background from the neighbourhood of the peak
  double bg_sum = 0.0;
  std::size_t bg_n = 0;
  const std::size_t lo = peak > kBackgroundHalfWidth ? peak - kBackgroundHalfWidth : 0;
  const std::size_t hi = std::min(counts.size(), peak + kBackgroundHalfWidth + 1);
  for (std::size_t i = lo; i < hi; ++i) {
    if ((i > peak ? i - peak : peak - i) <= kPeakExclusion) continue;
    bg_sum += counts[i];
    ++bg_n;
  }
  r.background_mean = bg_n ? bg_sum / static_cast<double>(bg_n) : 0.0;
  const double coarse_peak = counts.empty() ? 0.0 : counts[peak];
  if (r.background_mean > 0.0) {
    r.significance = (coarse_peak - r.background_mean) / std::sqrt(r.background_mean);
  } else {
    r.significance = coarse_peak > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
  }
  r.global_significance = global_significance(static_cast<std::uint64_t>(coarse_peak),
                                              r.background_mean, counts.size());
  r.aligned = r.global_significance >= options.significance_threshold;

  // fine scan on absolute multiples of window/4 covering the peak bin +- one window
  const std::int64_t width = options.window.width_ps();
  const std::int64_t step = std::max<std::int64_t>(1, width / 4);
  const std::int64_t scan_lo = floor_div(r.histogram.bin_start(peak) - width, step) * step;
  const std::int64_t scan_hi = r.histogram.bin_start(peak) + r.histogram.bin_ps + width;
  std::int64_t best_shift = scan_lo;
  std::uint64_t best_count = 0;
  bool first = true;
  for (std::int64_t shift = scan_lo; shift <= scan_hi; shift += step) {
    const auto c = count_coincidences(t1, t2, shift, width);
    r.fine.emplace_back(shift, c);
    if (first || c > best_count || (c == best_count && closer_to_zero(shift, best_shift))) {
      best_shift = shift;
      best_count = c;
      first = false;
    }
  }
  r.grid_offset_ps = best_shift;
  const auto m = match_coincidences(t1, t2, best_shift, width);
  r.best_offset_ps = best_shift;
  if (m.count > 0) {
    const auto n = static_cast<std::int64_t>(m.count);
    r.best_offset_ps += floor_div(2 * m.residual_sum_ps + n, 2 * n);
  }
  r.best_offset = static_cast<double>(r.best_offset_ps) * kPicosecond;
  const auto b = r.histogram.bin_of(r.best_offset_ps);
  r.peak_count = b < counts.size() ? counts[b] : 0;
  return r;
}

void write_alignment_csv(const AlignmentResult& result, std::ostream& out, std::size_t context_bins) {
  out << "shift_ps,count\n";
  const auto& h = result.histogram;
  const auto peak = h.bin_of(result.best_offset_ps);
  if (peak < h.counts.size()) {
    const std::size_t lo = peak > context_bins ? peak - context_bins : 0;
    const std::size_t hi = std::min(h.counts.size(), peak + context_bins + 1);
    for (std::size_t i = lo; i < hi; ++i) out << h.bin_center(i) << ',' << h.counts[i] << '\n';
  }
  for (const auto& [shift, count] : result.fine) out << shift << ',' << count << '\n';
}

}  // namespace rspec
