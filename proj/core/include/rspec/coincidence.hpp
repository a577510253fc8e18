#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <utility>
#include <vector>

#include "rspec/timetag.hpp"

namespace rspec {

/// Two clicks coincide when |t2 - t1 - offset| <= width / 2.
struct CoincidenceWindow {
  double width = 5e-9;  // s

  void validate() const;
  std::int64_t width_ps() const;
};

struct MatchSummary {
  std::uint64_t count = 0;
  std::int64_t residual_sum_ps = 0;  // sum of (t2 - offset - t1) over matched pairs
};

/// Greedy earliest-first one-to-one matching of two ascending picosecond
/// sequences after shifting the second by -offset.
MatchSummary match_coincidences(std::span<const std::int64_t> t1, std::span<const std::int64_t> t2,
                                std::int64_t offset_ps, std::int64_t width_ps);

std::uint64_t count_coincidences(std::span<const std::int64_t> t1, std::span<const std::int64_t> t2,
                                 std::int64_t offset_ps, std::int64_t width_ps);

std::uint64_t count_coincidences(const EventStream& s1, const EventStream& s2, double offset,
                                 const CoincidenceWindow& window);

/// Histogram of all differences t2 - t1 in [origin, origin + bins * bin).
/// Bin edges sit on integer multiples of bin_ps.
struct DifferenceHistogram {
  std::int64_t origin_ps = 0;
  std::int64_t bin_ps = 1;
  std::vector<std::uint32_t> counts;

  std::int64_t bin_start(std::size_t i) const {
    return origin_ps + static_cast<std::int64_t>(i) * bin_ps;
  }
  std::int64_t bin_center(std::size_t i) const { return bin_start(i) + bin_ps / 2; }
  /// Index of the bin holding `shift_ps`, or counts.size() when outside.
  std::size_t bin_of(std::int64_t shift_ps) const;
};

/// Sorted-merge sweep over all inter-stream differences within
/// +-range_ps (rounded out to whole bins). The shift range is partitioned
/// across `threads` workers, each owning a disjoint slice of bins.
DifferenceHistogram difference_histogram(std::span<const std::int64_t> t1,
                                         std::span<const std::int64_t> t2, std::int64_t range_ps,
                                         std::int64_t bin_ps, unsigned threads = 1);

struct AlignmentOptions {
  double search_range = 1.0;  // s
  double coarse_bin = 100e-9; // s
  CoincidenceWindow window;
  double significance_threshold = 5.0;
  unsigned threads = 0;  // 0: hardware concurrency

  void validate() const;
};

struct AlignmentResult {
  double best_offset = 0.0;  // s
  std::int64_t best_offset_ps = 0;
  std::int64_t grid_offset_ps = 0;  // argmax of the fine scan before centering
  DifferenceHistogram histogram;
  std::vector<std::pair<std::int64_t, std::uint64_t>> fine;  // (shift_ps, coincidences)
  std::uint64_t peak_count = 0;  // histogram count in the bin holding best_offset
  double background_mean = 0.0;  // counts/bin around the peak
  /// (peak - background) / sqrt(background) of the coarse peak.
  double significance = 0.0;
  /// Gaussian-equivalent significance of the coarse peak after correcting
  /// the Poisson tail probability for the number of bins searched.
  double global_significance = 0.0;
  bool aligned = false;
};

/// Recovers the offset between two time bases by maximizing coincidences:
/// a coarse difference histogram locates the peak, a window/4 scan of
/// count_coincidences around it picks the best shift, and the mean residual
/// of the matched pairs centers it.
AlignmentResult align(const EventStream& s1, const EventStream& s2, const AlignmentOptions& options);

/// `shift_ps,count` rows: the coarse histogram within +-context bins of the
/// peak, followed by the fine scan.
void write_alignment_csv(const AlignmentResult& result, std::ostream& out,
                         std::size_t context_bins = 200);

}  // namespace rspec
