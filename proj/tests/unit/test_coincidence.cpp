#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "oracles.hpp"
#include "rspec/coincidence.hpp"
#include "rspec/random.hpp"

using rspec::AlignmentOptions;
using rspec::EventStream;

namespace {

EventStream from_ps(std::vector<std::int64_t> times, std::int64_t duration_ps) {
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  EventStream s;
  s.duration_ps = static_cast<std::uint64_t>(duration_ps);
  for (auto t : times) {
    if (t >= 0) s.ticks.push_back(static_cast<std::uint64_t>(t));
  }
  return s;
}

std::vector<std::int64_t> poisson_ps(double rate, double duration, rspec::Rng& rng) {
  std::vector<std::int64_t> out;
  for (double t = rng.exponential(rate); t < duration; t += rng.exponential(rate)) {
    out.push_back(std::llround(t * 1e12));
  }
  return out;
}

struct Pair {
  EventStream s1;
  EventStream s2;
};

// s2 holds a fraction of s1's events shifted by `offset_ps` with gaussian
// jitter, plus its own background.
Pair correlated(std::uint64_t seed, std::int64_t offset_ps, double duration = 0.5) {
  rspec::Rng rng(seed);
  auto t1 = poisson_ps(4e4, duration, rng);
  auto t2 = poisson_ps(2e3, duration, rng);
  for (auto t : t1) {
    if (rng.uniform() < 0.05) t2.push_back(t + offset_ps + std::llround(150.0 * rng.normal()));
  }
  const auto dur = std::llround(duration * 1e12);
  return {from_ps(t1, dur), from_ps(t2, dur + std::max<std::int64_t>(offset_ps, 0))};
}

AlignmentOptions quick_options() {
  AlignmentOptions o;
  o.search_range = 0.1;
  o.threads = 2;
  return o;
}

TEST(CountCoincidences, HandCount) {
  const std::vector<std::int64_t> s1 = {0, 10'000, 20'000};
  const std::vector<std::int64_t> s2 = {1'000, 100'000};
  EXPECT_EQ(rspec::count_coincidences(s1, s2, 0, 5'000), 1u);
  const auto a = from_ps(s1, 200'000);
  const auto b = from_ps(s2, 200'000);
  EXPECT_EQ(rspec::count_coincidences(a, b, 0.0, rspec::CoincidenceWindow{5e-9}), 1u);
}

TEST(CountCoincidences, WindowEdgeIsInclusive) {
  const std::vector<std::int64_t> s1 = {0};
  EXPECT_EQ(rspec::count_coincidences(s1, std::vector<std::int64_t>{2'500}, 0, 5'000), 1u);
  EXPECT_EQ(rspec::count_coincidences(s1, std::vector<std::int64_t>{2'501}, 0, 5'000), 0u);
  EXPECT_EQ(rspec::count_coincidences(s1, std::vector<std::int64_t>{-2'500}, 0, 5'000), 1u);
}

TEST(CountCoincidences, OneToOneMatching) {
  // two clicks on one side within the window of a single click on the other
  const std::vector<std::int64_t> s1 = {0, 1'000};
  const std::vector<std::int64_t> s2 = {500};
  EXPECT_EQ(rspec::count_coincidences(s1, s2, 0, 5'000), 1u);
}

TEST(CountCoincidences, PerfectCorrelation) {
  rspec::Rng rng(1);
  const auto t1 = poisson_ps(1e5, 0.1, rng);
  std::vector<std::int64_t> t2;
  for (auto t : t1) t2.push_back(t + 987'654'321);
  EXPECT_EQ(rspec::count_coincidences(t1, t2, 987'654'321, 5'000), t1.size());
}

TEST(CountCoincidences, SymmetricUnderSwapAndMonotoneInWidth) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto p = correlated(seed, 123'456'789, 0.1);
    const auto t1 = p.s1.times_ps();
    const auto t2 = p.s2.times_ps();
    std::uint64_t previous = 0;
    for (std::int64_t width : {100, 1'000, 5'000, 50'000, 500'000}) {
      const auto forward = rspec::count_coincidences(t1, t2, 123'456'000, width);
      EXPECT_EQ(forward, rspec::count_coincidences(t2, t1, -123'456'000, width));
      EXPECT_GE(forward, previous);
      previous = forward;
    }
  }
}

TEST(CountCoincidences, AccidentalRate) {
  rspec::Rng rng(7);
  const double r1 = 2e5;
  const double r2 = 1e5;
  const double duration = 1.0;
  const double width = 5e-9;
  const auto t1 = poisson_ps(r1, duration, rng);
  const auto t2 = poisson_ps(r2, duration, rng);
  const double expected = static_cast<double>(t1.size()) * static_cast<double>(t2.size()) * width / duration;
  const auto n = static_cast<double>(rspec::count_coincidences(t1, t2, 0, 5'000));
  EXPECT_NEAR(n, expected, 5.0 * std::sqrt(expected));
}

TEST(DifferenceHistogram, MatchesBruteForce) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    rspec::Rng rng(seed);
    const auto t1 = poisson_ps(2000, 1.0, rng);
    auto t2 = poisson_ps(1500, 1.0, rng);
    for (std::size_t i = 0; i < t1.size(); i += 3) t2.push_back(t1[i] + 40'000'000);
    std::sort(t2.begin(), t2.end());
    t2.erase(std::unique(t2.begin(), t2.end()), t2.end());
    ASSERT_LE(t1.size(), 2200u);
    for (unsigned threads : {1u, 3u}) {
      const auto h = rspec::difference_histogram(t1, t2, 300'000'000, 7'000'000, threads);
      EXPECT_EQ(h.origin_ps % h.bin_ps, 0);
      EXPECT_LE(h.origin_ps, -300'000'000);
      const auto expect = oracle::brute_force_histogram(t1, t2, h.origin_ps, h.bin_ps, h.counts.size());
      ASSERT_EQ(h.counts, expect) << seed << " threads " << threads;
    }
  }
}

TEST(DifferenceHistogram, BinLookup) {
  const auto h = rspec::difference_histogram(std::vector<std::int64_t>{0}, std::vector<std::int64_t>{5}, 100, 10);
  EXPECT_EQ(h.origin_ps, -100);
  EXPECT_EQ(h.counts.size(), 20u);
  EXPECT_EQ(h.bin_of(5), 10u);
  EXPECT_EQ(h.counts[10], 1u);
  EXPECT_EQ(h.bin_of(-101), h.counts.size());
  EXPECT_EQ(h.bin_of(100), h.counts.size());
  EXPECT_EQ(h.bin_center(10), 5);
}

TEST(Align, RecoversInjectedOffset) {
  const std::int64_t injected = 1'234'567;
  const auto p = correlated(11, injected);
  const auto r = rspec::align(p.s1, p.s2, quick_options());
  EXPECT_TRUE(r.aligned);
  EXPECT_NEAR(static_cast<double>(r.best_offset_ps), static_cast<double>(injected), 1250.0);
  EXPECT_EQ(r.best_offset, static_cast<double>(r.best_offset_ps) * 1e-12);
  EXPECT_EQ(r.peak_count, r.histogram.counts[r.histogram.bin_of(r.best_offset_ps)]);
  EXPECT_GT(r.significance, 5.0);
}

TEST(Align, NegativeOffsetsAndLargeShifts) {
  for (std::int64_t injected : {-42'000'000'000LL, -3'210LL, 87'654'321'000LL}) {
    const auto p = correlated(12, injected);
    const auto r = rspec::align(p.s1, p.s2, quick_options());
    ASSERT_TRUE(r.aligned) << injected;
    EXPECT_NEAR(static_cast<double>(r.best_offset_ps), static_cast<double>(injected), 1250.0);
  }
}

TEST(Align, IdenticalStreamsGiveZero) {
  const auto p = correlated(13, 0);
  const auto r = rspec::align(p.s1, p.s1, quick_options());
  EXPECT_TRUE(r.aligned);
  EXPECT_EQ(r.best_offset_ps, 0);
  EXPECT_GE(r.peak_count, p.s1.size());
  EXPECT_EQ(rspec::count_coincidences(p.s1, p.s1, 0.0, rspec::CoincidenceWindow{}), p.s1.size());
}

TEST(Align, UncorrelatedStreamsAreRejected) {
  int rejected = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    rspec::Rng rng(1000 + seed);
    const auto a = from_ps(poisson_ps(4e4, 0.5, rng), 500'000'000'000);
    const auto b = from_ps(poisson_ps(2e3, 0.5, rng), 500'000'000'000);
    if (!rspec::align(a, b, quick_options()).aligned) ++rejected;
  }
  EXPECT_GE(rejected, 99);
}

TEST(Align, ShiftEquivariance) {
  const auto p = correlated(14, 5'000'000);
  const auto base = rspec::align(p.s1, p.s2, quick_options());
  for (std::int64_t delta : {300'000'000LL, 7'000'000'000LL}) {
    EventStream shifted = p.s2;
    for (auto& t : shifted.ticks) t += static_cast<std::uint64_t>(delta);
    shifted.duration_ps += static_cast<std::uint64_t>(delta);
    const auto r = rspec::align(p.s1, shifted, quick_options());
    EXPECT_EQ(r.best_offset_ps, base.best_offset_ps + delta);
  }
}

TEST(Align, OptionValidation) {
  AlignmentOptions o;
  o.coarse_bin = 1e-9;
  EXPECT_THROW(o.validate(), std::invalid_argument);
  o = AlignmentOptions{};
  o.search_range = 0.0;
  EXPECT_THROW(o.validate(), std::invalid_argument);
  o = AlignmentOptions{};
  o.window.width = 0.0;
  EXPECT_THROW(o.validate(), std::invalid_argument);
}

TEST(Align, CsvReport) {
  const auto p = correlated(15, 2'000'000, 0.1);
  const auto r = rspec::align(p.s1, p.s2, quick_options());
  std::ostringstream out;
  rspec::write_alignment_csv(r, out, 5);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "shift_ps,count");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  EXPECT_EQ(rows, 11 + r.fine.size());
}

}  // namespace
