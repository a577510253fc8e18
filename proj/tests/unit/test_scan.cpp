#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rspec/scan.hpp"
#include "rspec/units.hpp"

using rspec::RunConfig;
using rspec::ScanCurve;

namespace {

std::string csv(const ScanCurve& curve) {
  std::ostringstream out;
  rspec::write_scan_csv(curve, out);
  return out.str();
}

std::vector<double> conj_axis(const ScanCurve& c) {
  std::vector<double> x;
  for (const auto& p : c.points) x.push_back(p.lambda_conj_nm);
  return x;
}

std::vector<double> normalized(const ScanCurve& c) {
  std::vector<double> y;
  for (const auto& p : c.points) y.push_back(p.normalized.value_or(0.0));
  return y;
}

RunConfig small_mc() {
  auto c = RunConfig::defaults();
  c.scan.points = 5;
  c.scan.dwell_s = 0.1;
  c.coincidence.search_s = 0.2;
  return c;
}

TEST(AnalyticScan, PeakSitsAtFilterCenter) {
  auto c = RunConfig::defaults();
  c.scan.points = 121;
  const auto curve = rspec::analytic_scan(c);
  ASSERT_EQ(curve.points.size(), 121u);
  EXPECT_TRUE(curve.analytic);
  const auto x = conj_axis(curve);
  const auto y = normalized(curve);
  EXPECT_NEAR(rspec::half_maximum_center(x, y), 850.0, 0.1);
  const auto peak = std::max_element(y.begin(), y.end()) - y.begin();
  EXPECT_NEAR(x[static_cast<std::size_t>(peak)], 850.0, 0.5);
}

TEST(AnalyticScan, Invariants) {
  auto c = RunConfig::defaults();
  c.scan.points = 40;
  const auto curve = rspec::analytic_scan(c);
  const double inv_p = 1.0 / c.pump_lambda_nm;
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    const auto& p = curve.points[i];
    EXPECT_NEAR((1.0 / p.lambda_M_nm + 1.0 / p.lambda_conj_nm) / inv_p, 1.0, 1e-9);
    EXPECT_LE(p.coincidences, std::min(p.singles1, p.singles2));
    EXPECT_GE(p.coincidences, 0.0);
    if (i) {
      EXPECT_GT(p.lambda_M_nm, curve.points[i - 1].lambda_M_nm);
      EXPECT_LT(p.lambda_conj_nm, curve.points[i - 1].lambda_conj_nm);
    }
  }
}

TEST(AnalyticScan, RectangleFilterGivesScaledRectangle) {
  auto c = RunConfig::defaults();
  c.remote_filter.kind = "rectangle";
  c.monochromator.width_nm = 0.1;
  c.detector1.dark_rate = 0.0;
  c.detector2.dark_rate = 0.0;
  c.scan.points = 81;
  const auto curve = rspec::analytic_scan(c);
  const auto y = normalized(curve);
  const double top = *std::max_element(y.begin(), y.end());
  for (const auto& p : curve.points) {
    const double d = std::abs(p.lambda_conj_nm - 850.0);
    const double v = p.normalized.value_or(0.0) / top;
    if (d < 4.0) EXPECT_NEAR(v, 1.0, 0.02) << p.lambda_conj_nm;
    if (d > 6.5) EXPECT_LT(v, 0.02) << p.lambda_conj_nm;
  }
}

TEST(AnalyticScan, NormalizationCancelsLocalArmScale) {
  auto c = RunConfig::defaults();
  c.scan.points = 15;
  c.scan.dwell_s = 1.0;
  c.detector2.dark_rate = 0.0;
  c.detector2.dead_time = 0.0;
  const auto base = rspec::analytic_scan(c);
  c.monochromator.peak = 0.6;
  c.detector2.efficiency = 0.2;
  const auto scaled = rspec::analytic_scan(c);
  for (std::size_t i = 0; i < base.points.size(); ++i) {
    EXPECT_NEAR(*scaled.points[i].normalized / *base.points[i].normalized, 1.0, 1e-9);
  }
}

TEST(AnalyticScan, EmptyGridIsRejected) {
  auto c = RunConfig::defaults();
  c.scan.points = 0;
  EXPECT_THROW(rspec::analytic_scan(c), rspec::ConfigError);
}

TEST(ResolveDwell, AutoDwellReachesTarget) {
  auto c = RunConfig::defaults();
  const double dwell = rspec::resolve_dwell(c);
  EXPECT_GT(dwell, 0.0);
  EXPECT_NEAR(std::round(dwell / 0.01) * 0.01, dwell, 1e-12);
  c.scan.dwell_s = dwell;
  const auto curve = rspec::analytic_scan(c);
  double peak = 0.0;
  for (const auto& p : curve.points) peak = std::max(peak, p.coincidences);
  EXPECT_GE(peak, c.scan.min_peak_coincidences);
  c.scan.dwell_s = 0.5;
  EXPECT_EQ(rspec::resolve_dwell(c), 0.5);
}

TEST(Reconstruct, PeakNormalizedAmplitudeOnSignalAxis) {
  auto c = RunConfig::defaults();
  c.scan.points = 61;
  const auto curve = rspec::analytic_scan(c);
  const auto f = rspec::reconstruct(curve);
  EXPECT_NEAR(f.peak(), 1.0, 1e-12);
  const auto& nodes = f.nodes();
  const auto top = std::max_element(nodes.begin(), nodes.end(),
                                    [](const auto& a, const auto& b) { return std::abs(a.amplitude) < std::abs(b.amplitude); });
  EXPECT_NEAR(rspec::nm_from_omega(top->omega), 850.0, 1.0);
}

TEST(Reconstruct, SkipsMissingPointsAndRejectsEmpty) {
  ScanCurve curve;
  rspec::ScanPoint p;
  p.lambda_conj_nm = 850.0;
  p.normalized = 0.2;
  curve.points.push_back(p);
  p.lambda_conj_nm = 851.0;
  p.normalized.reset();
  curve.points.push_back(p);
  const auto f = rspec::reconstruct(curve);
  ASSERT_EQ(f.nodes().size(), 1u);
  EXPECT_DOUBLE_EQ(f.nodes()[0].amplitude.real(), 1.0);

  curve.points[0].normalized = 0.0;
  EXPECT_THROW(rspec::reconstruct(curve), rspec::EmptyReconstructionError);
  EXPECT_THROW(rspec::reconstruct(ScanCurve{}), rspec::EmptyReconstructionError);
}

TEST(ScanCsv, HeaderAndMissingValues) {
  ScanCurve curve;
  rspec::ScanPoint p;
  p.lambda_M_nm = 990.5;
  p.lambda_conj_nm = 850.0;
  p.dwell_s = 0.25;
  curve.points.push_back(p);
  const auto text = csv(curve);
  EXPECT_EQ(text.substr(0, text.find('\n')), "lambda_M_nm,lambda_conj_nm,singles1,singles2,coinc,dwell_s,normalized");
  EXPECT_NE(text.find("990.5,850,0,0,0,0.25,nan"), std::string::npos);
}

TEST(Acquire, DeterministicPerSeed) {
  const auto c = RunConfig::defaults();
  const double lambda = c.simulate_lambda_nm();
  const auto a = rspec::acquire(c, lambda, 0.02, 5);
  const auto b = rspec::acquire(c, lambda, 0.02, 5);
  const auto d = rspec::acquire(c, lambda, 0.02, 6);
  EXPECT_EQ(a.detector1, b.detector1);
  EXPECT_EQ(a.detector2, b.detector2);
  EXPECT_NE(a.detector1, d.detector1);
  EXPECT_EQ(a.detector1.detector_id, 1);
  EXPECT_EQ(a.detector2.detector_id, 2);
}

TEST(RunScan, DeterministicAndThreadCountIndependent) {
  auto c = small_mc();
  c.threads = 1;
  const auto one = rspec::run_scan(c);
  c.threads = 3;
  const auto three = rspec::run_scan(c);
  EXPECT_EQ(csv(one), csv(three));
  ASSERT_TRUE(one.alignment);
  EXPECT_NEAR(static_cast<double>(one.alignment->best_offset_ps), 123'456'789'000.0, 1250.0);
}

TEST(RunScan, SnapshotReproducesScan) {
  const auto first = rspec::run_scan(small_mc());
  const auto again = rspec::run_scan(rspec::config_from_json(first.config));
  EXPECT_EQ(csv(first), csv(again));
  EXPECT_EQ(first.config, again.config);
}

TEST(RunScan, AgreesWithAnalyticExpectation) {
  const auto c = small_mc();
  const auto mc = rspec::run_scan(c);
  const auto ex = rspec::analytic_scan(c);
  ASSERT_EQ(mc.points.size(), ex.points.size());
  for (std::size_t i = 0; i < mc.points.size(); ++i) {
    const auto& m = mc.points[i];
    const auto& e = ex.points[i];
    EXPECT_NEAR(m.singles1, e.singles1, 5.0 * std::sqrt(e.singles1));
    EXPECT_NEAR(m.singles2, e.singles2, 5.0 * std::sqrt(e.singles2));
    EXPECT_NEAR(m.coincidences, e.coincidences, 5.0 * std::sqrt(e.coincidences) + 1.0);
  }
  const auto peak = std::max_element(mc.points.begin(), mc.points.end(),
                                     [](const auto& a, const auto& b) { return a.coincidences < b.coincidences; });
  EXPECT_GT(peak->verify_significance, 5.0);
}

TEST(RunScan, NoCorrelationRaisesNoAlignment) {
  auto c = small_mc();
  c.detector1.efficiency = 0.0;
  c.detector1.dark_rate = 5e4;
  EXPECT_THROW(rspec::run_scan(c), rspec::NoAlignmentError);
}

}  // namespace
