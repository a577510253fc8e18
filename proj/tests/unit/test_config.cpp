#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>

#include "rspec/config.hpp"
#include "rspec/spectra.hpp"
#include "rspec/units.hpp"

using nlohmann::json;
using rspec::ConfigError;
using rspec::RunConfig;

namespace {

std::vector<std::string> problems_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const ConfigError& e) {
    return e.problems();
  }
  return {};
}

bool mentions(const std::vector<std::string>& problems, const std::string& needle) {
  return std::any_of(problems.begin(), problems.end(),
                     [&](const std::string& p) { return p.find(needle) != std::string::npos; });
}

TEST(Config, DefaultsValidate) {
  const auto c = RunConfig::defaults();
  EXPECT_NO_THROW(c.validate());
  EXPECT_DOUBLE_EQ(c.signal_center_nm(), 850.0);
  EXPECT_NEAR(c.idler_center_nm(), rspec::conjugate_wavelength(457.9, 850.0), 1e-12);
  EXPECT_EQ(c.omega_s0() + c.omega_i0(), c.omega_p());
}

TEST(Config, JsonRoundTrip) {
  auto c = RunConfig::defaults();
  c.seed = 42;
  c.scan.points = 17;
  c.scan.dwell_s = 0.25;
  c.remote_filter.center_nm = 885.6;
  c.remote_filter.width_nm = 11.0;
  c.detector2.dark_rate = 321.0;
  c.clock1.offset = -1e-3;
  const json doc = rspec::to_json(c);
  const auto back = rspec::config_from_json(doc);
  EXPECT_EQ(rspec::to_json(back), doc);
  EXPECT_EQ(back.seed, 42u);
  EXPECT_EQ(back.scan.points, 17);
  EXPECT_EQ(*back.scan.dwell_s, 0.25);
  EXPECT_DOUBLE_EQ(back.detector2.dark_rate, 321.0);
}

TEST(Config, PartialDocumentOverlaysDefaults) {
  const auto c = rspec::config_from_json(json{{"seed", 7}, {"remote_filter", {{"width_nm", 4.0}}}});
  EXPECT_EQ(c.seed, 7u);
  EXPECT_EQ(*c.remote_filter.width_nm, 4.0);
  EXPECT_EQ(*c.remote_filter.center_nm, 850.0);
  EXPECT_EQ(c.scan.points, RunConfig::defaults().scan.points);
}

TEST(Config, UnknownFieldsAndTypeErrorsCarryPaths) {
  const auto problems = problems_of([] {
    rspec::config_from_json(json{{"detector1", {{"efficency", 0.5}}},
                                 {"scan", {{"points", "many"}}},
                                 {"bogus", 1}});
  });
  ASSERT_EQ(problems.size(), 3u);
  EXPECT_TRUE(mentions(problems, "detector1.efficency: unknown field"));
  EXPECT_TRUE(mentions(problems, "scan.points: expected an integer"));
  EXPECT_TRUE(mentions(problems, "bogus: unknown field"));
}

TEST(Config, ValidateReportsEveryProblem) {
  auto c = RunConfig::defaults();
  c.source.pair_rate = -1.0;
  c.detector1.efficiency = 2.0;
  c.clock2.drift = 1.0;
  c.simulate.duration_s = 0.0;
  const auto problems = problems_of([&] { c.validate(); });
  EXPECT_TRUE(mentions(problems, "source.pair_rate"));
  EXPECT_TRUE(mentions(problems, "detector1"));
  EXPECT_TRUE(mentions(problems, "clock2"));
  EXPECT_TRUE(mentions(problems, "simulate.duration_s"));
}

TEST(Config, EmptyScanGridIsAnError) {
  auto c = RunConfig::defaults();
  c.scan.points = 0;
  EXPECT_TRUE(c.scan_grid_nm().empty());
  EXPECT_TRUE(mentions(problems_of([&] { c.validate(); }), "scan.points"));
}

TEST(Config, AutoScanGridIsAscendingAroundConjugate) {
  const auto c = RunConfig::defaults();
  const auto grid = c.scan_grid_nm();
  ASSERT_EQ(grid.size(), 60u);
  EXPECT_TRUE(std::is_sorted(grid.begin(), grid.end()));
  EXPECT_NEAR(grid.front(), rspec::conjugate_wavelength(457.9, 880.0), 1e-9);
  EXPECT_NEAR(grid.back(), rspec::conjugate_wavelength(457.9, 820.0), 1e-9);
}

TEST(Config, ExplicitGridBounds) {
  auto c = RunConfig::defaults();
  c.scan.lambda_start_nm = 960.0;
  c.scan.lambda_stop_nm = 1020.0;
  c.scan.points = 7;
  const auto grid = c.scan_grid_nm();
  ASSERT_EQ(grid.size(), 7u);
  EXPECT_DOUBLE_EQ(grid[3], 990.0);
  c.scan.lambda_stop_nm.reset();
  EXPECT_THROW(c.scan_grid_nm(), std::invalid_argument);
  c.scan.lambda_start_nm = 1020.0;
  c.scan.lambda_stop_nm = 960.0;
  EXPECT_TRUE(mentions(problems_of([&] { c.validate(); }), "ascending"));
}

TEST(Config, ApplyOverride) {
  json doc = rspec::to_json(RunConfig::defaults());
  rspec::apply_override(doc, "scan.points=5");
  rspec::apply_override(doc, "output.prefix=run7");
  rspec::apply_override(doc, "remote_filter.kind=\"rectangle\"");
  const auto c = rspec::config_from_json(doc);
  EXPECT_EQ(c.scan.points, 5);
  EXPECT_EQ(c.output.prefix, "run7");
  EXPECT_EQ(c.remote_filter.kind, "rectangle");
  EXPECT_THROW(rspec::apply_override(doc, "no_equals"), ConfigError);
  EXPECT_THROW(rspec::apply_override(doc, "seed.inner=1"), ConfigError);
}

TEST(Config, LoadFromFile) {
  const auto path = std::filesystem::temp_directory_path() / "rspec_unit_config.json";
  {
    std::ofstream out(path);
    out << R"({"seed": 99, "scan": {"points": 3}})";
  }
  const auto c = rspec::load_config(path.string());
  EXPECT_EQ(c.seed, 99u);
  EXPECT_EQ(c.scan.points, 3);
  {
    std::ofstream out(path);
    out << "{not json";
  }
  EXPECT_THROW(rspec::load_config(path.string()), ConfigError);
  std::filesystem::remove(path);
  EXPECT_THROW(rspec::load_config(path.string()), std::runtime_error);
}

TEST(Config, SpectralSpecResolution) {
  rspec::SpectralSpec s;
  s.kind = "gaussian";
  s.center_nm = 850.0;
  s.width_nm = 10.0;
  const auto f = s.resolve_absolute();
  EXPECT_DOUBLE_EQ(f.width(), rspec::omega_width_from_nm(10.0, 850.0));
  EXPECT_NEAR(*s.width_in_nm(850.0), 10.0, 1e-12);
  s.kind = "edge";
  s.pass = "sideways";
  EXPECT_THROW(s.resolve_absolute(), std::invalid_argument);
  s.kind = "rectangle";
  EXPECT_THROW(s.resolve_relative(850.0), std::invalid_argument);
}

}  // namespace
