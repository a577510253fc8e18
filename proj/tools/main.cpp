// rspec: simulate detector streams, align time bases, and scan the local
// monochromator to recover a remote filter's transmission.

#include <CLI11.hpp>

#include <algorithm>
#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "rspec/coincidence.hpp"
#include "rspec/config.hpp"
#include "rspec/scan.hpp"
#include "rspec/spectra.hpp"
#include "rspec/timetag.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

enum ExitCode : int { kOk = 0, kFailure = 1, kConfigError = 2, kNoAlignment = 3, kIoError = 4 };

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct RunOptions {
  std::string config_path;
  std::vector<std::string> overrides;
  std::string out_dir;
  unsigned threads = 0;
};

const char* env(const char* name) {
  const char* v = std::getenv(name);
  return v && *v ? v : nullptr;
}

// Precedence: defaults < config file < environment < command line.
rspec::RunConfig resolve_config(const RunOptions& opts) {
  json doc = json::object();
  if (!opts.config_path.empty()) {
    std::ifstream in(opts.config_path);
    if (!in) throw IoError("cannot open config " + opts.config_path);
    doc = json::parse(in, nullptr, false);
    if (doc.is_discarded()) throw rspec::ConfigError({opts.config_path + ": not valid JSON"});
  }
  if (const char* dir = env("RSPEC_OUTPUT_DIR")) doc["output"]["dir"] = dir;
  if (const char* t = env("RSPEC_THREADS")) rspec::apply_override(doc, std::string("threads=") + t);
  for (const auto& o : opts.overrides) rspec::apply_override(doc, o);
  if (!opts.out_dir.empty()) doc["output"]["dir"] = opts.out_dir;
  if (opts.threads) doc["threads"] = opts.threads;
  auto config = rspec::config_from_json(doc);
  config.validate();
  return config;
}

fs::path output_path(const rspec::RunConfig& config, const std::string& suffix) {
  const fs::path dir(config.output.dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir / (config.output.prefix + suffix);
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void write_json(const json& doc, const fs::path& path) {
  auto out = open_output(path);
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("write failed: " + path.string());
}

void add_config_options(CLI::App& cmd, RunOptions& opts) {
  cmd.add_option("-c,--config", opts.config_path, "JSON run configuration (defaults apply to missing fields)");
  cmd.add_option("-s,--set", opts.overrides, "Override a field, e.g. --set scan.points=40")->take_all();
  cmd.add_option("-o,--out-dir", opts.out_dir, "Output directory (env RSPEC_OUTPUT_DIR)");
  cmd.add_option("-j,--threads", opts.threads, "Worker threads, 0 = all cores (env RSPEC_THREADS)");
}

int run_simulate(const RunOptions& opts) {
  auto config = resolve_config(opts);
  const double lambda = config.simulate_lambda_nm();
  const auto acq = rspec::acquire(config, lambda, config.simulate.duration_s, config.seed);

  const auto p1 = output_path(config, "_d1.ttag");
  const auto p2 = output_path(config, "_d2.ttag");
  rspec::write_stream_file(acq.detector1, p1);
  rspec::write_stream_file(acq.detector2, p2);
  config.simulate.lambda_M_nm = lambda;
  write_json(rspec::to_json(config), output_path(config, "_config.json"));
  std::printf("lambda_M=%.4f nm  %s: %zu events  %s: %zu events\n", lambda, p1.string().c_str(),
              acq.detector1.size(), p2.string().c_str(), acq.detector2.size());
  return kOk;
}

struct AlignArgs {
  std::string file1;
  std::string file2;
  double window_ns = 5.0;
  double search_s = 1.0;
  double coarse_ns = 100.0;
  double threshold = 5.0;
  unsigned threads = 0;
  std::string csv;
};

int run_align(const AlignArgs& args) {
  const auto s1 = rspec::read_stream_file(args.file1);
  const auto s2 = rspec::read_stream_file(args.file2);

  rspec::AlignmentOptions options;
  options.window.width = args.window_ns * 1e-9;
  options.search_range = args.search_s;
  options.coarse_bin = args.coarse_ns * 1e-9;
  options.significance_threshold = args.threshold;
  options.threads = args.threads;
  if (!options.threads) {
    if (const char* t = env("RSPEC_THREADS")) options.threads = static_cast<unsigned>(std::strtoul(t, nullptr, 10));
  }
  try {
    options.validate();
  } catch (const std::invalid_argument& e) {
    throw rspec::ConfigError({e.what()});
  }

  const auto r = rspec::align(s1, s2, options);
  fs::path csv = args.csv;
  if (csv.empty()) {
    const char* dir = env("RSPEC_OUTPUT_DIR");
    csv = fs::path(dir ? dir : ".") / "rspec_alignment.csv";
  }
  if (csv.has_parent_path()) fs::create_directories(csv.parent_path());
  {
    auto out = open_output(csv);
    rspec::write_alignment_csv(r, out);
  }

  const auto t1 = s1.times_ps();
  const auto t2 = s2.times_ps();
  const auto cc = rspec::count_coincidences(t1, t2, r.best_offset_ps, options.window.width_ps());
  std::printf("offset_ps=%" PRId64 " offset_s=%.12f coincidences=%" PRIu64
              " background_per_bin=%.3f significance=%.2f global_significance=%.2f\n",
              r.best_offset_ps, r.best_offset, cc, r.background_mean, r.significance, r.global_significance);
  if (!r.aligned) {
    std::fprintf(stderr, "no alignment: global significance %.2f below %.2f\n", r.global_significance,
                 options.significance_threshold);
    return kNoAlignment;
  }
  return kOk;
}

int run_scan_command(const RunOptions& opts, bool analytic) {
  const auto config = resolve_config(opts);
  const auto curve = analytic ? rspec::analytic_scan(config) : rspec::run_scan(config);

  {
    auto out = open_output(output_path(config, "_scan.csv"));
    rspec::write_scan_csv(curve, out);
  }
  write_json(curve.config, output_path(config, "_config.json"));
  if (curve.alignment) {
    auto out = open_output(output_path(config, "_alignment.csv"));
    rspec::write_alignment_csv(*curve.alignment, out);
    std::printf("alignment: offset %.12f s, global significance %.2f\n", curve.alignment->best_offset,
                curve.alignment->global_significance);
  }

  try {
    const auto table = rspec::reconstruct(curve);
    auto out = open_output(output_path(config, "_reconstruction.csv"));
    rspec::write_tabulated_csv(table, out);
  } catch (const rspec::EmptyReconstructionError& e) {
    std::fprintf(stderr, "warning: no reconstruction written: %s\n", e.what());
    return kOk;
  }

  std::vector<double> x;
  std::vector<double> y;
  for (auto it = curve.points.rbegin(); it != curve.points.rend(); ++it) {
    if (!it->normalized) continue;
    x.push_back(it->lambda_conj_nm);
    y.push_back(*it->normalized);
  }
  std::printf("%zu points, dwell %.2f s, center %.3f nm, FWHM %.3f nm\n", curve.points.size(),
              curve.points.front().dwell_s, rspec::half_maximum_center(x, y), rspec::full_width_half_max(x, y));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Remote spectrometer simulation with frequency-entangled photon pairs"};
  app.require_subcommand(1);

  RunOptions sim_opts;
  auto* simulate = app.add_subcommand("simulate", "Write both detectors' .ttag streams for one monochromator setting");
  add_config_options(*simulate, sim_opts);

  AlignArgs align_args;
  auto* align = app.add_subcommand("align", "Recover the offset between two .ttag time bases");
  align->add_option("file1", align_args.file1, "Detector 1 stream")->required()->check(CLI::ExistingFile);
  align->add_option("file2", align_args.file2, "Detector 2 stream")->required()->check(CLI::ExistingFile);
  align->add_option("--window-ns", align_args.window_ns, "Coincidence window")->capture_default_str();
  align->add_option("--search-s", align_args.search_s, "Half range of offsets searched")->capture_default_str();
  align->add_option("--coarse-ns", align_args.coarse_ns, "Coarse histogram bin")->capture_default_str();
  align->add_option("--threshold", align_args.threshold, "Required global significance")->capture_default_str();
  align->add_option("-j,--threads", align_args.threads, "Worker threads, 0 = all cores");
  align->add_option("--csv", align_args.csv, "Alignment histogram output");

  RunOptions scan_opts;
  bool analytic = false;
  auto* scan = app.add_subcommand("scan", "Scan the monochromator and reconstruct the remote filter");
  add_config_options(*scan, scan_opts);
  scan->add_flag("--analytic", analytic, "Expected counts instead of Monte Carlo");

  RunOptions show_opts;
  auto* show = app.add_subcommand("config", "Print the resolved configuration");
  add_config_options(*show, show_opts);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kConfigError;
  }

  try {
    if (*simulate) return run_simulate(sim_opts);
    if (*align) return run_align(align_args);
    if (*scan) return run_scan_command(scan_opts, analytic);
    if (*show) {
      std::cout << rspec::to_json(resolve_config(show_opts)).dump(2) << '\n';
      return kOk;
    }
  } catch (const rspec::ConfigError& e) {
    std::fprintf(stderr, "config error:\n");
    for (const auto& p : e.problems()) std::fprintf(stderr, "  %s\n", p.c_str());
    return kConfigError;
  } catch (const rspec::NoAlignmentError& e) {
    std::fprintf(stderr, "%s\n", e.what());
    return kNoAlignment;
  } catch (const rspec::StreamFormatError& e) {
    std::fprintf(stderr, "stream error: %s\n", e.what());
    return kIoError;
  } catch (const IoError& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kIoError;
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "i/o error: %s\n", e.what());
    return kIoError;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kFailure;
  }
  return kOk;
}
