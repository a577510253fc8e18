#include "rspec/config.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "rspec/units.hpp"

namespace rspec {

using nlohmann::json;

namespace {

std::string join_lines(const std::vector<std::string>& lines) {
  std::string out;
  for (const auto& l : lines) {
    if (!out.empty()) out += '\n';
    out += l;
  }
  return out;
}

// Reads one JSON object, recording problems under dotted field paths.
class Reader {
 public:
  Reader(const json* obj, std::string path, std::vector<std::string>& errors)
      : obj_(obj), path_(std::move(path)), errors_(errors) {
    if (obj_ && !obj_->is_object()) {
      errors_.push_back(path_ + ": expected an object");
      obj_ = nullptr;
    }
  }

  Reader(const Reader&) = delete;
  Reader& operator=(const Reader&) = delete;

  ~Reader() {
    if (!obj_) return;
    for (const auto& [key, value] : obj_->items()) {
      if (!seen_.contains(key)) errors_.push_back(field(key) + ": unknown field");
    }
  }

  Reader child(const std::string& key) {
    seen_.insert(key);
    if (!obj_ || !obj_->contains(key)) return Reader(nullptr, field(key), errors_);
    return Reader(&obj_->at(key), field(key), errors_);
  }

  template <typename T>
  void get(const std::string& key, T& out) {
    seen_.insert(key);
    if (!obj_ || !obj_->contains(key)) return;
    read(obj_->at(key), key, out);
  }

  template <typename T>
  void get(const std::string& key, std::optional<T>& out) {
    seen_.insert(key);
    if (!obj_ || !obj_->contains(key)) return;
    const auto& v = obj_->at(key);
    if (v.is_null()) {
      out.reset();
      return;
    }
    T tmp{};
    if (read(v, key, tmp)) out = tmp;
  }

 private:
  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  bool read(const json& v, const std::string& key, double& out) {
    if (!v.is_number()) return mismatch(key, "a number");
    out = v.get<double>();
    return true;
  }
  bool read(const json& v, const std::string& key, int& out) {
    if (!v.is_number_integer()) return mismatch(key, "an integer");
    out = v.get<int>();
    return true;
  }
  bool read(const json& v, const std::string& key, unsigned& out) {
    if (!non_negative_integer(v)) return mismatch(key, "a non-negative integer");
    out = v.get<unsigned>();
    return true;
  }
  bool read(const json& v, const std::string& key, std::uint64_t& out) {
    if (!non_negative_integer(v)) return mismatch(key, "a non-negative integer");
    out = v.get<std::uint64_t>();
    return true;
  }
  static bool non_negative_integer(const json& v) {
    return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
  }
  bool read(const json& v, const std::string& key, std::string& out) {
    if (!v.is_string()) return mismatch(key, "a string");
    out = v.get<std::string>();
    return true;
  }
  bool mismatch(const std::string& key, const char* expected) {
    errors_.push_back(field(key) + ": expected " + expected);
    return false;
  }

  const json* obj_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::set<std::string> seen_;
};

void read_spectral(Reader r, SpectralSpec& s) {
  r.get("kind", s.kind);
  r.get("center_nm", s.center_nm);
  r.get("center_rad_s", s.center_rad_s);
  r.get("width_nm", s.width_nm);
  r.get("width_rad_s", s.width_rad_s);
  r.get("peak", s.peak);
  r.get("mismatch_s_per_m", s.mismatch_s_per_m);
  r.get("crystal_length_m", s.crystal_length_m);
  r.get("pass", s.pass);
  r.get("file", s.file);
}

json spectral_json(const SpectralSpec& s) {
  auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  return json{{"kind", s.kind},
              {"center_nm", opt(s.center_nm)},
              {"center_rad_s", opt(s.center_rad_s)},
              {"width_nm", opt(s.width_nm)},
              {"width_rad_s", opt(s.width_rad_s)},
              {"peak", s.peak},
              {"mismatch_s_per_m", s.mismatch_s_per_m},
              {"crystal_length_m", s.crystal_length_m},
              {"pass", s.pass},
              {"file", s.file}};
}

// Fields stored in ps or ns are read as value / scale, which is correctly
// rounded. Writing picks the shortest decimal that reads back to the same
// double, so a snapshot reloads bit for bit.
double from_scaled(double value, double scale) { return value / scale; }

double to_scaled(double si, double scale) {
  for (int digits = 15; digits <= 17; ++digits) {
    std::ostringstream text;
    text.precision(digits);
    text << si * scale;
    const double v = std::stod(text.str());
    if (from_scaled(v, scale) == si) return v;
  }
  return si * scale;
}

void read_detector(Reader r, DetectorModel& d) {
  std::optional<double> jitter_ps;
  std::optional<double> dead_ns;
  r.get("efficiency", d.efficiency);
  r.get("dark_rate", d.dark_rate);
  r.get("jitter_fwhm_ps", jitter_ps);
  r.get("dead_time_ns", dead_ns);
  r.get("efficiency_slope_per_nm", d.efficiency_slope);
  r.get("reference_lambda_nm", d.reference_lambda_nm);
  if (jitter_ps) d.jitter_fwhm = from_scaled(*jitter_ps, 1e12);
  if (dead_ns) d.dead_time = from_scaled(*dead_ns, 1e9);
}

json detector_json(const DetectorModel& d) {
  return json{{"efficiency", d.efficiency},
              {"dark_rate", d.dark_rate},
              {"jitter_fwhm_ps", to_scaled(d.jitter_fwhm, 1e12)},
              {"dead_time_ns", to_scaled(d.dead_time, 1e9)},
              {"efficiency_slope_per_nm", d.efficiency_slope},
              {"reference_lambda_nm", d.reference_lambda_nm}};
}

void read_clock(Reader r, ClockModel& c) {
  std::optional<double> res_ps;
  r.get("offset_s", c.offset);
  r.get("drift", c.drift);
  r.get("resolution_ps", res_ps);
  if (res_ps) c.resolution = from_scaled(*res_ps, 1e12);
}

json clock_json(const ClockModel& c) {
  return json{{"offset_s", c.offset},
              {"drift", c.drift},
              {"resolution_ps", static_cast<double>(c.resolution_ps())}};
}

void read_path(Reader r, DispersiveMedium& m) {
  r.get("inverse_group_velocity_s_per_m", m.inverse_group_velocity);
  r.get("gvd_s2_per_m", m.gvd);
  r.get("length_m", m.length);
}

json path_json(const DispersiveMedium& m) {
  return json{{"inverse_group_velocity_s_per_m", m.inverse_group_velocity},
              {"gvd_s2_per_m", m.gvd},
              {"length_m", m.length}};
}

double center_omega(const SpectralSpec& s) {
  if (s.center_rad_s) return *s.center_rad_s;
  if (s.center_nm) return omega_from_nm(*s.center_nm);
  throw std::invalid_argument("center_nm or center_rad_s is required for kind " + s.kind);
}

double width_omega(const SpectralSpec& s, double reference_nm) {
  if (s.width_rad_s) return *s.width_rad_s;
  if (s.width_nm) return omega_width_from_nm(*s.width_nm, reference_nm);
  throw std::invalid_argument("width_nm or width_rad_s is required for kind " + s.kind);
}

EdgePass edge_pass(const std::string& pass) {
  if (pass == "short") return EdgePass::above;
  if (pass == "long") return EdgePass::below;
  throw std::invalid_argument("edge pass must be \"short\" or \"long\"");
}

template <typename Fn>
void check(std::vector<std::string>& problems, const std::string& path, Fn&& fn) {
  try {
    fn();
  } catch (const std::exception& e) {
    problems.push_back(path + ": " + e.what());
  }
}

}  // namespace

// ---------------------------------------------------------------- SpectralSpec

SpectralFunction SpectralSpec::resolve_absolute() const {
  if (kind == "flat") return SpectralFunction::flat(peak);
  if (kind == "tabulated") {
    if (file.empty()) throw std::invalid_argument("tabulated kind needs a file");
    return load_tabulated_csv(std::filesystem::path(file));
  }
  const double center = center_omega(*this);
  const double ref_nm = center_nm ? *center_nm : nm_from_omega(center);
  if (kind == "gaussian") return SpectralFunction::gaussian(center, width_omega(*this, ref_nm), peak);
  if (kind == "rectangle") return SpectralFunction::rectangle(center, width_omega(*this, ref_nm), peak);
  if (kind == "sinc_phase_matching") {
    return SpectralFunction::sinc_phase_matching(center, mismatch_s_per_m, crystal_length_m, peak);
  }
  if (kind == "edge") return SpectralFunction::edge(center, edge_pass(pass), peak);
  throw std::invalid_argument("unknown spectral kind \"" + kind + "\"");
}

SpectralFunction SpectralSpec::resolve_relative(double reference_nm) const {
  if (center_nm) throw std::invalid_argument("center_nm is not meaningful for a relative function");
  const double center = center_rad_s.value_or(0.0);
  if (kind == "flat") return SpectralFunction::flat(peak);
  if (kind == "tabulated") {
    if (file.empty()) throw std::invalid_argument("tabulated kind needs a file");
    return load_tabulated_csv(std::filesystem::path(file));
  }
  if (kind == "gaussian") return SpectralFunction::gaussian(center, width_omega(*this, reference_nm), peak);
  if (kind == "rectangle") {
    return SpectralFunction::rectangle(center, width_omega(*this, reference_nm), peak);
  }
  if (kind == "sinc_phase_matching") {
    return SpectralFunction::sinc_phase_matching(center, mismatch_s_per_m, crystal_length_m, peak);
  }
  if (kind == "edge") return SpectralFunction::edge(center, edge_pass(pass), peak);
  throw std::invalid_argument("unknown spectral kind \"" + kind + "\"");
}

std::optional<double> SpectralSpec::width_in_nm(double reference_nm) const {
  if (kind == "gaussian" || kind == "rectangle") {
    if (width_nm) return *width_nm;
    if (width_rad_s) return nm_width_from_omega(*width_rad_s, reference_nm);
    return std::nullopt;
  }
  if (kind == "sinc_phase_matching" && mismatch_s_per_m > 0.0 && crystal_length_m > 0.0) {
    return nm_width_from_omega(
        SpectralFunction::sinc_phase_matching(0.0, mismatch_s_per_m, crystal_length_m).width(),
        reference_nm);
  }
  if (kind == "tabulated" && !file.empty()) {
    const auto table = load_tabulated_csv(std::filesystem::path(file));
    return nm_from_omega(table.nodes().front().omega) - nm_from_omega(table.nodes().back().omega);
  }
  return std::nullopt;
}

// ---------------------------------------------------------------- RunConfig

RunConfig RunConfig::defaults() {
  RunConfig c;
  c.source.phi.kind = "rectangle";
  c.source.phi.width_nm = 120.0;
  c.remote_filter.kind = "gaussian";
  c.remote_filter.center_nm = 850.0;
  c.remote_filter.width_nm = 10.0;
  c.monochromator.kind = "gaussian";
  c.monochromator.width_nm = 2.0;
  c.monochromator.peak = 0.3;
  c.clock2.offset = 0.123456789;
  return c;
}

double RunConfig::omega_p() const { return omega_from_nm(pump_lambda_nm); }

double RunConfig::signal_center_nm() const {
  if (source.signal_center_nm) return *source.signal_center_nm;
  if (remote_filter.center_nm) return *remote_filter.center_nm;
  if (remote_filter.center_rad_s) return nm_from_omega(*remote_filter.center_rad_s);
  return 2.0 * pump_lambda_nm;  // degenerate
}

double RunConfig::idler_center_nm() const { return conjugate_wavelength(pump_lambda_nm, signal_center_nm()); }

double RunConfig::omega_s0() const { return omega_from_nm(signal_center_nm()); }

double RunConfig::omega_i0() const { return omega_p() - omega_s0(); }

SpectralFunction RunConfig::phi() const { return source.phi.resolve_relative(signal_center_nm()); }

SpectralFunction RunConfig::remote() const { return remote_filter.resolve_absolute(); }

MonochromatorSetting RunConfig::monochromator_at(double lambda_M_nm) const {
  return {omega_from_nm(lambda_M_nm), monochromator.resolve_relative(lambda_M_nm)};
}

SourceConfig RunConfig::source_config(double duration, std::uint64_t seed_value) const {
  SourceConfig s;
  s.pair_rate = source.pair_rate;
  s.duration = duration;
  s.omega_p = omega_p();
  s.omega_s0 = omega_s0();
  s.omega_i0 = omega_i0();
  s.phi = phi();
  s.rng_seed = seed_value;
  return s;
}

CoincidenceWindow RunConfig::window() const { return {coincidence.window_ns / 1e9}; }

AlignmentOptions RunConfig::alignment_options() const {
  AlignmentOptions o;
  o.search_range = coincidence.search_s;
  o.coarse_bin = coincidence.coarse_ns / 1e9;
  o.window = window();
  o.significance_threshold = coincidence.significance_threshold;
  o.threads = threads;
  return o;
}

std::vector<double> RunConfig::scan_grid_nm() const {
  const int n = scan.points;
  if (n <= 0) return {};
  double start = 0.0;
  double stop = 0.0;
  if (scan.lambda_start_nm || scan.lambda_stop_nm) {
    if (!scan.lambda_start_nm || (n > 1 && !scan.lambda_stop_nm)) {
      throw std::invalid_argument("lambda_start_nm and lambda_stop_nm must be given together");
    }
    start = *scan.lambda_start_nm;
    stop = scan.lambda_stop_nm.value_or(start);
  } else {
    double center = signal_center_nm();
    if (remote_filter.center_nm) center = *remote_filter.center_nm;
    else if (remote_filter.center_rad_s) center = nm_from_omega(*remote_filter.center_rad_s);
    const auto width = remote_filter.width_in_nm(center);
    const double half = width ? scan.span_fwhm * *width : scan.half_span_nm;
    start = conjugate_wavelength(pump_lambda_nm, center + half);
    stop = conjugate_wavelength(pump_lambda_nm, center - half);
  }
  std::vector<double> grid(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    grid[static_cast<std::size_t>(i)] = n == 1 ? start : start + (stop - start) * i / (n - 1);
  }
  return grid;
}

double RunConfig::simulate_lambda_nm() const {
  if (simulate.lambda_M_nm) return *simulate.lambda_M_nm;
  return idler_center_nm();
}

void RunConfig::validate() const {
  std::vector<std::string> p;
  if (!(pump_lambda_nm > 0.0)) p.push_back("pump_lambda_nm: must be positive");
  if (!(source.pair_rate > 0.0)) p.push_back("source.pair_rate: must be positive");
  check(p, "source.signal_center_nm", [&] { (void)idler_center_nm(); });

  std::optional<std::pair<double, double>> phi_support;
  check(p, "source.phi", [&] {
    const auto f = phi();
    phi_support = f.support();
    const auto [lo, hi] = *phi_support;
    if (!(omega_s0() + lo > 0.0) || !(omega_i0() - hi > 0.0)) {
      throw std::invalid_argument("support reaches non-positive pair frequencies");
    }
  });
  check(p, "remote_filter", [&] { (void)remote(); });
  check(p, "monochromator", [&] {
    const auto m = monochromator_at(idler_center_nm());
    if (!m.response.bounded() || !(m.response.width() > 0.0)) {
      throw std::invalid_argument("response must have a finite positive width");
    }
  });
  check(p, "detector1", [&] { detector1.validate(); });
  check(p, "detector2", [&] { detector2.validate(); });
  check(p, "clock1", [&] { clock1.validate(); });
  check(p, "clock2", [&] { clock2.validate(); });
  if (signal_path.length < 0.0) p.push_back("signal_path.length_m: must be non-negative");
  if (idler_path.length < 0.0) p.push_back("idler_path.length_m: must be non-negative");
  check(p, "coincidence", [&] { alignment_options().validate(); });

  if (scan.points < 1) p.push_back("scan.points: must be at least 1");
  if (scan.dwell_s && !(*scan.dwell_s > 0.0)) p.push_back("scan.dwell_s: must be positive");
  if (!(scan.min_peak_coincidences > 0.0)) p.push_back("scan.min_peak_coincidences: must be positive");
  if (scan.align_point && (*scan.align_point < 0 || *scan.align_point >= scan.points)) {
    p.push_back("scan.align_point: must index a scan point");
  }
  if (scan.points >= 1) {
    check(p, "scan", [&] {
      const auto grid = scan_grid_nm();
      for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] > pump_lambda_nm)) throw std::invalid_argument("grid wavelength at or below the pump");
        if (i > 0 && !(grid[i] > grid[i - 1])) throw std::invalid_argument("grid must be strictly ascending");
        if (phi_support) {
          const double nu = omega_i0() - omega_from_nm(grid[i]);
          if (nu < phi_support->first || nu > phi_support->second) {
            throw std::invalid_argument("grid point " + std::to_string(grid[i]) +
                                        " nm lies outside phi's sampled support");
          }
        }
      }
    });
  }
  if (!(simulate.duration_s > 0.0)) p.push_back("simulate.duration_s: must be positive");
  if (simulate.lambda_M_nm && !(*simulate.lambda_M_nm > pump_lambda_nm)) {
    p.push_back("simulate.lambda_M_nm: must exceed the pump wavelength");
  }
  if (!p.empty()) throw ConfigError(std::move(p));
}

ConfigError::ConfigError(std::vector<std::string> problems)
    : std::runtime_error(join_lines(problems)), problems_(std::move(problems)) {}

// ---------------------------------------------------------------- JSON

json to_json(const RunConfig& c) {
  auto opt = [](const auto& v) { return v ? json(*v) : json(nullptr); };
  return json{
      {"pump_lambda_nm", c.pump_lambda_nm},
      {"source",
       {{"pair_rate", c.source.pair_rate},
        {"signal_center_nm", opt(c.source.signal_center_nm)},
        {"phi", spectral_json(c.source.phi)}}},
      {"remote_filter", spectral_json(c.remote_filter)},
      {"monochromator", spectral_json(c.monochromator)},
      {"detector1", detector_json(c.detector1)},
      {"detector2", detector_json(c.detector2)},
      {"clock1", clock_json(c.clock1)},
      {"clock2", clock_json(c.clock2)},
      {"signal_path", path_json(c.signal_path)},
      {"idler_path", path_json(c.idler_path)},
      {"coincidence",
       {{"window_ns", c.coincidence.window_ns},
        {"search_s", c.coincidence.search_s},
        {"coarse_ns", c.coincidence.coarse_ns},
        {"significance_threshold", c.coincidence.significance_threshold}}},
      {"scan",
       {{"points", c.scan.points},
        {"lambda_start_nm", opt(c.scan.lambda_start_nm)},
        {"lambda_stop_nm", opt(c.scan.lambda_stop_nm)},
        {"span_fwhm", c.scan.span_fwhm},
        {"half_span_nm", c.scan.half_span_nm},
        {"dwell_s", opt(c.scan.dwell_s)},
        {"min_peak_coincidences", c.scan.min_peak_coincidences},
        {"align_point", opt(c.scan.align_point)}}},
      {"simulate", {{"lambda_M_nm", opt(c.simulate.lambda_M_nm)}, {"duration_s", c.simulate.duration_s}}},
      {"seed", c.seed},
      {"threads", c.threads},
      {"output", {{"dir", c.output.dir}, {"prefix", c.output.prefix}}},
  };
}

RunConfig config_from_json(const json& doc) {
  RunConfig c = RunConfig::defaults();
  std::vector<std::string> errors;
  {
    Reader r(&doc, "", errors);
    r.get("pump_lambda_nm", c.pump_lambda_nm);
    {
      auto s = r.child("source");
      s.get("pair_rate", c.source.pair_rate);
      s.get("signal_center_nm", c.source.signal_center_nm);
      read_spectral(s.child("phi"), c.source.phi);
    }
    read_spectral(r.child("remote_filter"), c.remote_filter);
    read_spectral(r.child("monochromator"), c.monochromator);
    read_detector(r.child("detector1"), c.detector1);
    read_detector(r.child("detector2"), c.detector2);
    read_clock(r.child("clock1"), c.clock1);
    read_clock(r.child("clock2"), c.clock2);
    read_path(r.child("signal_path"), c.signal_path);
    read_path(r.child("idler_path"), c.idler_path);
    {
      auto k = r.child("coincidence");
      k.get("window_ns", c.coincidence.window_ns);
      k.get("search_s", c.coincidence.search_s);
      k.get("coarse_ns", c.coincidence.coarse_ns);
      k.get("significance_threshold", c.coincidence.significance_threshold);
    }
    {
      auto s = r.child("scan");
      s.get("points", c.scan.points);
      s.get("lambda_start_nm", c.scan.lambda_start_nm);
      s.get("lambda_stop_nm", c.scan.lambda_stop_nm);
      s.get("span_fwhm", c.scan.span_fwhm);
      s.get("half_span_nm", c.scan.half_span_nm);
      s.get("dwell_s", c.scan.dwell_s);
      s.get("min_peak_coincidences", c.scan.min_peak_coincidences);
      s.get("align_point", c.scan.align_point);
    }
    {
      auto s = r.child("simulate");
      s.get("lambda_M_nm", c.simulate.lambda_M_nm);
      s.get("duration_s", c.simulate.duration_s);
    }
    r.get("seed", c.seed);
    r.get("threads", c.threads);
    {
      auto o = r.child("output");
      o.get("dir", c.output.dir);
      o.get("prefix", c.output.prefix);
    }
  }
  if (!errors.empty()) throw ConfigError(std::move(errors));
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config " + path);
  json doc;
  try {
    in >> doc;
  } catch (const json::parse_error& e) {
    throw ConfigError({path + ": " + e.what()});
  }
  return config_from_json(doc);
}

void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) {
    throw ConfigError({"override \"" + assignment + "\": expected path=value"});
  }
  const std::string path = assignment.substr(0, eq);
  const std::string text = assignment.substr(eq + 1);
  json value = json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  json* node = &doc;
  std::stringstream parts(path);
  std::string key;
  std::vector<std::string> keys;
  while (std::getline(parts, key, '.')) keys.push_back(key);
  for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
    if (!node->is_object()) throw ConfigError({path + ": " + keys[i] + " is not an object"});
    node = &(*node)[keys[i]];
    if (node->is_null()) *node = json::object();
  }
  if (!node->is_object()) throw ConfigError({path + ": parent is not an object"});
  (*node)[keys.back()] = std::move(value);
}

}  // namespace rspec
