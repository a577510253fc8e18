#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <string_view>

#include "rspec/spectra.hpp"
#include "rspec/units.hpp"

namespace rspec {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

[[noreturn]] void fail(std::size_t line_no, const std::string& what) {
  throw std::runtime_error("tabulated CSV line " + std::to_string(line_no) + ": " + what);
}

double parse_number(std::string_view field, std::size_t line_no) {
  double v = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (ec != std::errc{} || ptr != end || field.empty()) {
    fail(line_no, "not a number: '" + std::string(field) + "'");
  }
  return v;
}

}  // namespace

SpectralFunction load_tabulated_csv(std::istream& in) {
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) fail(1, "missing header row");
  ++line_no;
  const auto header = split(line);
  if (header.size() != 2 && header.size() != 3) fail(line_no, "expected 2 or 3 columns");
  std::string first(header[0]);
  std::transform(first.begin(), first.end(), first.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  const bool wavelength = first.find("lambda") != std::string::npos ||
                          first.find("nm") != std::string::npos;

  std::vector<SpectralNode> nodes;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const auto fields = split(line);
    if (fields.size() != header.size()) fail(line_no, "column count differs from header");
    const double x = parse_number(fields[0], line_no);
    const double amp = parse_number(fields[1], line_no);
    const double phase = fields.size() == 3 ? parse_number(fields[2], line_no) : 0.0;
    if (wavelength && !(x > 0.0)) fail(line_no, "wavelength must be positive");
    if (amp < 0.0) fail(line_no, "amplitude must be non-negative");
    nodes.push_back({wavelength ? omega_from_nm(x) : x, std::polar(amp, phase)});
  }
  if (wavelength) std::reverse(nodes.begin(), nodes.end());
  try {
    return SpectralFunction::tabulated(std::move(nodes));
  } catch (const std::invalid_argument& e) {
    throw std::runtime_error(std::string("tabulated CSV: ") + e.what());
  }
}

SpectralFunction load_tabulated_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return load_tabulated_csv(in);
}

void write_tabulated_csv(const SpectralFunction& table, std::ostream& out) {
  out << "lambda_nm,amplitude,phase_rad\n";
  const auto& nodes = table.nodes();
  char buf[64];
  auto put = [&](double v) {
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, v);
    out.write(buf, p - buf);
  };
  for (auto it = nodes.rbegin(); it != nodes.rend(); ++it) {
    put(nm_from_omega(it->omega));
    out << ',';
    put(std::abs(it->amplitude));
    out << ',';
    put(std::arg(it->amplitude));
    out << '\n';
  }
}

}  // namespace rspec
