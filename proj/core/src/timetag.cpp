#include "rspec/timetag.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>

namespace rspec {

namespace {

constexpr std::size_t kNoRecord = std::numeric_limits<std::size_t>::max();

template <typename T>
void put_le(std::vector<std::byte>& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<std::byte>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xFF));
  }
}

template <typename T>
T get_le(std::span<const std::byte> in, std::size_t offset) {
  std::uint64_t v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    v |= static_cast<std::uint64_t>(in[offset + i]) << (8 * i);
  }
  return static_cast<T>(v);
}

}  // namespace

void ClockModel::validate() const {
  if (!(resolution > 0.0)) throw std::invalid_argument("clock resolution must be positive");
  const double ps = resolution * 1e12;
  if (std::abs(ps - std::round(ps)) > 1e-6 || std::round(ps) > 4294967295.0) {
    throw std::invalid_argument("clock resolution must be a whole number of picoseconds");
  }
  if (!(std::abs(drift) < 1e-3)) throw std::invalid_argument("clock drift must satisfy |drift| < 1e-3");
  if (!std::isfinite(offset)) throw std::invalid_argument("clock offset must be finite");
}

std::uint32_t ClockModel::resolution_ps() const {
  return static_cast<std::uint32_t>(std::llround(resolution * 1e12));
}

std::vector<std::int64_t> EventStream::times_ps() const {
  std::vector<std::int64_t> out(ticks.size());
  for (std::size_t i = 0; i < ticks.size(); ++i) out[i] = time_ps(i);
  return out;
}

EventStream apply_clock(const EventStream& reference, const ClockModel& clock) {
  clock.validate();
  EventStream out;
  out.detector_id = reference.detector_id;
  out.resolution_ps = clock.resolution_ps();
  const double rate = 1.0 + clock.drift;
  const double offset_ps = clock.offset * 1e12;
  const double res = static_cast<double>(out.resolution_ps);

  const double end_ps = rate * static_cast<double>(reference.duration_ps) + std::max(offset_ps, 0.0);
  out.duration_ps = static_cast<std::uint64_t>(std::ceil(std::max(end_ps, 0.0)));

  out.ticks.reserve(reference.ticks.size());
  for (std::size_t i = 0; i < reference.ticks.size(); ++i) {
    const double local = rate * static_cast<double>(reference.time_ps(i)) + offset_ps;
    const double tick = std::round(local / res);
    if (tick < 0.0) continue;
    const auto t = static_cast<std::uint64_t>(tick);
    // a timer registers at most one event per tick
    if (!out.ticks.empty() && t <= out.ticks.back()) continue;
    out.ticks.push_back(t);
  }
  return out;
}

StreamFormatError::StreamFormatError(Kind kind, std::size_t byte_offset, std::size_t record,
                                     const std::string& what)
    : std::runtime_error(what + " (byte offset " + std::to_string(byte_offset) +
                         (record == kNoRecord ? std::string() : ", record " + std::to_string(record)) +
                         ")"),
      kind_(kind),
      byte_offset_(byte_offset),
      record_(record) {}

std::vector<std::byte> serialize_stream(const EventStream& stream) {
  std::vector<std::byte> out;
  out.reserve(kTtagHeaderSize + 8 * stream.ticks.size());
  put_le<std::uint32_t>(out, kTtagMagic);
  put_le<std::uint16_t>(out, kTtagVersion);
  put_le<std::uint8_t>(out, stream.detector_id);
  put_le<std::uint8_t>(out, 0);
  put_le<std::uint32_t>(out, stream.resolution_ps);
  put_le<std::uint64_t>(out, stream.duration_ps);
  put_le<std::uint64_t>(out, stream.ticks.size());
  for (auto t : stream.ticks) put_le<std::uint64_t>(out, t);
  return out;
}

EventStream parse_stream(std::span<const std::byte> bytes) {
  using Kind = StreamFormatError::Kind;
  if (bytes.size() < kTtagHeaderSize) {
    throw StreamFormatError(Kind::truncated, bytes.size(), kNoRecord, "truncated .ttag header");
  }
  if (get_le<std::uint32_t>(bytes, 0) != kTtagMagic) {
    throw StreamFormatError(Kind::bad_magic, 0, kNoRecord, "not a .ttag stream: magic mismatch");
  }
  if (get_le<std::uint16_t>(bytes, 4) != kTtagVersion) {
    throw StreamFormatError(Kind::bad_version, 4, kNoRecord, "unsupported .ttag version");
  }
  EventStream s;
  s.detector_id = get_le<std::uint8_t>(bytes, 6);
  if (get_le<std::uint8_t>(bytes, 7) != 0) {
    throw StreamFormatError(Kind::bad_reserved, 7, kNoRecord, "reserved header byte is not zero");
  }
  s.resolution_ps = get_le<std::uint32_t>(bytes, 8);
  if (s.resolution_ps == 0) {
    throw StreamFormatError(Kind::bad_resolution, 8, kNoRecord, "zero timestamp resolution");
  }
  s.duration_ps = get_le<std::uint64_t>(bytes, 12);
  const auto count = get_le<std::uint64_t>(bytes, 20);

  const std::size_t available = (bytes.size() - kTtagHeaderSize) / 8;
  if (count > available) {
    throw StreamFormatError(Kind::truncated, kTtagHeaderSize + 8 * available, available,
                            "truncated .ttag record");
  }
  const std::size_t end = kTtagHeaderSize + 8 * count;
  if (bytes.size() != end) {
    throw StreamFormatError(Kind::trailing_bytes, end, kNoRecord, "trailing bytes after last record");
  }
  s.ticks.resize(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t at = kTtagHeaderSize + 8 * k;
    s.ticks[k] = get_le<std::uint64_t>(bytes, at);
    if (k > 0 && s.ticks[k] <= s.ticks[k - 1]) {
      throw StreamFormatError(Kind::non_monotone, at, k, "timestamps not strictly ascending");
    }
  }
  return s;
}

void write_stream(const EventStream& stream, std::ostream& sink) {
  const auto bytes = serialize_stream(stream);
  sink.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!sink) throw StreamFormatError(StreamFormatError::Kind::io, 0, kNoRecord, "write failed");
}

EventStream read_stream(std::istream& source) {
  std::vector<char> raw((std::istreambuf_iterator<char>(source)), std::istreambuf_iterator<char>());
  return parse_stream(std::as_bytes(std::span(raw)));
}

void write_stream_file(const EventStream& stream, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw StreamFormatError(StreamFormatError::Kind::io, 0, kNoRecord, "cannot open " + path.string());
  }
  write_stream(stream, out);
}

EventStream read_stream_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw StreamFormatError(StreamFormatError::Kind::io, 0, kNoRecord, "cannot open " + path.string());
  }
  return read_stream(in);
}

void write_stream_csv(const EventStream& stream, std::ostream& out) {
  out << "timestamp_ps\n";
  char buf[32];
  for (std::size_t i = 0; i < stream.size(); ++i) {
    auto [p, ec] = std::to_chars(buf, buf + sizeof buf, stream.time_ps(i));
    out.write(buf, p - buf);
    out << '\n';
  }
}

}  // namespace rspec
