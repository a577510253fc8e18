#pragma once

// Event-timer emulation: affine clock models, the `.ttag` record format used
// to ship a detector's registration history over the classical channel, and
// CSV export for debugging.
//
// .ttag layout, little-endian:
//   offset  size  field
//   0       4     magic 0x54544147
//   4       2     version (1)
//   6       1     detector_id
//   7       1     reserved (0)
//   8       4     resolution_ps
//   12      8     duration_ps
//   20      8     count
//   28      8*n   timestamps, in units of resolution_ps, strictly ascending

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rspec {

inline constexpr std::uint32_t kTtagMagic = 0x54544147;
inline constexpr std::uint16_t kTtagVersion = 1;
inline constexpr std::size_t kTtagHeaderSize = 28;

struct ClockModel {
  double offset = 0.0;        // s, added to true time
  double drift = 0.0;         // fractional rate error
  double resolution = 1e-12;  // s, integer number of picoseconds

  void validate() const;
  std::uint32_t resolution_ps() const;
};

/// Ascending timestamps from one detector, as integer ticks of its timer.
struct EventStream {
  std::uint8_t detector_id = 1;
  std::uint32_t resolution_ps = 1;
  std::uint64_t duration_ps = 0;
  std::vector<std::uint64_t> ticks;

  std::size_t size() const { return ticks.size(); }
  double duration() const { return static_cast<double>(duration_ps) * 1e-12; }
  std::int64_t time_ps(std::size_t i) const {
    return static_cast<std::int64_t>(ticks[i]) * resolution_ps;
  }
  /// All timestamps in picoseconds.
  std::vector<std::int64_t> times_ps() const;

  friend bool operator==(const EventStream&, const EventStream&) = default;
};

/// Maps every event through t_local = (1 + drift) t + offset and quantizes
/// to the clock resolution. Events landing before the timer origin are not
/// recorded.
EventStream apply_clock(const EventStream& reference, const ClockModel& clock);

class StreamFormatError : public std::runtime_error {
 public:
  enum class Kind {
    bad_magic,
    bad_version,
    bad_reserved,
    bad_resolution,
    truncated,
    non_monotone,
    trailing_bytes,
    io,
  };

  StreamFormatError(Kind kind, std::size_t byte_offset, std::size_t record, const std::string& what);

  Kind kind() const { return kind_; }
  std::size_t byte_offset() const { return byte_offset_; }
  /// Index of the offending record, or SIZE_MAX when the header is at fault.
  std::size_t record() const { return record_; }

 private:
  Kind kind_;
  std::size_t byte_offset_;
  std::size_t record_;
};

std::vector<std::byte> serialize_stream(const EventStream& stream);
EventStream parse_stream(std::span<const std::byte> bytes);

void write_stream(const EventStream& stream, std::ostream& sink);
EventStream read_stream(std::istream& source);
void write_stream_file(const EventStream& stream, const std::filesystem::path& path);
EventStream read_stream_file(const std::filesystem::path& path);

/// `timestamp_ps` column, one event per row.
void write_stream_csv(const EventStream& stream, std::ostream& out);

}  // namespace rspec
