// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef EVPCC_EVENT_IO_HPP
#define EVPCC_EVENT_IO_HPP

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace evpcc {

enum class Polarity : std::uint8_t { kNeg = 0, kPos = 1 };

inline constexpr std::uint32_t kMaxX = (1u << 8) - 1;
inline constexpr std::uint32_t kMaxY = (1u << 8) - 1;
inline constexpr std::uint32_t kMaxTimestamp = (1u << 23) - 1;
inline constexpr std::uint64_t kMaxWord = (std::uint64_t{1} << 40) - 1;
inline constexpr std::size_t kBytesPerEvent = 5;

struct Event {
  std::uint32_t x = 0;
  std::uint32_t y = 0;
  std::uint32_t t_raw = 0;
  Polarity p = Polarity::kNeg;

  friend bool operator==(const Event&, const Event&) = default;
};

enum class TimestampUnit { kMicroseconds, kMilliseconds, kSeconds };

struct FormatParams {
  TimestampUnit timestamp_unit = TimestampUnit::kMicroseconds;

  double units_per_second() const;
};

TimestampUnit parse_timestamp_unit(const std::string& text);

struct EventSequence {
  std::vector<Event> events;
  double units_per_second = 1e6;
  std::optional<std::string> label;
  std::optional<std::string> source_id;

  double seconds(const Event& e) const { return e.t_raw / units_per_second; }
};

/// Bit layout, LSB first: [0,23) timestamp, 23 polarity, [24,32) x, [32,40) y.
std::uint64_t pack_event(const Event& e);
Event unpack_event(std::uint64_t word);

// Stable sort by t_raw; equal timestamps keep their input order.
void sort_by_time(std::vector<Event>& events);

/// Each event is one 5-byte little-endian word.
EventSequence read_events(std::span<const std::uint8_t> bytes, const FormatParams& params);
std::vector<std::uint8_t> write_events(const EventSequence& seq);

EventSequence read_events_csv(const std::string& text, const FormatParams& params);
std::string write_events_csv(const EventSequence& seq);

/// Dispatches on extension: `.csv` files use the text format, everything else
/// is treated as the binary 40-bit format.
EventSequence load_events(const std::filesystem::path& path, const FormatParams& params);
void save_events(const std::filesystem::path& path, const EventSequence& seq);

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path);
void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

struct DatasetEntry {
  std::string label;
  std::filesystem::path source;
};

/// One subdirectory per class, event files inside. Classes and files are
/// returned in lexicographic order; hidden entries are skipped.
std::vector<DatasetEntry> walk_dataset(const std::filesystem::path& root);

}  // namespace evpcc

#endif  // EVPCC_EVENT_IO_HPP
