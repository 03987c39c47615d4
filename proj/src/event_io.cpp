// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

#include "evpcc/event_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "evpcc/error.hpp"

namespace evpcc {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kFieldOverflow: return "field-overflow";
    case ErrorCode::kTruncatedStream: return "truncated-stream";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kEmptyInput: return "empty-input";
    case ErrorCode::kTooFewPoints: return "too-few-points";
    case ErrorCode::kUndefinedMetric: return "undefined-metric";
    case ErrorCode::kMissingScores: return "missing-scores";
    case ErrorCode::kNoCandidates: return "no-non-duplicate-points";
    case ErrorCode::kCoordinateOverflow: return "coordinate-overflow";
    case ErrorCode::kCorruptPayload: return "corrupt-payload";
    case ErrorCode::kExternalCommand: return "external-command";
    case ErrorCode::kInsufficientPoints: return "insufficient-points";
    case ErrorCode::kNoOverlap: return "no-overlap";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
  }
  return "unknown";
}

double FormatParams::units_per_second() const {
  switch (timestamp_unit) {
    case TimestampUnit::kMicroseconds: return 1e6;
    case TimestampUnit::kMilliseconds: return 1e3;
    case TimestampUnit::kSeconds: return 1.0;
  }
  return 1e6;
}

TimestampUnit parse_timestamp_unit(const std::string& text) {
  if (text == "us") return TimestampUnit::kMicroseconds;
  if (text == "ms") return TimestampUnit::kMilliseconds;
  if (text == "s") return TimestampUnit::kSeconds;
  throw Error(ErrorCode::kInvalidArgument, "unknown timestamp unit '" + text + "' (expected us, ms or s)");
}

std::uint64_t pack_event(const Event& e) {
  if (e.x > kMaxX || e.y > kMaxY || e.t_raw > kMaxTimestamp ||
      (e.p != Polarity::kNeg && e.p != Polarity::kPos)) {
    std::ostringstream msg;
    msg << "event field exceeds its bit width: x=" << e.x << " y=" << e.y
        << " t_raw=" << e.t_raw << " p=" << static_cast<int>(e.p);
    throw Error(ErrorCode::kFieldOverflow, msg.str());
  }
  return std::uint64_t{e.t_raw} | (std::uint64_t{static_cast<std::uint8_t>(e.p)} << 23) |
         (std::uint64_t{e.x} << 24) | (std::uint64_t{e.y} << 32);
}

Event unpack_event(std::uint64_t word) {
  Event e;
  e.t_raw = static_cast<std::uint32_t>(word & kMaxTimestamp);
  e.p = ((word >> 23) & 1u) ? Polarity::kPos : Polarity::kNeg;
  e.x = static_cast<std::uint32_t>((word >> 24) & 0xFFu);
  e.y = static_cast<std::uint32_t>((word >> 32) & 0xFFu);
  return e;
}

void sort_by_time(std::vector<Event>& events) {
  std::stable_sort(events.begin(), events.end(),
                   [](const Event& a, const Event& b) { return a.t_raw < b.t_raw; });
}

EventSequence read_events(std::span<const std::uint8_t> bytes, const FormatParams& params) {
  if (bytes.size() % kBytesPerEvent != 0) {
    throw Error(ErrorCode::kTruncatedStream,
                "event stream length " + std::to_string(bytes.size()) + " is not a multiple of 5");
  }
  EventSequence seq;
  seq.units_per_second = params.units_per_second();
  seq.events.reserve(bytes.size() / kBytesPerEvent);
  for (std::size_t off = 0; off < bytes.size(); off += kBytesPerEvent) {
    std::uint64_t word = 0;
    for (std::size_t b = 0; b < kBytesPerEvent; ++b) {
      word |= std::uint64_t{bytes[off + b]} << (8 * b);
    }
    seq.events.push_back(unpack_event(word));
  }
  sort_by_time(seq.events);
  return seq;
}

std::vector<std::uint8_t> write_events(const EventSequence& seq) {
  std::vector<std::uint8_t> out;
  out.reserve(seq.events.size() * kBytesPerEvent);
  for (const Event& e : seq.events) {
    const std::uint64_t word = pack_event(e);
    for (std::size_t b = 0; b < kBytesPerEvent; ++b) {
      out.push_back(static_cast<std::uint8_t>(word >> (8 * b)));
    }
  }
  return out;
}

namespace {

std::uint32_t parse_field(std::string_view text, std::size_t line_no) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) {
    text.remove_suffix(1);
  }
  std::uint64_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": bad integer field '" +
                                       std::string(text) + "'");
  }
  if (value > 0xFFFFFFFFull) {
    throw Error(ErrorCode::kFieldOverflow, "line " + std::to_string(line_no) + ": value too large");
  }
  return static_cast<std::uint32_t>(value);
}

}  // namespace

EventSequence read_events_csv(const std::string& text, const FormatParams& params) {
  EventSequence seq;
  seq.units_per_second = params.units_per_second();
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header_seen) {
      if (line != "x,y,t_raw,p") {
        throw Error(ErrorCode::kParse, "expected header 'x,y,t_raw,p', got '" + line + "'");
      }
      header_seen = true;
      continue;
    }
    std::uint32_t fields[4];
    std::string_view rest(line);
    for (int i = 0; i < 4; ++i) {
      const auto comma = rest.find(',');
      if ((i < 3) == (comma == std::string_view::npos)) {
        throw Error(ErrorCode::kParse, "line " + std::to_string(line_no) + ": expected 4 fields");
      }
      fields[i] = parse_field(rest.substr(0, comma), line_no);
      rest = i < 3 ? rest.substr(comma + 1) : std::string_view{};
    }
    if (fields[3] > 1) {
      throw Error(ErrorCode::kFieldOverflow, "line " + std::to_string(line_no) + ": polarity must be 0 or 1");
    }
    Event e{fields[0], fields[1], fields[2], fields[3] ? Polarity::kPos : Polarity::kNeg};
    pack_event(e);  // width validation
    seq.events.push_back(e);
  }
  sort_by_time(seq.events);
  return seq;
}

std::string write_events_csv(const EventSequence& seq) {
  std::string out = "x,y,t_raw,p\n";
  for (const Event& e : seq.events) {
    out += std::to_string(e.x) + ',' + std::to_string(e.y) + ',' + std::to_string(e.t_raw) + ',' +
           (e.p == Polarity::kPos ? '1' : '0') + '\n';
  }
  return out;
}

std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw Error(ErrorCode::kIo, "read failed: " + path.string());
  return bytes;
}

void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::kIo, "cannot create " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::kIo, "write failed: " + path.string());
}

std::string read_text_file(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  return std::string(bytes.begin(), bytes.end());
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  write_file_bytes(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

namespace {
bool is_csv(const std::filesystem::path& path) { return path.extension() == ".csv"; }
}  // namespace

EventSequence load_events(const std::filesystem::path& path, const FormatParams& params) {
  EventSequence seq = is_csv(path) ? read_events_csv(read_text_file(path), params)
                                   : read_events(read_file_bytes(path), params);
  seq.source_id = path.string();
  return seq;
}

void save_events(const std::filesystem::path& path, const EventSequence& seq) {
  if (is_csv(path)) {
    write_text_file(path, write_events_csv(seq));
  } else {
    write_file_bytes(path, write_events(seq));
  }
}

std::vector<DatasetEntry> walk_dataset(const std::filesystem::path& root) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(root, ec)) {
    throw Error(ErrorCode::kIo, "dataset root is not a directory: " + root.string());
  }
  auto sorted_children = [](const fs::path& dir) {
    std::vector<fs::directory_entry> children;
    std::error_code iter_ec;
    for (fs::directory_iterator it(dir, iter_ec), end; !iter_ec && it != end; it.increment(iter_ec)) {
      if (it->path().filename().string().starts_with(".")) continue;
      children.push_back(*it);
    }
    if (iter_ec) throw Error(ErrorCode::kIo, "cannot list " + dir.string() + ": " + iter_ec.message());
    std::sort(children.begin(), children.end(),
              [](const auto& a, const auto& b) { return a.path().filename() < b.path().filename(); });
    return children;
  };

  std::vector<DatasetEntry> entries;
  for (const auto& class_dir : sorted_children(root)) {
    if (!class_dir.is_directory()) continue;
    const std::string label = class_dir.path().filename().string();
    for (const auto& file : sorted_children(class_dir.path())) {
      if (file.is_regular_file()) entries.push_back({label, file.path()});
    }
  }
  return entries;
}

}  // namespace evpcc
