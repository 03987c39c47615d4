// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

#include "evpcc/error.hpp"
#include "evpcc/event_io.hpp"
#include "oracles.hpp"

using namespace evpcc;
namespace fs = std::filesystem;

namespace {

// Independent bit assembly by arithmetic rather than shifts.
std::uint64_t arithmetic_word(std::uint64_t x, std::uint64_t y, std::uint64_t t, std::uint64_t p) {
  return t + p * 8388608ull + x * 16777216ull + y * 4294967296ull;
}

fs::path temp_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("evpcc_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(PackEvent, MatchesWorkedExamples) {
  EXPECT_EQ(86075506693ull, arithmetic_word(10, 20, 5, 1));
  EXPECT_EQ(86075506693ull, pack_event({10, 20, 5, Polarity::kPos}));
  EXPECT_EQ(0u, pack_event({0, 0, 0, Polarity::kNeg}));
  EXPECT_EQ(kMaxWord, pack_event({255, 255, (1u << 23) - 1, Polarity::kPos}));
}

TEST(PackEvent, RejectsOverflowingFields) {
  EXPECT_THROW(pack_event({256, 0, 0, Polarity::kNeg}), Error);
  EXPECT_THROW(pack_event({0, 256, 0, Polarity::kNeg}), Error);
  try {
    pack_event({0, 0, 1u << 23, Polarity::kNeg});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(ErrorCode::kFieldOverflow, e.code());
  }
}

TEST(UnpackEvent, SingleBitWords) {
  EXPECT_EQ((Event{0, 0, 0, Polarity::kNeg}), unpack_event(0));
  EXPECT_EQ((Event{0, 0, 0, Polarity::kPos}), unpack_event(1ull << 23));
  EXPECT_EQ((Event{1, 0, 0, Polarity::kNeg}), unpack_event(1ull << 24));
  EXPECT_EQ((Event{0, 1, 0, Polarity::kNeg}), unpack_event(1ull << 32));
}

TEST(UnpackEvent, RoundTripOnRandomEventsAndWords) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::uint32_t> b8(0, 255), b23(0, (1u << 23) - 1), b1(0, 1);
  std::uniform_int_distribution<std::uint64_t> w40(0, kMaxWord);
  for (int i = 0; i < 100000; ++i) {
    const Event e{b8(rng), b8(rng), b23(rng), b1(rng) ? Polarity::kPos : Polarity::kNeg};
    ASSERT_EQ(e, unpack_event(pack_event(e)));
    const std::uint64_t w = w40(rng);
    ASSERT_EQ(w, pack_event(unpack_event(w)));
  }
}

TEST(ReadEvents, EmptyAndSingleWord) {
  EXPECT_TRUE(read_events({}, FormatParams{}).events.empty());
  const std::vector<std::uint8_t> one{0x00, 0x00, 0x80, 0x00, 0x00};  // 2^23, little-endian
  const auto seq = read_events(one, FormatParams{});
  ASSERT_EQ(1u, seq.events.size());
  EXPECT_EQ((Event{0, 0, 0, Polarity::kPos}), seq.events[0]);
}

TEST(ReadEvents, TruncatedStreamIsAnError) {
  const std::vector<std::uint8_t> bad(7, 0);
  try {
    read_events(bad, FormatParams{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(ErrorCode::kTruncatedStream, e.code());
  }
}

TEST(ReadEvents, GoldenBytesAreLittleEndianWords) {
  // word for (x=10, y=20, t=5, POS) = 0x14_0A_80_00_05
  const std::vector<std::uint8_t> golden{0x05, 0x00, 0x80, 0x0A, 0x14};
  EventSequence seq;
  seq.events.push_back({10, 20, 5, Polarity::kPos});
  EXPECT_EQ(golden, write_events(seq));
  EXPECT_EQ(seq.events, read_events(golden, FormatParams{}).events);
}

TEST(ReadEvents, SortsStablyByTimestamp) {
  EventSequence seq;
  seq.events = {{1, 0, 9, Polarity::kPos}, {2, 0, 3, Polarity::kNeg}, {3, 0, 9, Polarity::kNeg},
                {4, 0, 3, Polarity::kPos}};
  const auto back = read_events(write_events(seq), FormatParams{});
  ASSERT_EQ(4u, back.events.size());
  EXPECT_EQ(2u, back.events[0].x);
  EXPECT_EQ(4u, back.events[1].x);
  EXPECT_EQ(1u, back.events[2].x);
  EXPECT_EQ(3u, back.events[3].x);
}

TEST(ReadEvents, SortedStreamRoundTripsByteExact) {
  std::mt19937_64 rng(11);
  const EventSequence seq = oracle::random_sequence(rng, 5000);
  const auto bytes = write_events(seq);
  ASSERT_EQ(5 * seq.events.size(), bytes.size());
  EXPECT_EQ(bytes, write_events(read_events(bytes, FormatParams{})));
}

TEST(FormatParams, UnitsPerSecond) {
  EXPECT_DOUBLE_EQ(1e6, FormatParams{TimestampUnit::kMicroseconds}.units_per_second());
  EXPECT_DOUBLE_EQ(1e3, FormatParams{TimestampUnit::kMilliseconds}.units_per_second());
  EXPECT_DOUBLE_EQ(1.0, FormatParams{TimestampUnit::kSeconds}.units_per_second());
  EXPECT_EQ(TimestampUnit::kMilliseconds, parse_timestamp_unit("ms"));
  EXPECT_THROW(parse_timestamp_unit("ns"), Error);
}

TEST(EventsCsv, RoundTripAndValidation) {
  std::mt19937_64 rng(3);
  const EventSequence seq = oracle::random_sequence(rng, 200);
  const std::string text = write_events_csv(seq);
  EXPECT_EQ(0u, text.find("x,y,t_raw,p\n"));
  EXPECT_EQ(seq.events, read_events_csv(text, FormatParams{}).events);
  EXPECT_THROW(read_events_csv("a,b,c,d\n", FormatParams{}), Error);
  EXPECT_THROW(read_events_csv("x,y,t_raw,p\n1,2,3\n", FormatParams{}), Error);
  EXPECT_THROW(read_events_csv("x,y,t_raw,p\n1,2,3,2\n", FormatParams{}), Error);
  EXPECT_THROW(read_events_csv("x,y,t_raw,p\n300,2,3,1\n", FormatParams{}), Error);
}

TEST(EventFiles, LoadDispatchesOnExtension) {
  const fs::path dir = temp_dir("files");
  EventSequence seq;
  seq.events = {{1, 2, 3, Polarity::kPos}, {4, 5, 6, Polarity::kNeg}};
  save_events(dir / "a.bin", seq);
  save_events(dir / "a.evt.csv", seq);
  EXPECT_EQ(10u, fs::file_size(dir / "a.bin"));
  EXPECT_EQ(seq.events, load_events(dir / "a.bin", FormatParams{}).events);
  EXPECT_EQ(seq.events, load_events(dir / "a.evt.csv", FormatParams{}).events);
  EXPECT_EQ((dir / "a.bin").string(), load_events(dir / "a.bin", FormatParams{}).source_id);
  EXPECT_THROW(load_events(dir / "missing.bin", FormatParams{}), Error);
}

TEST(WalkDataset, EmptyRoot) { EXPECT_TRUE(walk_dataset(temp_dir("empty")).empty()); }

TEST(WalkDataset, LexicographicOrder) {
  const fs::path root = temp_dir("order");
  for (const char* cls : {"b", "a"}) {
    fs::create_directories(root / cls);
    write_text_file(root / cls / "z.bin", "");
    write_text_file(root / cls / "m.bin", "");
  }
  const auto entries = walk_dataset(root);
  ASSERT_EQ(4u, entries.size());
  EXPECT_EQ("a", entries[0].label);
  EXPECT_EQ("m.bin", entries[0].source.filename());
  EXPECT_EQ("z.bin", entries[1].source.filename());
  EXPECT_EQ("b", entries[2].label);
}

TEST(WalkDataset, ManyClasses) {
  const fs::path root = temp_dir("classes");
  for (int c = 0; c < 101; ++c) {
    const fs::path dir = root / ("class_" + std::to_string(c));
    fs::create_directories(dir);
    write_text_file(dir / "image_0001.bin", "");
  }
  const auto entries = walk_dataset(root);
  std::set<std::string> labels;
  for (const auto& e : entries) labels.insert(e.label);
  EXPECT_EQ(101u, labels.size());
  EXPECT_TRUE(std::is_sorted(entries.begin(), entries.end(),
                             [](const auto& a, const auto& b) { return a.label < b.label; }));
}

TEST(WalkDataset, MissingRootIsIoError) {
  try {
    walk_dataset("/nonexistent/evpcc/root");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(ErrorCode::kIo, e.code());
    EXPECT_NE(std::string(e.what()).find("/nonexistent/evpcc/root"), std::string::npos);
  }
}
