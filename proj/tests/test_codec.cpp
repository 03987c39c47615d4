// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <set>

#include "evpcc/error.hpp"
#include "evpcc/octree_codec.hpp"
#include "evpcc/range_coder.hpp"

using namespace evpcc;
namespace fs = std::filesystem;

namespace {

EventPointCloud random_cloud(std::mt19937_64& rng, std::size_t n, int extent, Polarity p = Polarity::kPos) {
  std::uniform_int_distribution<int> d(0, extent - 1);
  std::vector<Voxel> pts;
  for (std::size_t i = 0; i < n; ++i) pts.push_back({d(rng), d(rng), d(rng)});
  return EventPointCloud::from_points(p, std::move(pts));
}

OctreeConfig lossy(int truncate) {
  OctreeConfig cfg;
  cfg.mode = OctreeMode::kLossy;
  cfg.truncate_levels = truncate;
  return cfg;
}

ErrorCode code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("evpcc_codec_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST(RangeCoder, RoundTripsArbitrarySymbols) {
  std::mt19937_64 rng(2);
  std::uniform_int_distribution<int> sym(1, 255);
  std::vector<std::uint8_t> symbols(200000);
  for (auto& s : symbols) s = static_cast<std::uint8_t>(rng() % 7 ? 0xFF : sym(rng));
  RangeEncoder enc;
  AdaptiveByteModel em;
  for (auto s : symbols) enc.encode_symbol(em, s);
  const auto bytes = enc.finish();
  RangeDecoder dec(bytes);
  AdaptiveByteModel dm;
  for (auto s : symbols) ASSERT_EQ(s, dec.decode_symbol(dm));
  EXPECT_FALSE(dec.overran());
  EXPECT_LT(bytes.size(), symbols.size());
}

TEST(AdaptiveModel, HalvesAtLimit) {
  AdaptiveByteModel m;
  EXPECT_EQ(255u, m.total());
  EXPECT_EQ(0u, m.freq(0));
  while (m.total() + 1 < AdaptiveByteModel::kMaxTotal) m.update(7);
  m.update(7);
  EXPECT_LT(m.total(), AdaptiveByteModel::kMaxTotal);
  EXPECT_GE(m.freq(1), 1u);
}

TEST(Octree, SinglePointAtOrigin) {
  const auto pc = EventPointCloud::from_points(Polarity::kPos, {{0, 0, 0}});
  const auto dec = decode(encode(pc, {}));
  EXPECT_EQ(pc.points(), dec.points());
}

TEST(Octree, AllSingleLevelPatterns) {
  for (int pattern = 1; pattern < 256; ++pattern) {
    std::vector<Voxel> pts;
    for (int bit = 0; bit < 8; ++bit) {
      if (pattern & (1 << bit)) pts.push_back({(bit >> 2) & 1, (bit >> 1) & 1, bit & 1});
    }
    const auto pc = EventPointCloud::from_points(Polarity::kNeg, pts);
    const auto bs = encode(pc, {});
    EXPECT_EQ(pc.points(), decode(OctreeBitstream::parse(bs.serialize())).points()) << "pattern " << pattern;
  }
}

TEST(Octree, CubeCornersUseFullOccupancy) {
  std::vector<Voxel> pts;
  for (int bit = 0; bit < 8; ++bit) pts.push_back({(bit >> 2) & 1, (bit >> 1) & 1, bit & 1});
  const auto pc = EventPointCloud::from_points(Polarity::kPos, pts);
  const auto bs = encode(pc, {});
  EXPECT_EQ(1, bs.header.depth);
  EXPECT_EQ(8u, bs.header.n_output_nodes);
  // A lone 0xFF symbol decodes to the 8 children of the root.
  RangeDecoder dec(bs.payload);
  AdaptiveByteModel model;
  EXPECT_EQ(0xFF, dec.decode_symbol(model));
  EXPECT_EQ(pc.points(), decode(bs).points());
}

TEST(Octree, RandomCloudsAreLossless) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    std::mt19937_64 rng(seed);
    const int extent = 1 << (1 + seed % 8);
    const auto pc = random_cloud(rng, 1 + rng() % 5000, extent);
    const auto bytes = encode(pc, {}).serialize();
    EXPECT_EQ(bytes, encode(pc, {}).serialize());
    EXPECT_EQ(pc.points(), decode(OctreeBitstream::parse(bytes)).points()) << "seed " << seed;
  }
}

TEST(Octree, OffsetAndNegativeCoordinates) {
  const auto pc = EventPointCloud::from_points(Polarity::kPos, {{-5, 100, 7}, {-4, 130, 9}, {0, 101, 1000}});
  EXPECT_EQ(pc.points(), decode(encode(pc, {})).points());
}

TEST(Octree, SerializedHeaderSize) {
  std::mt19937_64 rng(1);
  const auto bs = encode(random_cloud(rng, 100, 64), {});
  EXPECT_EQ(kOctreeHeaderBytes + bs.payload.size(), bs.serialize().size());
  EXPECT_EQ(bs.size_bytes(), bs.serialize().size());
}

TEST(Octree, RootTruncationGivesCubeCenter) {
  const auto pc = EventPointCloud::from_points(Polarity::kPos, {{10, 10, 10}, {11, 17, 13}});
  const auto bs = encode(pc, lossy(3));
  ASSERT_EQ(3, bs.header.depth);
  const auto dec = decode(bs);
  ASSERT_EQ(1u, dec.size());
  // Cube [10, 18)^3, center 14, clamped to the bounding box.
  EXPECT_EQ((Voxel{11, 14, 13}), dec.points()[0]);
  EXPECT_EQ(bs.size_bytes(), encode(pc, lossy(50)).size_bytes());
}

TEST(Octree, IsolatedPointScore) {
  const auto pc = EventPointCloud::from_points(Polarity::kPos, {{0, 0, 0}, {100, 100, 100}});
  const auto dec = decode(encode(pc, lossy(0)));
  ASSERT_TRUE(dec.has_scores());
  for (double s : *dec.scores()) EXPECT_EQ(1.0 / 125.0, s);
}

TEST(Octree, ScoresMatchWindowRecount) {
  std::mt19937_64 rng(77);
  const auto pc = random_cloud(rng, 3000, 64);
  for (int t : {0, 1, 2}) {
    OctreeConfig cfg = lossy(t);
    cfg.score_radius = 1 + t;
    const auto dec = decode(encode(pc, cfg));
    const auto& pts = dec.points();
    const int r = cfg.score_radius;
    for (std::size_t i = 0; i < pts.size(); i += 13) {
      int count = 0;
      for (const Voxel& o : pts) {
        count += std::abs(o.x - pts[i].x) <= r && std::abs(o.y - pts[i].y) <= r && std::abs(o.z - pts[i].z) <= r;
      }
      const double s = (*dec.scores())[i];
      EXPECT_EQ(count / double((2 * r + 1) * (2 * r + 1) * (2 * r + 1)), s);
      EXPECT_GT(s, 0.0);
      EXPECT_LE(s, 1.0);
    }
  }
}

TEST(Octree, RateNonIncreasingInTruncation) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    std::mt19937_64 rng(seed);
    const auto pc = random_cloud(rng, 4000, 200);
    std::size_t prev = encode(pc, {}).size_bytes();
    for (int t = 1; t <= 8; ++t) {
      const std::size_t s = encode(pc, lossy(t)).size_bytes();
      EXPECT_LE(s, prev) << "seed " << seed << " truncate " << t;
      prev = s;
    }
  }
}

TEST(Octree, LossyPointsStayInsideBoundingBox) {
  const auto pc = EventPointCloud::from_points(Polarity::kNeg, {{3, 40, 9}, {70, 41, 12}, {5, 50, 200}});
  for (int t = 0; t <= 8; ++t) {
    const auto dec = decode(encode(pc, lossy(t)));
    for (const Voxel& v : dec.points()) {
      EXPECT_GE(v.x, 3);
      EXPECT_LE(v.x, 70);
      EXPECT_GE(v.y, 40);
      EXPECT_LE(v.y, 50);
      EXPECT_GE(v.z, 9);
      EXPECT_LE(v.z, 200);
    }
  }
}

TEST(Octree, Errors) {
  EXPECT_EQ(ErrorCode::kEmptyInput, code_of([] { encode(EventPointCloud(Polarity::kPos), {}); }));
  EXPECT_EQ(ErrorCode::kCoordinateOverflow, code_of([] {
              encode(EventPointCloud::from_points(Polarity::kPos, {{0, 0, 0}, {0, 0, 1ll << 40}}), {});
            }));
  EXPECT_EQ(ErrorCode::kInvalidArgument, code_of([] {
              OctreeConfig cfg;
              cfg.truncate_levels = 2;
              cfg.validate();
            }));
}

TEST(Octree, CorruptPayloadIsDetected) {
  std::mt19937_64 rng(9);
  const auto bs = encode(random_cloud(rng, 2000, 128), {});
  auto wrong_count = bs;
  wrong_count.header.n_output_nodes -= 1;
  wrong_count.header.n_input_points -= 1;
  EXPECT_EQ(ErrorCode::kCorruptPayload, code_of([&] { decode(wrong_count); }));
  auto short_payload = bs;
  short_payload.payload.resize(bs.payload.size() / 2);
  EXPECT_EQ(ErrorCode::kCorruptPayload, code_of([&] { decode(short_payload); }));
  auto bytes = bs.serialize();
  bytes.pop_back();
  EXPECT_EQ(ErrorCode::kParse, code_of([&] { OctreeBitstream::parse(bytes); }));
}

TEST(Octree, EmptyBitstreamDecodesEmpty) {
  const auto bs = empty_bitstream(Polarity::kNeg, {});
  EXPECT_EQ(kOctreeHeaderBytes, bs.size_bytes());
  EXPECT_TRUE(decode(OctreeBitstream::parse(bs.serialize())).empty());
}

TEST(Rate, BitsPerEvent) {
  EXPECT_EQ(16.0, rate_bpe(1000, 1048, 1024));
  EXPECT_EQ(8.0, rate_bpe(1000, 1048, 2048));
  EXPECT_EQ(8.0 * kOctreeHeaderBytes / 10.0,
            rate_bpe(empty_bitstream(Polarity::kPos, {}), empty_bitstream(Polarity::kNeg, {}), 20));
  EXPECT_EQ(ErrorCode::kEmptyInput, code_of([] { rate_bpe(1, 1, 0); }));
}

TEST(ExternalCodec, IdentityScript) {
  const fs::path dir = scratch("identity");
  std::mt19937_64 rng(3);
  const auto pc = random_cloud(rng, 300, 50, Polarity::kNeg);
  save_ply(dir / "in.ply", pc);
  const auto cmd = ExternalCodecCommand::parse("cp {in} {bin};cp {bin} {out}");
  const auto r = run_external_codec(cmd, dir / "in.ply", dir / "work", Polarity::kNeg);
  EXPECT_EQ(pc, r.decoded);
  EXPECT_EQ(fs::file_size(dir / "in.ply"), r.compressed_bytes);
}

TEST(ExternalCodec, FailingCommandCarriesCommandLine) {
  const fs::path dir = scratch("failing");
  save_ply(dir / "in.ply", EventPointCloud::from_points(Polarity::kPos, {{1, 2, 3}}));
  const auto cmd = ExternalCodecCommand::parse("echo broken-encoder >&2 && exit 3;cp {bin} {out}");
  try {
    run_external_codec(cmd, dir / "in.ply", dir / "work", Polarity::kPos);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(ErrorCode::kExternalCommand, e.code());
    EXPECT_NE(std::string(e.what()).find("exit 3"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("broken-encoder"), std::string::npos);
  }
  EXPECT_THROW(ExternalCodecCommand::parse("no separator"), Error);
}

TEST(ExternalCodec, MissingOutput) {
  const fs::path dir = scratch("missing");
  save_ply(dir / "in.ply", EventPointCloud::from_points(Polarity::kPos, {{1, 2, 3}}));
  const auto cmd = ExternalCodecCommand::parse("cp {in} {bin};true");
  EXPECT_THROW(run_external_codec(cmd, dir / "in.ply", dir / "work", Polarity::kPos), Error);
}

TEST(ExternalCodec, TruncatingCodecLosesPoints) {
  const fs::path dir = scratch("truncating");
  std::mt19937_64 rng(4);
  const auto pc = random_cloud(rng, 200, 40);
  save_ply(dir / "in.ply", pc);
  const auto cmd = ExternalCodecCommand::parse(
      "cp {in} {bin};awk '/^element vertex/ {print \"element vertex 1\"; next} {print} "
      "/^end_header/ {getline; print; exit}' {bin} > {out}");
  const auto r = run_external_codec(cmd, dir / "in.ply", dir / "work", Polarity::kPos);
  EXPECT_EQ(1u, r.decoded.size());
  EXPECT_LT(r.decoded.size(), pc.size());
}
