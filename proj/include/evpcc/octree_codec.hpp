// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef EVPCC_OCTREE_CODEC_HPP
#define EVPCC_OCTREE_CODEC_HPP

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "evpcc/pc_model.hpp"

namespace evpcc {

enum class OctreeMode : std::uint8_t { kLossless = 0, kLossy = 1 };

OctreeMode parse_octree_mode(const std::string& text);

struct OctreeConfig {
  OctreeMode mode = OctreeMode::kLossless;
  int truncate_levels = 0;  // bottom levels dropped in lossy mode
  int score_radius = 2;     // Chebyshev radius of the decoder occupancy score

  void validate() const;
};

inline constexpr int kMaxOctreeDepth = 21;
inline constexpr std::size_t kOctreeHeaderBytes = 45;

struct OctreeHeader {
  Polarity polarity = Polarity::kNeg;
  OctreeMode mode = OctreeMode::kLossless;
  std::uint8_t depth = 0;
  std::uint8_t truncate_levels = 0;
  std::uint8_t score_radius = 2;
  std::array<std::int32_t, 3> origin{};
  std::array<std::int32_t, 3> bbox_max{};
  std::uint32_t n_input_points = 0;
  std::uint32_t n_output_nodes = 0;
  std::uint32_t payload_bytes = 0;
};

/// `.eoc` layout: magic "EOC1", then polarity, mode, depth, truncate_levels,
/// score_radius (u8 each), origin[3], bbox_max[3] (i32), n_input_points,
/// n_output_nodes, payload_bytes (u32), all little-endian, then the payload.
struct OctreeBitstream {
  OctreeHeader header;
  std::vector<std::uint8_t> payload;

  std::size_t size_bytes() const { return kOctreeHeaderBytes + payload.size(); }
  std::vector<std::uint8_t> serialize() const;
  static OctreeBitstream parse(std::span<const std::uint8_t> bytes);
};

/// Breadth-first octree occupancy coding. One occupancy byte per internal
/// node, child bit (dx << 2) | (dy << 1) | dz, range coded with an adaptive
/// order-0 model. Lossy mode stops `truncate_levels` above the leaves.
OctreeBitstream encode(const EventPointCloud& pc, const OctreeConfig& cfg);

/// Header-only stream for an empty cloud; decodes to an empty cloud.
OctreeBitstream empty_bitstream(Polarity polarity, const OctreeConfig& cfg);

/// Reconstructs the cloud. Truncated nodes become one point at their center,
/// clamped to the original bounding box. Every decoded point carries an
/// occupancy score (see occupancy_scores).
EventPointCloud decode(const OctreeBitstream& bs);

/// score(v) = #{points within Chebyshev distance `radius` of v, v included}
///            / (2 * radius + 1)^3
std::vector<double> occupancy_scores(std::span<const Voxel> sorted_points, int radius);

/// 8 * (bytes_pos + bytes_neg) / n_original_events.
double rate_bpe(std::size_t bytes_pos, std::size_t bytes_neg, std::size_t n_original_events);
double rate_bpe(const OctreeBitstream& pos, const OctreeBitstream& neg, std::size_t n_original_events);

struct ExternalCodecCommand {
  std::string encode_cmd;  // placeholders {in}, {bin}, {out}
  std::string decode_cmd;

  /// Splits "<encode cmd>;<decode cmd>" at the first ';'.
  static ExternalCodecCommand parse(const std::string& spec);
};

struct ExternalCodecResult {
  EventPointCloud decoded;
  std::size_t compressed_bytes = 0;
  std::string log;
};

/// Runs the encode then decode command through the shell with placeholders
/// replaced by quoted paths inside `workdir`, measures the size of {bin} and
/// parses {out} as PLY.
ExternalCodecResult run_external_codec(const ExternalCodecCommand& cmd, const std::filesystem::path& input_ply,
                                       const std::filesystem::path& workdir, Polarity polarity);

}  // namespace evpcc

#endif  // EVPCC_OCTREE_CODEC_HPP
