// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

#include "evpcc/octree_codec.hpp"

#include <algorithm>
#include <cstring>
#include <limits>

#include "evpcc/error.hpp"
#include "evpcc/range_coder.hpp"

namespace evpcc {

OctreeMode parse_octree_mode(const std::string& text) {
  if (text == "lossless") return OctreeMode::kLossless;
  if (text == "lossy") return OctreeMode::kLossy;
  throw Error(ErrorCode::kInvalidArgument, "unknown codec mode '" + text + "' (expected lossless or lossy)");
}

void OctreeConfig::validate() const {
  if (truncate_levels < 0) throw Error(ErrorCode::kInvalidArgument, "truncate_levels must be >= 0");
  if (mode == OctreeMode::kLossless && truncate_levels != 0) {
    throw Error(ErrorCode::kInvalidArgument, "lossless mode requires truncate_levels = 0");
  }
  if (score_radius < 1 || score_radius > 255) {
    throw Error(ErrorCode::kInvalidArgument, "score_radius must be in [1, 255]");
  }
}

namespace {

constexpr char kMagic[4] = {'E', 'O', 'C', '1'};

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T value) {
  using U = std::make_unsigned_t<T>;
  const auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(u >> (8 * i)));
}

template <typename T>
T get_le(std::span<const std::uint8_t> bytes, std::size_t& pos) {
  using U = std::make_unsigned_t<T>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(U{bytes[pos + i]} << (8 * i));
  pos += sizeof(T);
  return static_cast<T>(u);
}

std::uint64_t interleave(std::uint64_t x, std::uint64_t y, std::uint64_t z, int depth) {
  std::uint64_t code = 0;
  for (int b = depth - 1; b >= 0; --b) {
    code = (code << 3) | (((x >> b) & 1u) << 2) | (((y >> b) & 1u) << 1) | ((z >> b) & 1u);
  }
  return code;
}

std::array<std::int64_t, 3> deinterleave(std::uint64_t code, int levels) {
  std::array<std::int64_t, 3> xyz{};
  for (int b = 0; b < levels; ++b) {
    const std::uint64_t triple = code >> (3 * b);
    xyz[0] |= static_cast<std::int64_t>(((triple >> 2) & 1u) << b);
    xyz[1] |= static_cast<std::int64_t>(((triple >> 1) & 1u) << b);
    xyz[2] |= static_cast<std::int64_t>((triple & 1u) << b);
  }
  return xyz;
}

std::int32_t checked_i32(std::int64_t v) {
  if (v < std::numeric_limits<std::int32_t>::min() || v > std::numeric_limits<std::int32_t>::max()) {
    throw Error(ErrorCode::kCoordinateOverflow, "coordinate " + std::to_string(v) + " exceeds 32 bits");
  }
  return static_cast<std::int32_t>(v);
}

}  // namespace

std::vector<std::uint8_t> OctreeBitstream::serialize() const {
  std::vector<std::uint8_t> out;
  out.reserve(size_bytes());
  out.insert(out.end(), std::begin(kMagic), std::end(kMagic));
  out.push_back(static_cast<std::uint8_t>(header.polarity));
  out.push_back(static_cast<std::uint8_t>(header.mode));
  out.push_back(header.depth);
  out.push_back(header.truncate_levels);
  out.push_back(header.score_radius);
  for (auto v : header.origin) put_le<std::int32_t>(out, v);
  for (auto v : header.bbox_max) put_le<std::int32_t>(out, v);
  put_le<std::uint32_t>(out, header.n_input_points);
  put_le<std::uint32_t>(out, header.n_output_nodes);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(payload.size()));
  out.insert(out.end(), payload.begin(), payload.end());
  return out;
}

OctreeBitstream OctreeBitstream::parse(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < kOctreeHeaderBytes || std::memcmp(bytes.data(), kMagic, 4) != 0) {
    throw Error(ErrorCode::kParse, "not an EOC1 bitstream");
  }
  OctreeBitstream bs;
  std::size_t pos = 4;
  const std::uint8_t polarity = bytes[pos++];
  const std::uint8_t mode = bytes[pos++];
  if (polarity > 1 || mode > 1) throw Error(ErrorCode::kParse, "bad polarity or mode in EOC1 header");
  bs.header.polarity = static_cast<Polarity>(polarity);
  bs.header.mode = static_cast<OctreeMode>(mode);
  bs.header.depth = bytes[pos++];
  bs.header.truncate_levels = bytes[pos++];
  bs.header.score_radius = bytes[pos++];
  for (auto& v : bs.header.origin) v = get_le<std::int32_t>(bytes, pos);
  for (auto& v : bs.header.bbox_max) v = get_le<std::int32_t>(bytes, pos);
  bs.header.n_input_points = get_le<std::uint32_t>(bytes, pos);
  bs.header.n_output_nodes = get_le<std::uint32_t>(bytes, pos);
  bs.header.payload_bytes = get_le<std::uint32_t>(bytes, pos);
  if (bytes.size() - pos != bs.header.payload_bytes) {
    throw Error(ErrorCode::kParse, "EOC1 payload length does not match header");
  }
  bs.payload.assign(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.end());
  return bs;
}

OctreeBitstream empty_bitstream(Polarity polarity, const OctreeConfig& cfg) {
  cfg.validate();
  OctreeBitstream bs;
  bs.header.polarity = polarity;
  bs.header.mode = cfg.mode;
  bs.header.truncate_levels = static_cast<std::uint8_t>(std::min(cfg.truncate_levels, 255));
  bs.header.score_radius = static_cast<std::uint8_t>(cfg.score_radius);
  return bs;
}

OctreeBitstream encode(const EventPointCloud& pc, const OctreeConfig& cfg) {
  cfg.validate();
  if (pc.empty()) throw Error(ErrorCode::kEmptyInput, "cannot encode an empty point cloud");
  if (pc.size() > std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::kInvalidArgument, "point cloud too large for the EOC1 header");
  }

  OctreeHeader h;
  h.polarity = pc.polarity();
  h.mode = cfg.mode;
  h.score_radius = static_cast<std::uint8_t>(cfg.score_radius);
  std::array<std::int64_t, 3> lo{}, hi{};
  lo.fill(std::numeric_limits<std::int64_t>::max());
  hi.fill(std::numeric_limits<std::int64_t>::min());
  for (const Voxel& v : pc.points()) {
    const std::int64_t c[3] = {v.x, v.y, v.z};
    for (int a = 0; a < 3; ++a) {
      lo[a] = std::min(lo[a], c[a]);
      hi[a] = std::max(hi[a], c[a]);
    }
  }
  std::int64_t extent = 1;
  for (int a = 0; a < 3; ++a) {
    h.origin[a] = checked_i32(lo[a]);
    h.bbox_max[a] = checked_i32(hi[a]);
    extent = std::max(extent, hi[a] - lo[a] + 1);
  }
  int depth = 0;
  while ((std::int64_t{1} << depth) < extent) ++depth;
  if (depth > kMaxOctreeDepth) {
    throw Error(ErrorCode::kCoordinateOverflow, "bounding cube needs depth " + std::to_string(depth) +
                                                    " (max " + std::to_string(kMaxOctreeDepth) + ")");
  }
  const int truncate = std::min(cfg.truncate_levels, depth);
  h.depth = static_cast<std::uint8_t>(depth);
  h.truncate_levels = static_cast<std::uint8_t>(truncate);
  h.n_input_points = static_cast<std::uint32_t>(pc.size());

  std::vector<std::uint64_t> codes;
  codes.reserve(pc.size());
  for (const Voxel& v : pc.points()) {
    codes.push_back(interleave(static_cast<std::uint64_t>(v.x - lo[0]), static_cast<std::uint64_t>(v.y - lo[1]),
                               static_cast<std::uint64_t>(v.z - lo[2]), depth));
  }
  std::sort(codes.begin(), codes.end());

  RangeEncoder enc;
  AdaptiveByteModel model;
  for (int level = 0; level < depth - truncate; ++level) {
    const int node_shift = 3 * (depth - level);
    const int child_shift = node_shift - 3;
    std::size_t i = 0;
    while (i < codes.size()) {
      const std::uint64_t node = codes[i] >> node_shift;
      std::uint8_t occupancy = 0;
      for (; i < codes.size() && (codes[i] >> node_shift) == node; ++i) {
        occupancy |= static_cast<std::uint8_t>(1u << ((codes[i] >> child_shift) & 7u));
      }
      enc.encode_symbol(model, occupancy);
    }
  }

  std::uint32_t leaves = 0;
  for (std::size_t i = 0; i < codes.size(); ++i) {
    if (i == 0 || (codes[i] >> (3 * truncate)) != (codes[i - 1] >> (3 * truncate))) ++leaves;
  }
  h.n_output_nodes = leaves;

  OctreeBitstream bs;
  if (depth - truncate > 0) bs.payload = enc.finish();
  h.payload_bytes = static_cast<std::uint32_t>(bs.payload.size());
  bs.header = h;
  return bs;
}

EventPointCloud decode(const OctreeBitstream& bs) {
  const OctreeHeader& h = bs.header;
  if (h.score_radius < 1) throw Error(ErrorCode::kParse, "score_radius must be >= 1");
  if (h.n_input_points == 0) {
    EventPointCloud empty = EventPointCloud::from_points(h.polarity, {}, std::vector<double>{});
    return empty;
  }
  if (h.depth > kMaxOctreeDepth || h.truncate_levels > h.depth) {
    throw Error(ErrorCode::kParse, "inconsistent depth/truncation in header");
  }
  if (h.mode == OctreeMode::kLossless && (h.truncate_levels != 0 || h.n_output_nodes != h.n_input_points)) {
    throw Error(ErrorCode::kCorruptPayload, "lossless header advertises a truncated tree");
  }

  const int depth = h.depth;
  const int truncate = h.truncate_levels;
  std::vector<std::uint64_t> nodes{0};
  RangeDecoder dec(bs.payload);
  AdaptiveByteModel model;
  for (int level = 0; level < depth - truncate; ++level) {
    std::vector<std::uint64_t> next;
    next.reserve(std::min<std::size_t>(nodes.size() * 8, h.n_output_nodes));
    for (const std::uint64_t node : nodes) {
      const std::uint8_t occupancy = dec.decode_symbol(model);
      for (unsigned bit = 0; bit < 8; ++bit) {
        if (occupancy & (1u << bit)) next.push_back((node << 3) | bit);
      }
      if (next.size() > h.n_output_nodes || dec.overran()) {
        throw Error(ErrorCode::kCorruptPayload, "occupancy stream exceeds the advertised node count");
      }
    }
    nodes = std::move(next);
  }
  if (nodes.size() != h.n_output_nodes || dec.overran()) {
    throw Error(ErrorCode::kCorruptPayload, "decoded " + std::to_string(nodes.size()) + " nodes, header says " +
                                                std::to_string(h.n_output_nodes));
  }

  const std::int64_t half = truncate > 0 ? (std::int64_t{1} << (truncate - 1)) : 0;
  std::vector<Voxel> points;
  points.reserve(nodes.size());
  for (const std::uint64_t node : nodes) {
    const auto cell = deinterleave(node, depth - truncate);
    std::array<std::int64_t, 3> c{};
    for (int a = 0; a < 3; ++a) {
      c[a] = std::clamp<std::int64_t>(h.origin[a] + (cell[a] << truncate) + half, h.origin[a], h.bbox_max[a]);
    }
    points.push_back({c[0], c[1], c[2]});
  }
  std::sort(points.begin(), points.end());
  points.erase(std::unique(points.begin(), points.end()), points.end());
  auto scores = occupancy_scores(points, h.score_radius);
  return EventPointCloud::from_points(h.polarity, std::move(points), std::move(scores));
}

std::vector<double> occupancy_scores(std::span<const Voxel> sorted_points, int radius) {
  if (radius < 1) throw Error(ErrorCode::kInvalidArgument, "score radius must be >= 1");
  const double window = static_cast<double>(2 * radius + 1) * (2 * radius + 1) * (2 * radius + 1);
  std::vector<double> scores;
  scores.reserve(sorted_points.size());
  for (const Voxel& v : sorted_points) {
    std::size_t count = 0;
    for (std::int64_t dx = -radius; dx <= radius; ++dx) {
      for (std::int64_t dy = -radius; dy <= radius; ++dy) {
        const auto first = std::lower_bound(sorted_points.begin(), sorted_points.end(),
                                            Voxel{v.x + dx, v.y + dy, v.z - radius});
        const auto last = std::upper_bound(first, sorted_points.end(), Voxel{v.x + dx, v.y + dy, v.z + radius});
        count += static_cast<std::size_t>(last - first);
      }
    }
    scores.push_back(static_cast<double>(count) / window);
  }
  return scores;
}

double rate_bpe(std::size_t bytes_pos, std::size_t bytes_neg, std::size_t n_original_events) {
  if (n_original_events == 0) throw Error(ErrorCode::kEmptyInput, "bits-per-event needs at least one event");
  return 8.0 * static_cast<double>(bytes_pos + bytes_neg) / static_cast<double>(n_original_events);
}

double rate_bpe(const OctreeBitstream& pos, const OctreeBitstream& neg, std::size_t n_original_events) {
  return rate_bpe(pos.size_bytes(), neg.size_bytes(), n_original_events);
}

}  // namespace evpcc
