// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef EVPCC_CONVERT_HPP
#define EVPCC_CONVERT_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evpcc/event_io.hpp"
#include "evpcc/pc_model.hpp"

namespace evpcc {

enum class DuplicateMethod { kNearestNeighbor, kProbability };

DuplicateMethod parse_duplicate_method(const std::string& text);
const char* to_string(DuplicateMethod method);

struct ConversionConfig {
  std::int64_t tsf = 256;  // temporal scaling factor, >= 1
  DuplicateMethod duplicate_method = DuplicateMethod::kNearestNeighbor;
};

struct ConversionStats {
  std::size_t n_input_events = 0;
  std::size_t n_discarded_same_polarity = 0;
  std::size_t n_cross_polarity_duplicates = 0;
  std::size_t n_output_points_pos = 0;
  std::size_t n_output_points_neg = 0;

  double discarded_percent() const {
    return n_input_events == 0 ? 0.0 : 100.0 * static_cast<double>(n_discarded_same_polarity) /
                                           static_cast<double>(n_input_events);
  }
};

struct PolaritySplit {
  EventPointCloud pos{Polarity::kPos};
  EventPointCloud neg{Polarity::kNeg};
  ConversionStats stats;
};

/// Round half away from zero. Every voxelization and rescaling step uses it.
std::int64_t round_half_away(double value);

/// z coordinate of a raw timestamp: round(t_raw / units_per_second * tsf).
std::int64_t scaled_time(std::uint32_t t_raw, double units_per_second, std::int64_t tsf);

/// Scales timestamps, voxelizes, drops same-polarity duplicates and splits by
/// polarity. A voxel hit by both polarities yields one point in each cloud.
PolaritySplit event_to_pc(const EventSequence& seq, const ConversionConfig& cfg);

/// Merges both clouds, resolves every voxel present in both to a single
/// polarity with the configured method, then rescales z back to raw
/// timestamps. Output is sorted by (t_raw, x, y).
EventSequence pc_to_event(const EventPointCloud& pos, const EventPointCloud& neg,
                          const ConversionConfig& cfg, double units_per_second);

struct TaggedVoxel {
  Voxel v;
  Polarity p = Polarity::kNeg;
};

/// Polarity assigned when every candidate has been consumed with POS and NEG
/// votes still tied.
inline constexpr Polarity kExhaustedTiePolarity = Polarity::kPos;

/// Nearest-neighbor duplicate resolution. Candidates are the merged points
/// whose voxel is not in `duplicates`. Candidates are consumed in whole
/// equal-distance groups, nearest first, until POS and NEG vote counts differ.
std::vector<Polarity> resolve_duplicates_nn(std::span<const TaggedVoxel> merged,
                                            std::span<const Voxel> duplicates);

/// Picks the polarity whose cloud scores the voxel higher; exact ties fall back
/// to the nearest-neighbor rule for that voxel.
std::vector<Polarity> resolve_duplicates_prob(std::span<const Voxel> duplicates,
                                              const EventPointCloud& pos, const EventPointCloud& neg,
                                              std::span<const TaggedVoxel> merged);

/// Voxels present in both clouds, sorted.
std::vector<Voxel> cross_duplicates(const EventPointCloud& pos, const EventPointCloud& neg);

}  // namespace evpcc

#endif  // EVPCC_CONVERT_HPP
