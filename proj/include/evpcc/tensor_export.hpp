// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef EVPCC_TENSOR_EXPORT_HPP
#define EVPCC_TENSOR_EXPORT_HPP

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "evpcc/event_io.hpp"

namespace evpcc {

inline constexpr std::size_t kDefaultBins = 9;
inline constexpr std::size_t kDefaultHeight = 180;
inline constexpr std::size_t kDefaultWidth = 240;

/// Channels are polarity-major: NEG bins 0..B-1, then POS bins B..2B-1.
/// Values are stored C,H,W row-major.
struct EventTensor {
  std::size_t bins = 0;
  std::size_t height = 0;
  std::size_t width = 0;
  std::uint32_t t_min = 0;
  std::uint32_t t_max = 0;
  std::string source_id;
  std::vector<double> values;

  std::size_t channels() const { return 2 * bins; }
  std::size_t index(std::size_t c, std::size_t row, std::size_t col) const {
    return (c * height + row) * width + col;
  }
  double at(std::size_t c, std::size_t row, std::size_t col) const { return values[index(c, row, col)]; }
  double sum() const;
};

/// Linear temporal kernel: t* = (t - t_min) / (t_max - t_min) * (B - 1); an
/// event adds 1 - frac(t*) to bin floor(t*) and frac(t*) to the next bin.
EventTensor build_tensor(const EventSequence& seq, std::size_t bins = kDefaultBins,
                         std::size_t height = kDefaultHeight, std::size_t width = kDefaultWidth);

/// One JSON header line, '\n', then C*H*W little-endian f32 values.
std::vector<std::uint8_t> write_tensor(const EventTensor& t);
EventTensor read_tensor(std::span<const std::uint8_t> bytes);

}  // namespace evpcc

#endif  // EVPCC_TENSOR_EXPORT_HPP
