// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef EVPCC_RANGE_CODER_HPP
#define EVPCC_RANGE_CODER_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace evpcc {

/// Frequency-adaptive order-0 model over byte symbols 1..255. Every symbol
/// starts at frequency 1; coding a symbol adds 1 to its frequency and the
/// table is halved (rounding up) once the total reaches 2^16.
class AdaptiveByteModel {
 public:
  static constexpr std::uint32_t kMaxTotal = 1u << 16;

  AdaptiveByteModel();

  std::uint32_t total() const { return total_; }
  std::uint32_t freq(std::uint8_t symbol) const { return freq_[symbol]; }
  std::uint32_t cumulative(std::uint8_t symbol) const;
  /// Symbol whose cumulative interval contains `target` (< total()).
  std::uint8_t find(std::uint32_t target, std::uint32_t& cum_out) const;
  void update(std::uint8_t symbol);

 private:
  std::array<std::uint32_t, 256> freq_{};
  std::uint32_t total_ = 0;
};

/// Byte-oriented range encoder (32-bit range, carry propagated through a
/// cached output byte).
class RangeEncoder {
 public:
  void encode(std::uint32_t cum, std::uint32_t freq, std::uint32_t total);
  void encode_symbol(AdaptiveByteModel& model, std::uint8_t symbol);
  std::vector<std::uint8_t> finish();

 private:
  void shift_low();

  std::uint64_t low_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint8_t cache_ = 0;
  std::uint64_t cache_size_ = 1;
  std::vector<std::uint8_t> out_;
};

class RangeDecoder {
 public:
  explicit RangeDecoder(std::span<const std::uint8_t> bytes);

  std::uint8_t decode_symbol(AdaptiveByteModel& model);
  /// True once the decoder has asked for bytes past the end of its input.
  bool overran() const { return overrun_ > 4; }

 private:
  std::uint8_t next_byte();

  std::span<const std::uint8_t> in_;
  std::size_t pos_ = 0;
  std::size_t overrun_ = 0;
  std::uint32_t range_ = 0xFFFFFFFFu;
  std::uint32_t code_ = 0;
};

}  // namespace evpcc

#endif  // EVPCC_RANGE_CODER_HPP
