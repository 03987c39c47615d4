// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

#include "evpcc/range_coder.hpp"

#include "evpcc/error.hpp"

namespace evpcc {

namespace {
constexpr std::uint32_t kTop = 1u << 24;
}

AdaptiveByteModel::AdaptiveByteModel() {
  for (int s = 1; s < 256; ++s) freq_[s] = 1;
  total_ = 255;
}

std::uint32_t AdaptiveByteModel::cumulative(std::uint8_t symbol) const {
  std::uint32_t cum = 0;
  for (int s = 0; s < symbol; ++s) cum += freq_[s];
  return cum;
}

std::uint8_t AdaptiveByteModel::find(std::uint32_t target, std::uint32_t& cum_out) const {
  std::uint32_t cum = 0;
  for (int s = 1; s < 256; ++s) {
    if (target < cum + freq_[s]) {
      cum_out = cum;
      return static_cast<std::uint8_t>(s);
    }
    cum += freq_[s];
  }
  cum_out = cum - freq_[255];
  return 255;
}

void AdaptiveByteModel::update(std::uint8_t symbol) {
  ++freq_[symbol];
  ++total_;
  if (total_ >= kMaxTotal) {
    total_ = 0;
    for (int s = 1; s < 256; ++s) {
      freq_[s] = (freq_[s] + 1) / 2;
      total_ += freq_[s];
    }
  }
}

void RangeEncoder::shift_low() {
  if (low_ < 0xFF000000ull || low_ > 0xFFFFFFFFull) {
    const auto carry = static_cast<std::uint8_t>(low_ >> 32);
    std::uint8_t temp = cache_;
    do {
      out_.push_back(static_cast<std::uint8_t>(temp + carry));
      temp = 0xFF;
    } while (--cache_size_ != 0);
    cache_ = static_cast<std::uint8_t>(low_ >> 24);
  }
  ++cache_size_;
  low_ = (low_ & 0x00FFFFFFull) << 8;
}

void RangeEncoder::encode(std::uint32_t cum, std::uint32_t freq, std::uint32_t total) {
  range_ /= total;
  low_ += std::uint64_t{cum} * range_;
  range_ *= freq;
  while (range_ < kTop) {
    range_ <<= 8;
    shift_low();
  }
}

void RangeEncoder::encode_symbol(AdaptiveByteModel& model, std::uint8_t symbol) {
  if (symbol == 0) throw Error(ErrorCode::kInvalidArgument, "occupancy byte 0 is not codable");
  encode(model.cumulative(symbol), model.freq(symbol), model.total());
  model.update(symbol);
}

std::vector<std::uint8_t> RangeEncoder::finish() {
  for (int i = 0; i < 5; ++i) shift_low();
  // The first emitted byte is the initial empty cache and is always zero.
  out_.erase(out_.begin());
  return std::move(out_);
}

RangeDecoder::RangeDecoder(std::span<const std::uint8_t> bytes) : in_(bytes) {
  for (int i = 0; i < 4; ++i) code_ = (code_ << 8) | next_byte();
}

std::uint8_t RangeDecoder::next_byte() {
  if (pos_ < in_.size()) return in_[pos_++];
  ++overrun_;
  return 0;
}

std::uint8_t RangeDecoder::decode_symbol(AdaptiveByteModel& model) {
  range_ /= model.total();
  std::uint32_t target = code_ / range_;
  if (target >= model.total()) target = model.total() - 1;
  std::uint32_t cum = 0;
  const std::uint8_t symbol = model.find(target, cum);
  code_ -= cum * range_;
  range_ *= model.freq(symbol);
  while (range_ < kTop) {
    code_ = (code_ << 8) | next_byte();
    range_ <<= 8;
  }
  model.update(symbol);
  return symbol;
}

}  // namespace evpcc
