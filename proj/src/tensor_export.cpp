// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

#include "evpcc/tensor_export.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <numeric>

#include <json.hpp>

#include "evpcc/error.hpp"

namespace evpcc {

static_assert(std::endian::native == std::endian::little, "tensor container assumes a little-endian host");

double EventTensor::sum() const { return std::accumulate(values.begin(), values.end(), 0.0); }

EventTensor build_tensor(const EventSequence& seq, std::size_t bins, std::size_t height, std::size_t width) {
  if (bins == 0) throw Error(ErrorCode::kInvalidArgument, "tensor needs at least one temporal bin");
  EventTensor t;
  t.bins = bins;
  t.height = height;
  t.width = width;
  t.source_id = seq.source_id.value_or("");
  t.values.assign(t.channels() * height * width, 0.0);
  if (seq.events.empty()) return t;

  const auto [lo, hi] = std::minmax_element(seq.events.begin(), seq.events.end(),
                                            [](const Event& a, const Event& b) { return a.t_raw < b.t_raw; });
  t.t_min = lo->t_raw;
  t.t_max = hi->t_raw;
  const double span = static_cast<double>(t.t_max - t.t_min);
  const double scale = static_cast<double>(bins - 1);

  for (const Event& e : seq.events) {
    if (e.x >= width || e.y >= height) {
      throw Error(ErrorCode::kInvalidArgument, "event (" + std::to_string(e.x) + "," + std::to_string(e.y) +
                                                   ") outside the " + std::to_string(height) + "x" +
                                                   std::to_string(width) + " grid");
    }
    const double pos = span > 0.0 ? static_cast<double>(e.t_raw - t.t_min) / span * scale : 0.0;
    const auto bin = std::min(static_cast<std::size_t>(std::floor(pos)), bins - 1);
    const double frac = pos - static_cast<double>(bin);
    const std::size_t base = e.p == Polarity::kPos ? bins : 0;
    t.values[t.index(base + bin, e.y, e.x)] += 1.0 - frac;
    if (frac > 0.0 && bin + 1 < bins) t.values[t.index(base + bin + 1, e.y, e.x)] += frac;
  }
  return t;
}

std::vector<std::uint8_t> write_tensor(const EventTensor& t) {
  if (t.values.size() != t.channels() * t.height * t.width) {
    throw Error(ErrorCode::kInvalidArgument, "tensor value count does not match its dimensions");
  }
  nlohmann::ordered_json header;
  header["dims"] = {t.channels(), t.height, t.width};
  header["bins"] = t.bins;
  header["t_min"] = t.t_min;
  header["t_max"] = t.t_max;
  header["source_id"] = t.source_id;
  header["dtype"] = "f32";
  header["layout"] = "C,H,W";
  header["channel_order"] = "neg_bins,pos_bins";
  const std::string line = header.dump() + "\n";
  std::vector<std::uint8_t> out(line.begin(), line.end());
  const std::size_t offset = out.size();
  out.resize(offset + 4 * t.values.size());
  for (std::size_t i = 0; i < t.values.size(); ++i) {
    const float f = static_cast<float>(t.values[i]);
    std::memcpy(out.data() + offset + 4 * i, &f, 4);
  }
  return out;
}

EventTensor read_tensor(std::span<const std::uint8_t> bytes) {
  const auto nl = std::find(bytes.begin(), bytes.end(), std::uint8_t{'\n'});
  if (nl == bytes.end()) throw Error(ErrorCode::kParse, "tensor file has no header line");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(bytes.begin(), nl);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("bad tensor header: ") + e.what());
  }
  EventTensor t;
  std::size_t c = 0;
  try {
    if (header.at("dtype") != "f32" || header.at("layout") != "C,H,W") {
      throw Error(ErrorCode::kParse, "unsupported tensor dtype or layout");
    }
    const auto dims = header.at("dims").get<std::vector<std::size_t>>();
    if (dims.size() != 3) throw Error(ErrorCode::kParse, "tensor dims must have 3 entries");
    c = dims[0];
    t.height = dims[1];
    t.width = dims[2];
    t.bins = header.at("bins").get<std::size_t>();
    t.t_min = header.at("t_min").get<std::uint32_t>();
    t.t_max = header.at("t_max").get<std::uint32_t>();
    t.source_id = header.at("source_id").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("bad tensor header: ") + e.what());
  }
  if (c != 2 * t.bins) throw Error(ErrorCode::kParse, "tensor channel count is not 2 * bins");
  const std::size_t count = c * t.height * t.width;
  const auto body = static_cast<std::size_t>(bytes.end() - (nl + 1));
  if (body != 4 * count) {
    throw Error(ErrorCode::kParse, "tensor body has " + std::to_string(body) + " bytes, header implies " +
                                       std::to_string(4 * count));
  }
  t.values.resize(count);
  const std::uint8_t* data = bytes.data() + (nl - bytes.begin()) + 1;
  for (std::size_t i = 0; i < count; ++i) {
    float f;
    std::memcpy(&f, data + 4 * i, 4);
    t.values[i] = f;
  }
  return t;
}

}  // namespace evpcc
