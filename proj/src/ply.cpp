// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

#include <charconv>
#include <cmath>
#include <cstring>
#include <sstream>

#include "evpcc/error.hpp"
#include "evpcc/pc_model.hpp"

namespace evpcc {

std::string write_ply(const EventPointCloud& pc) {
  std::ostringstream out;
  out << "ply\nformat ascii 1.0\n";
  out << "comment polarity " << (pc.polarity() == Polarity::kPos ? "pos" : "neg") << '\n';
  out << "element vertex " << pc.size() << '\n';
  out << "property int x\nproperty int y\nproperty int z\n";
  if (pc.has_scores()) out << "property double score\n";
  out << "end_header\n";
  out.precision(17);
  for (std::size_t i = 0; i < pc.size(); ++i) {
    const Voxel& v = pc.points()[i];
    out << v.x << ' ' << v.y << ' ' << v.z;
    if (pc.has_scores()) out << ' ' << (*pc.scores())[i];
    out << '\n';
  }
  return out.str();
}

namespace {

enum class PlyFormat { kAscii, kBinaryLittleEndian };

struct PlyProperty {
  std::string name;
  std::string type;
  bool is_list = false;
};

struct PlyElement {
  std::string name;
  std::size_t count = 0;
  std::vector<PlyProperty> properties;
};

std::size_t type_size(const std::string& type) {
  if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
  if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
  if (type == "int" || type == "uint" || type == "float" || type == "int32" || type == "uint32" ||
      type == "float32") {
    return 4;
  }
  if (type == "double" || type == "float64") return 8;
  throw Error(ErrorCode::kParse, "unsupported PLY property type '" + type + "'");
}

template <typename T>
T load_le(const std::uint8_t* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  return value;
}

double read_binary_scalar(const std::string& type, const std::uint8_t* p) {
  if (type == "char" || type == "int8") return load_le<std::int8_t>(p);
  if (type == "uchar" || type == "uint8") return load_le<std::uint8_t>(p);
  if (type == "short" || type == "int16") return load_le<std::int16_t>(p);
  if (type == "ushort" || type == "uint16") return load_le<std::uint16_t>(p);
  if (type == "int" || type == "int32") return load_le<std::int32_t>(p);
  if (type == "uint" || type == "uint32") return load_le<std::uint32_t>(p);
  if (type == "float" || type == "float32") return load_le<float>(p);
  return load_le<double>(p);
}

std::int64_t to_coordinate(double v) {
  if (!std::isfinite(v) || std::floor(v) != v) {
    throw Error(ErrorCode::kParse, "non-integer PLY coordinate");
  }
  return static_cast<std::int64_t>(v);
}

}  // namespace

EventPointCloud read_ply(std::span<const std::uint8_t> bytes, Polarity polarity) {
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string {
    if (pos >= text.size()) throw Error(ErrorCode::kParse, "PLY header ended without end_header");
    const auto nl = text.find('\n', pos);
    std::string line(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() : nl + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
  };

  if (next_line() != "ply") throw Error(ErrorCode::kParse, "missing 'ply' magic line");
  std::optional<PlyFormat> format;
  std::vector<PlyElement> elements;
  for (;;) {
    const std::string line = next_line();
    std::istringstream words(line);
    std::string keyword;
    words >> keyword;
    if (keyword == "end_header") break;
    if (keyword == "comment" || keyword == "obj_info" || keyword.empty()) continue;
    if (keyword == "format") {
      std::string name;
      words >> name;
      if (name == "ascii") format = PlyFormat::kAscii;
      else if (name == "binary_little_endian") format = PlyFormat::kBinaryLittleEndian;
      else throw Error(ErrorCode::kParse, "unsupported PLY format '" + name + "'");
    } else if (keyword == "element") {
      PlyElement el;
      if (!(words >> el.name >> el.count)) throw Error(ErrorCode::kParse, "malformed element line: " + line);
      elements.push_back(std::move(el));
    } else if (keyword == "property") {
      if (elements.empty()) throw Error(ErrorCode::kParse, "property before any element");
      PlyProperty prop;
      std::string type;
      words >> type;
      if (type == "list") {
        std::string count_type, item_type;
        words >> count_type >> item_type >> prop.name;
        prop.is_list = true;
        prop.type = count_type + ' ' + item_type;
      } else {
        prop.type = type;
        words >> prop.name;
        type_size(type);
      }
      if (prop.name.empty()) throw Error(ErrorCode::kParse, "malformed property line: " + line);
      elements.back().properties.push_back(std::move(prop));
    } else {
      throw Error(ErrorCode::kParse, "unexpected PLY header line: " + line);
    }
  }
  if (!format) throw Error(ErrorCode::kParse, "PLY header has no format line");

  std::size_t vertex_el = elements.size();
  for (std::size_t i = 0; i < elements.size(); ++i) {
    if (elements[i].name == "vertex") {
      vertex_el = i;
      break;
    }
  }
  if (vertex_el == elements.size()) throw Error(ErrorCode::kParse, "PLY has no vertex element");
  const PlyElement& vertex = elements[vertex_el];
  int ix = -1, iy = -1, iz = -1, iscore = -1;
  for (std::size_t i = 0; i < vertex.properties.size(); ++i) {
    const auto& name = vertex.properties[i].name;
    const int idx = static_cast<int>(i);
    if (name == "x") ix = idx;
    else if (name == "y") iy = idx;
    else if (name == "z") iz = idx;
    else if (name == "score") iscore = idx;
  }
  if (ix < 0 || iy < 0 || iz < 0) throw Error(ErrorCode::kParse, "vertex element lacks x, y or z");

  std::vector<Voxel> points;
  std::vector<double> scores;
  points.reserve(vertex.count);
  std::vector<double> row(vertex.properties.size());

  if (*format == PlyFormat::kAscii) {
    // Skip the rows of any element declared before the vertices.
    for (std::size_t e = 0; e < vertex_el; ++e) {
      for (std::size_t r = 0; r < elements[e].count; ++r) next_line();
    }
    for (std::size_t r = 0; r < vertex.count; ++r) {
      if (pos >= text.size()) throw Error(ErrorCode::kParse, "PLY body has fewer vertices than declared");
      std::istringstream values(next_line());
      for (std::size_t i = 0; i < vertex.properties.size(); ++i) {
        if (vertex.properties[i].is_list) {
          throw Error(ErrorCode::kParse, "list properties on vertices are not supported");
        }
        if (!(values >> row[i])) throw Error(ErrorCode::kParse, "malformed PLY vertex row " + std::to_string(r));
      }
      points.push_back({to_coordinate(row[ix]), to_coordinate(row[iy]), to_coordinate(row[iz])});
      if (iscore >= 0) scores.push_back(row[iscore]);
    }
  } else {
    if (vertex_el != 0) throw Error(ErrorCode::kParse, "binary PLY must declare vertex as first element");
    std::size_t stride = 0;
    std::vector<std::size_t> offsets;
    for (const auto& prop : vertex.properties) {
      if (prop.is_list) throw Error(ErrorCode::kParse, "list properties on vertices are not supported");
      offsets.push_back(stride);
      stride += type_size(prop.type);
    }
    if (bytes.size() - pos < stride * vertex.count) {
      throw Error(ErrorCode::kParse, "binary PLY body shorter than declared");
    }
    for (std::size_t r = 0; r < vertex.count; ++r) {
      const std::uint8_t* base = bytes.data() + pos + r * stride;
      for (std::size_t i = 0; i < vertex.properties.size(); ++i) {
        row[i] = read_binary_scalar(vertex.properties[i].type, base + offsets[i]);
      }
      points.push_back({to_coordinate(row[ix]), to_coordinate(row[iy]), to_coordinate(row[iz])});
      if (iscore >= 0) scores.push_back(row[iscore]);
    }
  }

  std::optional<std::vector<double>> maybe_scores;
  if (iscore >= 0) maybe_scores = std::move(scores);
  return EventPointCloud::from_points(polarity, std::move(points), std::move(maybe_scores));
}

EventPointCloud load_ply(const std::filesystem::path& path, Polarity polarity) {
  const auto bytes = read_file_bytes(path);
  try {
    return read_ply(bytes, polarity);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void save_ply(const std::filesystem::path& path, const EventPointCloud& pc) {
  write_text_file(path, write_ply(pc));
}

}  // namespace evpcc
