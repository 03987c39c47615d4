// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef EVPCC_PC_MODEL_HPP
#define EVPCC_PC_MODEL_HPP

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "evpcc/event_io.hpp"

namespace evpcc {

struct Voxel {
  std::int64_t x = 0;
  std::int64_t y = 0;
  std::int64_t z = 0;

  friend auto operator<=>(const Voxel&, const Voxel&) = default;
};

using Vec3 = std::array<double, 3>;

inline Vec3 to_vec(const Voxel& v) {
  return {static_cast<double>(v.x), static_cast<double>(v.y), static_cast<double>(v.z)};
}

/// Integer point set of a single polarity. Points are kept sorted
/// lexicographically and unique; when present, `scores[i]` belongs to
/// `points[i]`.
class EventPointCloud {
 public:
  EventPointCloud() = default;
  explicit EventPointCloud(Polarity polarity) : polarity_(polarity) {}

  /// Sorts and removes duplicate points. Scores, when given, must be parallel
  /// to `points`; the score of the first occurrence of a duplicate is kept.
  static EventPointCloud from_points(Polarity polarity, std::vector<Voxel> points,
                                     std::optional<std::vector<double>> scores = std::nullopt);

  Polarity polarity() const { return polarity_; }
  void set_polarity(Polarity p) { polarity_ = p; }

  const std::vector<Voxel>& points() const { return points_; }
  std::size_t size() const { return points_.size(); }
  bool empty() const { return points_.empty(); }

  bool has_scores() const { return scores_.has_value(); }
  const std::optional<std::vector<double>>& scores() const { return scores_; }

  bool contains(const Voxel& v) const;
  std::optional<std::size_t> find(const Voxel& v) const;
  /// Score of voxel `v`; nullopt when the cloud has no scores or no such point.
  std::optional<double> score_of(const Voxel& v) const;

  friend bool operator==(const EventPointCloud&, const EventPointCloud&) = default;

 private:
  Polarity polarity_ = Polarity::kNeg;
  std::vector<Voxel> points_;
  std::optional<std::vector<double>> scores_;
};

struct Neighbor {
  std::size_t index = 0;  // position in the indexed point array
  double dist2 = 0.0;
};

/// Static kd-tree over real-valued 3D points answering exact k-nearest-neighbor
/// queries under squared Euclidean distance. Results are ordered by distance,
/// then lexicographically by neighbor coordinates, then by index, so they are
/// identical to a sorted brute-force scan.
class NeighborIndex {
 public:
  explicit NeighborIndex(std::vector<Vec3> points, std::size_t leaf_size = 12);

  std::size_t size() const { return points_.size(); }
  const Vec3& point(std::size_t i) const { return points_[i]; }
  const std::vector<Vec3>& points() const { return points_; }

  /// With `exclude_self`, one indexed point coinciding with `q` (the first in
  /// result order) is dropped from the result.
  std::vector<Neighbor> knn(const Vec3& q, std::size_t k, bool exclude_self = false) const;

  /// Neighbors of the indexed point `member`, excluding that point itself only.
  /// Other points at the same coordinates are returned at distance 0.
  std::vector<Neighbor> knn_of_member(std::size_t member, std::size_t k) const;

 private:
  struct Node {
    double lo[3];
    double hi[3];
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end);
  std::vector<Neighbor> search(const Vec3& q, std::size_t k, std::optional<std::size_t> skip) const;

  std::vector<Vec3> points_;
  std::vector<std::uint32_t> order_;
  std::vector<Node> nodes_;
  std::size_t leaf_size_;
};

/// Orders two neighbor candidates as the index does.
bool neighbor_less(const Neighbor& a, const Neighbor& b, std::span<const Vec3> points);

std::vector<Vec3> to_vecs(std::span<const Voxel> voxels);

/// ASCII PLY with a single `vertex` element. Vertices are written in
/// lexicographic order; when the cloud carries scores a `score` property is
/// appended. Reading accepts ASCII and binary_little_endian; binary_big_endian
/// is rejected.
std::string write_ply(const EventPointCloud& pc);
EventPointCloud read_ply(std::span<const std::uint8_t> bytes, Polarity polarity = Polarity::kNeg);

EventPointCloud load_ply(const std::filesystem::path& path, Polarity polarity);
void save_ply(const std::filesystem::path& path, const EventPointCloud& pc);

}  // namespace evpcc

#endif  // EVPCC_PC_MODEL_HPP
