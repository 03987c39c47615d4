// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

#include "evpcc/pc_model.hpp"

#include <algorithm>
#include <numeric>

#include "evpcc/error.hpp"

namespace evpcc {

EventPointCloud EventPointCloud::from_points(Polarity polarity, std::vector<Voxel> points,
                                             std::optional<std::vector<double>> scores) {
  EventPointCloud pc(polarity);
  if (scores && scores->size() != points.size()) {
    throw Error(ErrorCode::kInvalidArgument, "score count does not match point count");
  }
  std::vector<std::size_t> order(points.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return points[a] < points[b]; });
  pc.points_.reserve(points.size());
  std::vector<double> kept_scores;
  for (std::size_t i : order) {
    if (!pc.points_.empty() && pc.points_.back() == points[i]) continue;
    pc.points_.push_back(points[i]);
    if (scores) kept_scores.push_back((*scores)[i]);
  }
  if (scores) pc.scores_ = std::move(kept_scores);
  return pc;
}

std::optional<std::size_t> EventPointCloud::find(const Voxel& v) const {
  const auto it = std::lower_bound(points_.begin(), points_.end(), v);
  if (it == points_.end() || *it != v) return std::nullopt;
  return static_cast<std::size_t>(it - points_.begin());
}

bool EventPointCloud::contains(const Voxel& v) const { return find(v).has_value(); }

std::optional<double> EventPointCloud::score_of(const Voxel& v) const {
  if (!scores_) return std::nullopt;
  const auto idx = find(v);
  if (!idx) return std::nullopt;
  return (*scores_)[*idx];
}

std::vector<Vec3> to_vecs(std::span<const Voxel> voxels) {
  std::vector<Vec3> out;
  out.reserve(voxels.size());
  for (const Voxel& v : voxels) out.push_back(to_vec(v));
  return out;
}

}  // namespace evpcc
