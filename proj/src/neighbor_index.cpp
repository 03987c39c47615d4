// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <limits>
#include <numeric>

#include "evpcc/error.hpp"
#include "evpcc/pc_model.hpp"

namespace evpcc {

bool neighbor_less(const Neighbor& a, const Neighbor& b, std::span<const Vec3> points) {
  if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
  const Vec3& pa = points[a.index];
  const Vec3& pb = points[b.index];
  if (pa != pb) return pa < pb;
  return a.index < b.index;
}

NeighborIndex::NeighborIndex(std::vector<Vec3> points, std::size_t leaf_size)
    : points_(std::move(points)), leaf_size_(std::max<std::size_t>(1, leaf_size)) {
  if (points_.size() >= std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::kInvalidArgument, "too many points for the neighbor index");
  }
  order_.resize(points_.size());
  std::iota(order_.begin(), order_.end(), 0u);
  if (!points_.empty()) {
    nodes_.reserve(2 * points_.size() / leaf_size_ + 1);
    build(0, static_cast<std::uint32_t>(points_.size()));
  }
}

std::int32_t NeighborIndex::build(std::uint32_t begin, std::uint32_t end) {
  Node node;
  for (int a = 0; a < 3; ++a) {
    node.lo[a] = std::numeric_limits<double>::infinity();
    node.hi[a] = -std::numeric_limits<double>::infinity();
  }
  for (std::uint32_t i = begin; i < end; ++i) {
    const Vec3& p = points_[order_[i]];
    for (int a = 0; a < 3; ++a) {
      node.lo[a] = std::min(node.lo[a], p[a]);
      node.hi[a] = std::max(node.hi[a], p[a]);
    }
  }
  node.begin = begin;
  node.end = end;
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(node);

  int axis = 0;
  for (int a = 1; a < 3; ++a) {
    if (node.hi[a] - node.lo[a] > node.hi[axis] - node.lo[axis]) axis = a;
  }
  if (end - begin <= leaf_size_ || node.hi[axis] == node.lo[axis]) return id;

  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) { return points_[a][axis] < points_[b][axis]; });
  const std::int32_t left = build(begin, mid);
  const std::int32_t right = build(mid, end);
  nodes_[id].left = left;
  nodes_[id].right = right;
  return id;
}

namespace {

double box_dist2(const Vec3& q, const double* lo, const double* hi) {
  double d2 = 0.0;
  for (int a = 0; a < 3; ++a) {
    double d = 0.0;
    if (q[a] < lo[a]) d = lo[a] - q[a];
    else if (q[a] > hi[a]) d = q[a] - hi[a];
    d2 += d * d;
  }
  return d2;
}

double dist2(const Vec3& a, const Vec3& b) {
  const double dx = a[0] - b[0];
  const double dy = a[1] - b[1];
  const double dz = a[2] - b[2];
  return dx * dx + dy * dy + dz * dz;
}

}  // namespace

std::vector<Neighbor> NeighborIndex::search(const Vec3& q, std::size_t k,
                                            std::optional<std::size_t> skip) const {
  if (points_.empty()) throw Error(ErrorCode::kEmptyInput, "knn query on an empty index");
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "knn requires k >= 1");

  const std::span<const Vec3> pts(points_);
  auto less = [pts](const Neighbor& a, const Neighbor& b) { return neighbor_less(a, b, pts); };
  std::vector<Neighbor> heap;  // max-heap: worst candidate on top
  heap.reserve(k + 1);

  auto visit = [&](auto&& self, std::int32_t id) -> void {
    const Node& node = nodes_[static_cast<std::size_t>(id)];
    if (heap.size() == k && box_dist2(q, node.lo, node.hi) > heap.front().dist2) return;
    if (node.left < 0) {
      for (std::uint32_t i = node.begin; i < node.end; ++i) {
        const std::uint32_t idx = order_[i];
        if (skip && *skip == idx) continue;
        const Neighbor cand{idx, dist2(q, points_[idx])};
        if (heap.size() < k) {
          heap.push_back(cand);
          std::push_heap(heap.begin(), heap.end(), less);
        } else if (less(cand, heap.front())) {
          std::pop_heap(heap.begin(), heap.end(), less);
          heap.back() = cand;
          std::push_heap(heap.begin(), heap.end(), less);
        }
      }
      return;
    }
    const Node& l = nodes_[static_cast<std::size_t>(node.left)];
    const Node& r = nodes_[static_cast<std::size_t>(node.right)];
    if (box_dist2(q, l.lo, l.hi) <= box_dist2(q, r.lo, r.hi)) {
      self(self, node.left);
      self(self, node.right);
    } else {
      self(self, node.right);
      self(self, node.left);
    }
  };
  visit(visit, 0);

  std::sort_heap(heap.begin(), heap.end(), less);
  return heap;
}

std::vector<Neighbor> NeighborIndex::knn(const Vec3& q, std::size_t k, bool exclude_self) const {
  if (!exclude_self) return search(q, k, std::nullopt);
  auto result = search(q, k + 1, std::nullopt);
  const auto self = std::find_if(result.begin(), result.end(),
                                 [](const Neighbor& n) { return n.dist2 == 0.0; });
  if (self != result.end()) {
    result.erase(self);
  } else if (result.size() > k) {
    result.pop_back();
  }
  return result;
}

std::vector<Neighbor> NeighborIndex::knn_of_member(std::size_t member, std::size_t k) const {
  if (member >= points_.size()) throw Error(ErrorCode::kInvalidArgument, "member index out of range");
  if (points_.size() == 1) return {};
  return search(points_[member], k, member);
}

}  // namespace evpcc
