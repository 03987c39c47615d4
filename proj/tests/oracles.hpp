// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

// Brute-force reference implementations used only by tests. None of these
// call into the library code paths they are compared against.

#ifndef EVPCC_TESTS_ORACLES_HPP
#define EVPCC_TESTS_ORACLES_HPP

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <vector>

#include "evpcc/convert.hpp"
#include "evpcc/event_io.hpp"
#include "evpcc/pc_model.hpp"
#include "evpcc/quality.hpp"

namespace evpcc::oracle {

inline double sq_dist(const Vec3& a, const Vec3& b) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s;
}

struct BruteNeighbor {
  std::size_t index;
  double dist2;
};

/// O(n log n) per query: sort every point by (distance, coordinates, index).
inline std::vector<BruteNeighbor> knn(const std::vector<Vec3>& pts, const Vec3& q, std::size_t k,
                                      std::optional<std::size_t> skip = std::nullopt) {
  std::vector<BruteNeighbor> all;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    if (skip && *skip == i) continue;
    all.push_back({i, sq_dist(pts[i], q)});
  }
  std::sort(all.begin(), all.end(), [&](const BruteNeighbor& a, const BruteNeighbor& b) {
    if (a.dist2 != b.dist2) return a.dist2 < b.dist2;
    if (pts[a.index] != pts[b.index]) return pts[a.index] < pts[b.index];
    return a.index < b.index;
  });
  if (all.size() > k) all.resize(k);
  return all;
}

/// Majority vote over whole equal-distance groups of non-duplicates.
inline Polarity nn_polarity(const std::vector<TaggedVoxel>& merged, const std::set<Voxel>& dups, const Voxel& v) {
  std::map<std::int64_t, std::pair<int, int>> groups;  // dist2 -> (pos, neg)
  for (const TaggedVoxel& t : merged) {
    if (dups.count(t.v)) continue;
    const std::int64_t dx = t.v.x - v.x, dy = t.v.y - v.y, dz = t.v.z - v.z;
    auto& g = groups[dx * dx + dy * dy + dz * dz];
    (t.p == Polarity::kPos ? g.first : g.second)++;
  }
  int pos = 0, neg = 0;
  for (const auto& [d, g] : groups) {
    pos += g.first;
    neg += g.second;
    if (pos != neg) return pos > neg ? Polarity::kPos : Polarity::kNeg;
  }
  return Polarity::kPos;
}

/// All-pairs point-to-point PSNR (pooled MSE, max of both directions).
inline double psnr_e2e(const MetricPoints& a, const MetricPoints& b, double peak) {
  auto directional = [](const MetricPoints& from, const MetricPoints& to) {
    double sum = 0.0;
    for (const auto& [src, dst] : {std::pair{&from.pos, &to.pos}, std::pair{&from.neg, &to.neg}}) {
      for (const Vec3& p : *src) {
        double best = std::numeric_limits<double>::infinity();
        for (const Vec3& q : *dst) best = std::min(best, sq_dist(p, q));
        sum += best;
      }
    }
    return sum / static_cast<double>(from.size());
  };
  const double mse = std::max(directional(a, b), directional(b, a));
  return mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(peak * peak / mse);
}

/// Mahalanobis d^2 with dense linear algebra (full-pivot LU solve).
inline double mahalanobis2(const Vec3& a, const std::vector<Vec3>& nbrs) {
  Eigen::MatrixXd x(static_cast<Eigen::Index>(nbrs.size()), 3);
  for (std::size_t i = 0; i < nbrs.size(); ++i) {
    for (int c = 0; c < 3; ++c) x(static_cast<Eigen::Index>(i), c) = nbrs[i][c];
  }
  const Eigen::RowVector3d mu = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mu;
  Eigen::Matrix3d cov = (centered.transpose() * centered) / static_cast<double>(nbrs.size());
  const double tr = cov.trace();
  cov += Eigen::Matrix3d::Identity() * (tr > 0 ? 1e-6 * tr / 3.0 : 1e-9);
  const Eigen::Vector3d d(a[0] - mu(0), a[1] - mu(1), a[2] - mu(2));
  const Eigen::Vector3d sol = cov.fullPivLu().solve(d);
  return d.dot(sol);
}

inline double psnr_e2d(const MetricPoints& a, const MetricPoints& b, double peak, std::size_t k) {
  auto directional = [k](const MetricPoints& from, const MetricPoints& to) {
    double sum = 0.0;
    for (const auto& [src, dst] : {std::pair{&from.pos, &to.pos}, std::pair{&from.neg, &to.neg}}) {
      for (const Vec3& p : *src) {
        std::vector<Vec3> nbrs;
        for (const auto& n : knn(*dst, p, k)) nbrs.push_back((*dst)[n.index]);
        sum += mahalanobis2(p, nbrs);
      }
    }
    return sum / static_cast<double>(from.size());
  };
  const double mse = std::max(directional(a, b), directional(b, a));
  return mse == 0.0 ? std::numeric_limits<double>::infinity() : 10.0 * std::log10(peak * peak / mse);
}

/// BD-Rate via Lagrange interpolation through exactly 4 points and composite
/// Simpson integration.
inline double bd_rate_4pt(const RateDistortionCurve& ref, const RateDistortionCurve& test) {
  auto lagrange = [](const RateDistortionCurve& c) {
    return [c](double s) {
      double total = 0.0;
      for (std::size_t i = 0; i < 4; ++i) {
        double term = std::log10(c.points[i].rate);
        for (std::size_t j = 0; j < 4; ++j) {
          if (j != i) term *= (s - c.points[j].score) / (c.points[i].score - c.points[j].score);
        }
        total += term;
      }
      return total;
    };
  };
  auto range = [](const RateDistortionCurve& c) {
    double lo = c.points[0].score, hi = lo;
    for (const auto& p : c.points) lo = std::min(lo, p.score), hi = std::max(hi, p.score);
    return std::pair{lo, hi};
  };
  const auto [rl, rh] = range(ref);
  const auto [tl, th] = range(test);
  const double lo = std::max(rl, tl), hi = std::min(rh, th);
  const auto fr = lagrange(ref);
  const auto ft = lagrange(test);
  const int n = 2000;
  const double h = (hi - lo) / n;
  double acc = 0.0;
  for (int i = 0; i <= n; ++i) {
    const double s = lo + i * h;
    const double w = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
    acc += w * (ft(s) - fr(s));
  }
  const double avg = acc * h / 3.0 / (hi - lo);
  return (std::pow(10.0, avg) - 1.0) * 100.0;
}

// Random fixture helpers.

inline std::vector<Vec3> random_cloud(std::mt19937_64& rng, std::size_t n, int extent) {
  std::uniform_int_distribution<int> d(0, extent - 1);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = {double(d(rng)), double(d(rng)), double(d(rng))};
  return pts;
}

inline std::vector<Vec3> random_real_cloud(std::mt19937_64& rng, std::size_t n, double extent) {
  std::uniform_real_distribution<double> d(0.0, extent);
  std::vector<Vec3> pts(n);
  for (auto& p : pts) p = {d(rng), d(rng), d(rng)};
  return pts;
}

inline EventSequence random_sequence(std::mt19937_64& rng, std::size_t n, std::uint32_t t_span = 300000,
                                     std::uint32_t w = 240, std::uint32_t h = 180) {
  std::uniform_int_distribution<std::uint32_t> dx(0, w - 1), dy(0, h - 1), dt(0, t_span), dp(0, 1);
  EventSequence seq;
  for (std::size_t i = 0; i < n; ++i) {
    seq.events.push_back({dx(rng), dy(rng), dt(rng), dp(rng) ? Polarity::kPos : Polarity::kNeg});
  }
  sort_by_time(seq.events);
  return seq;
}

}  // namespace evpcc::oracle

#endif  // EVPCC_TESTS_ORACLES_HPP
