// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

#include "evpcc/quality.hpp"

#include <algorithm>
#include <cmath>

#include "evpcc/error.hpp"

namespace evpcc {

MetricPoints to_metric_space(const EventSequence& seq, double tsf) {
  MetricPoints out;
  for (const Event& e : seq.events) {
    const Vec3 p{static_cast<double>(e.x), static_cast<double>(e.y), seq.seconds(e) * tsf};
    (e.p == Polarity::kPos ? out.pos : out.neg).push_back(p);
  }
  return out;
}

double default_peak(const MetricPoints& ref) {
  Vec3 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(),
          std::numeric_limits<double>::infinity()};
  Vec3 hi{-lo[0], -lo[1], -lo[2]};
  for (const auto* set : {&ref.pos, &ref.neg}) {
    for (const Vec3& p : *set) {
      for (int a = 0; a < 3; ++a) {
        lo[a] = std::min(lo[a], p[a]);
        hi[a] = std::max(hi[a], p[a]);
      }
    }
  }
  double peak = 0.0;
  if (ref.size() > 0) {
    for (int a = 0; a < 3; ++a) peak = std::max(peak, hi[a] - lo[a]);
  }
  if (!(peak > 0.0)) {
    throw Error(ErrorCode::kUndefinedMetric, "reference has zero extent; pass an explicit peak");
  }
  return peak;
}

double psnr_from_mse(double peak, double mse) {
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(peak * peak / mse);
}

namespace {

void check_polarity_presence(const MetricPoints& a, const MetricPoints& b) {
  if (a.size() == 0 && b.size() == 0) throw Error(ErrorCode::kUndefinedMetric, "both sequences are empty");
  if (a.pos.empty() != b.pos.empty()) {
    throw Error(ErrorCode::kUndefinedMetric, "POS events present on only one side");
  }
  if (a.neg.empty() != b.neg.empty()) {
    throw Error(ErrorCode::kUndefinedMetric, "NEG events present on only one side");
  }
}

void check_peak(double peak) {
  if (!(peak > 0.0) || !std::isfinite(peak)) throw Error(ErrorCode::kInvalidArgument, "peak must be > 0");
}

double directional_mse_e2e(const MetricPoints& from, const MetricPoints& to) {
  double sum = 0.0;
  for (const auto& [src, dst] : {std::pair{&from.pos, &to.pos}, std::pair{&from.neg, &to.neg}}) {
    if (src->empty()) continue;
    const NeighborIndex index(*dst);
    for (const Vec3& p : *src) sum += index.knn(p, 1).front().dist2;
  }
  return sum / static_cast<double>(from.size());
}

double directional_mse_e2d(const MetricPoints& from, const MetricPoints& to, std::size_t k) {
  double sum = 0.0;
  std::vector<Vec3> neighbors(k);
  for (const auto& [src, dst] : {std::pair{&from.pos, &to.pos}, std::pair{&from.neg, &to.neg}}) {
    if (src->empty()) continue;
    if (dst->size() < k) {
      throw Error(ErrorCode::kTooFewPoints, "point-to-distribution metric needs " + std::to_string(k) +
                                                " same-polarity points, got " + std::to_string(dst->size()));
    }
    const NeighborIndex index(*dst);
    for (const Vec3& p : *src) {
      const auto found = index.knn(p, k);
      for (std::size_t i = 0; i < k; ++i) neighbors[i] = index.point(found[i].index);
      sum += mahalanobis2_to_neighbors(p, neighbors);
    }
  }
  return sum / static_cast<double>(from.size());
}

PsnrResult finish(double mse_ab, double mse_ba, double peak) {
  PsnrResult r;
  r.mse_ref_to_dec = mse_ab;
  r.mse_dec_to_ref = mse_ba;
  r.peak = peak;
  r.psnr_db = psnr_from_mse(peak, std::max(mse_ab, mse_ba));
  return r;
}

}  // namespace

PsnrResult psnr_e2e(const MetricPoints& ref, const MetricPoints& dec, double peak) {
  check_peak(peak);
  check_polarity_presence(ref, dec);
  return finish(directional_mse_e2e(ref, dec), directional_mse_e2e(dec, ref), peak);
}

PsnrResult psnr_e2e(const EventSequence& ref, const EventSequence& dec, const MetricSpace& space) {
  const MetricPoints a = to_metric_space(ref, space.tsf);
  const MetricPoints b = to_metric_space(dec, space.tsf);
  return psnr_e2e(a, b, space.peak ? *space.peak : default_peak(a));
}

double mahalanobis2_to_neighbors(const Vec3& a, std::span<const Vec3> neighbors) {
  if (neighbors.empty()) throw Error(ErrorCode::kTooFewPoints, "no neighbors for the distribution");
  const double n = static_cast<double>(neighbors.size());
  Vec3 mu{0.0, 0.0, 0.0};
  for (const Vec3& p : neighbors) {
    for (int i = 0; i < 3; ++i) mu[i] += p[i];
  }
  for (double& m : mu) m /= n;
  double cov[3][3] = {};
  for (const Vec3& p : neighbors) {
    const double d[3] = {p[0] - mu[0], p[1] - mu[1], p[2] - mu[2]};
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) cov[i][j] += d[i] * d[j];
    }
  }
  for (auto& row : cov) {
    for (double& c : row) c /= n;
  }
  const double trace = cov[0][0] + cov[1][1] + cov[2][2];
  const double eps = trace > 0.0 ? 1e-6 * trace / 3.0 : 1e-9;
  for (int i = 0; i < 3; ++i) cov[i][i] += eps;

  // Cholesky factor L (lower) of the regularized covariance.
  double l[3][3] = {};
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = cov[i][j];
      for (int m = 0; m < j; ++m) s -= l[i][m] * l[j][m];
      if (i == j) {
        l[i][i] = std::sqrt(std::max(s, std::numeric_limits<double>::min()));
      } else {
        l[i][j] = s / l[j][j];
      }
    }
  }
  // d^2 = |L^-1 (a - mu)|^2 by forward substitution.
  const double diff[3] = {a[0] - mu[0], a[1] - mu[1], a[2] - mu[2]};
  double y[3];
  double d2 = 0.0;
  for (int i = 0; i < 3; ++i) {
    double s = diff[i];
    for (int m = 0; m < i; ++m) s -= l[i][m] * y[m];
    y[i] = s / l[i][i];
    d2 += y[i] * y[i];
  }
  return d2;
}

PsnrResult psnr_e2d(const MetricPoints& ref, const MetricPoints& dec, double peak, std::size_t k) {
  check_peak(peak);
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  check_polarity_presence(ref, dec);
  return finish(directional_mse_e2d(ref, dec, k), directional_mse_e2d(dec, ref, k), peak);
}

PsnrResult psnr_e2d(const EventSequence& ref, const EventSequence& dec, const MetricSpace& space,
                    std::size_t k) {
  const MetricPoints a = to_metric_space(ref, space.tsf);
  const MetricPoints b = to_metric_space(dec, space.tsf);
  return psnr_e2d(a, b, space.peak ? *space.peak : default_peak(a), k);
}

}  // namespace evpcc
