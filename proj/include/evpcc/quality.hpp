// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef EVPCC_QUALITY_HPP
#define EVPCC_QUALITY_HPP

#include <array>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evpcc/event_io.hpp"
#include "evpcc/pc_model.hpp"

namespace evpcc {

inline constexpr double kMetricTsf = 256.0;
inline constexpr std::size_t kE2dNeighbors = 31;

struct MetricSpace {
  double tsf = kMetricTsf;
  std::optional<double> peak;  // default: largest per-axis extent of the reference
};

/// Real-valued (x, y, t_seconds * tsf) points, split by polarity. No rounding.
struct MetricPoints {
  std::vector<Vec3> pos;
  std::vector<Vec3> neg;

  std::size_t size() const { return pos.size() + neg.size(); }
};

MetricPoints to_metric_space(const EventSequence& seq, double tsf = kMetricTsf);

/// max over axes of (max - min) across both polarities.
double default_peak(const MetricPoints& ref);

struct PsnrResult {
  double psnr_db = std::numeric_limits<double>::infinity();
  double mse_ref_to_dec = 0.0;
  double mse_dec_to_ref = 0.0;
  double peak = 0.0;
};

/// Symmetric point-to-point PSNR with same-polarity nearest neighbors. MSE is
/// pooled over all points of the source side; the larger direction is used.
PsnrResult psnr_e2e(const MetricPoints& ref, const MetricPoints& dec, double peak);
PsnrResult psnr_e2e(const EventSequence& ref, const EventSequence& dec, const MetricSpace& space = {});

/// Squared Mahalanobis distance of `a` to the Gaussian fitted (population
/// covariance, regularized by eps * I) to `neighbors`.
double mahalanobis2_to_neighbors(const Vec3& a, std::span<const Vec3> neighbors);

/// Symmetric point-to-distribution PSNR against the k nearest same-polarity
/// points of the other side.
PsnrResult psnr_e2d(const MetricPoints& ref, const MetricPoints& dec, double peak,
                    std::size_t k = kE2dNeighbors);
PsnrResult psnr_e2d(const EventSequence& ref, const EventSequence& dec, const MetricSpace& space = {},
                    std::size_t k = kE2dNeighbors);

double psnr_from_mse(double peak, double mse);

// Rate / score curves and Bjontegaard delta rate.

struct CurvePoint {
  double rate = 0.0;
  double score = 0.0;
};

struct RateDistortionCurve {
  std::string label;
  std::vector<CurvePoint> points;
};

RateDistortionCurve read_curve_csv(const std::string& text, std::string label = {});
std::string write_curve_csv(const RateDistortionCurve& curve);

/// Least-squares cubic of log10(rate) in score, expanded around `center`:
/// log10(rate) ~ sum_i coeffs[i] * (score - center)^i.
struct LogRateCubic {
  double center = 0.0;
  std::array<double, 4> coeffs{};

  double operator()(double score) const;
  /// Exact integral over [lo, hi].
  double integral(double lo, double hi) const;
};

LogRateCubic fit_log_rate_cubic(const RateDistortionCurve& curve);

/// Average rate difference in percent at equal score over the overlapping
/// score interval. Negative means the test curve needs less rate.
double bd_rate(const RateDistortionCurve& ref, const RateDistortionCurve& test);

// Top-k accuracy from external predictions.

/// Labels in rank order (best first) for one sequence.
struct Prediction {
  std::string source_id;
  std::vector<std::string> ranked;
};

/// Rows are `source_id,rank1,rank2,...` or `source_id,label:score;label:score;...`.
/// Scored rows are ranked by descending score, ties by ascending label.
std::vector<Prediction> parse_predictions(const std::string& text);

/// Rows `source_id,label`; an optional header starting with `source_id` is skipped.
std::map<std::string, std::string> parse_ground_truth(const std::string& text);

double top_k(std::span<const Prediction> predictions, const std::map<std::string, std::string>& truth,
             std::size_t k);

}  // namespace evpcc

#endif  // EVPCC_QUALITY_HPP
