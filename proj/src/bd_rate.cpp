// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <sstream>

#include "evpcc/error.hpp"
#include "evpcc/quality.hpp"

namespace evpcc {

RateDistortionCurve read_curve_csv(const std::string& text, std::string label) {
  RateDistortionCurve curve;
  curve.label = std::move(label);
  std::istringstream in(text);
  std::string line;
  bool header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (!header) {
      if (line != "rate,score") throw Error(ErrorCode::kParse, "curve CSV must start with 'rate,score'");
      header = true;
      continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) {
      throw Error(ErrorCode::kParse, "curve line " + std::to_string(line_no) + ": expected rate,score");
    }
    try {
      std::size_t used_rate = 0;
      std::size_t used_score = 0;
      const std::string rate_text = line.substr(0, comma);
      const std::string score_text = line.substr(comma + 1);
      const double rate = std::stod(rate_text, &used_rate);
      const double score = std::stod(score_text, &used_score);
      if (used_rate != rate_text.size() || used_score != score_text.size()) throw std::invalid_argument("trailing");
      curve.points.push_back({rate, score});
    } catch (const std::exception&) {
      throw Error(ErrorCode::kParse, "curve line " + std::to_string(line_no) + ": bad number in '" + line + "'");
    }
  }
  if (!header) throw Error(ErrorCode::kParse, "curve CSV is missing its header");
  return curve;
}

std::string write_curve_csv(const RateDistortionCurve& curve) {
  std::ostringstream out;
  out.precision(17);
  out << "rate,score\n";
  for (const CurvePoint& p : curve.points) out << p.rate << ',' << p.score << '\n';
  return out.str();
}

double LogRateCubic::operator()(double score) const {
  const double s = score - center;
  return coeffs[0] + s * (coeffs[1] + s * (coeffs[2] + s * coeffs[3]));
}

double LogRateCubic::integral(double lo, double hi) const {
  auto antiderivative = [this](double score) {
    const double s = score - center;
    return s * (coeffs[0] + s * (coeffs[1] / 2.0 + s * (coeffs[2] / 3.0 + s * coeffs[3] / 4.0)));
  };
  return antiderivative(hi) - antiderivative(lo);
}

namespace {

void validate_curve(const RateDistortionCurve& curve) {
  if (curve.points.size() < 4) {
    throw Error(ErrorCode::kInsufficientPoints,
                "BD-Rate needs at least 4 points per curve" + (curve.label.empty() ? "" : " (" + curve.label + ")"));
  }
  for (std::size_t i = 0; i < curve.points.size(); ++i) {
    const CurvePoint& p = curve.points[i];
    if (!(p.rate > 0.0) || !std::isfinite(p.rate) || !std::isfinite(p.score)) {
      throw Error(ErrorCode::kInvalidArgument, "curve rates must be positive and scores finite");
    }
    if (i > 0 && !(p.rate > curve.points[i - 1].rate)) {
      throw Error(ErrorCode::kInvalidArgument, "curve rates must be strictly increasing");
    }
  }
}

}  // namespace

LogRateCubic fit_log_rate_cubic(const RateDistortionCurve& curve) {
  validate_curve(curve);
  const auto n = static_cast<Eigen::Index>(curve.points.size());
  LogRateCubic fit;
  for (const CurvePoint& p : curve.points) fit.center += p.score;
  fit.center /= static_cast<double>(n);

  Eigen::MatrixXd a(n, 4);
  Eigen::VectorXd b(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double s = curve.points[static_cast<std::size_t>(i)].score - fit.center;
    a(i, 0) = 1.0;
    a(i, 1) = s;
    a(i, 2) = s * s;
    a(i, 3) = s * s * s;
    b(i) = std::log10(curve.points[static_cast<std::size_t>(i)].rate);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < 4) {
    throw Error(ErrorCode::kInsufficientPoints, "curve needs at least 4 distinct scores for a cubic fit");
  }
  const Eigen::VectorXd c = qr.solve(b);
  for (int i = 0; i < 4; ++i) fit.coeffs[i] = c(i);
  return fit;
}

double bd_rate(const RateDistortionCurve& ref, const RateDistortionCurve& test) {
  const LogRateCubic fit_ref = fit_log_rate_cubic(ref);
  const LogRateCubic fit_test = fit_log_rate_cubic(test);
  auto score_range = [](const RateDistortionCurve& c) {
    const auto [lo, hi] = std::minmax_element(c.points.begin(), c.points.end(),
                                              [](const CurvePoint& a, const CurvePoint& b) { return a.score < b.score; });
    return std::pair{lo->score, hi->score};
  };
  const auto [ref_lo, ref_hi] = score_range(ref);
  const auto [test_lo, test_hi] = score_range(test);
  const double lo = std::max(ref_lo, test_lo);
  const double hi = std::min(ref_hi, test_hi);
  if (!(hi > lo)) throw Error(ErrorCode::kNoOverlap, "the two curves share no score interval");
  const double avg = (fit_test.integral(lo, hi) - fit_ref.integral(lo, hi)) / (hi - lo);
  return (std::pow(10.0, avg) - 1.0) * 100.0;
}

}  // namespace evpcc
