// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

#include "evpcc/characterize.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "evpcc/convert.hpp"
#include "evpcc/error.hpp"

namespace evpcc {

EventCounts count_events(const EventSequence& seq) {
  EventCounts c;
  c.n_total = seq.events.size();
  for (const Event& e : seq.events) (e.p == Polarity::kPos ? c.n_pos : c.n_neg)++;
  return c;
}

TemporalHistogram temporal_histogram(const EventSequence& seq, std::size_t n_bins) {
  if (n_bins == 0) throw Error(ErrorCode::kInvalidArgument, "histogram needs at least one bin");
  TemporalHistogram h;
  h.global.assign(n_bins, 0);
  h.pos.assign(n_bins, 0);
  h.neg.assign(n_bins, 0);
  if (seq.events.empty()) return h;
  const auto [lo, hi] = std::minmax_element(seq.events.begin(), seq.events.end(),
                                            [](const Event& a, const Event& b) { return a.t_raw < b.t_raw; });
  const std::uint64_t t_min = lo->t_raw;
  const std::uint64_t span = std::uint64_t{hi->t_raw} - t_min + 1;
  for (const Event& e : seq.events) {
    const std::uint64_t bin = (std::uint64_t{e.t_raw} - t_min) * n_bins / span;
    ++h.global[bin];
    ++(e.p == Polarity::kPos ? h.pos : h.neg)[bin];
  }
  return h;
}

std::optional<double> neg_pos_ratio(const EventSequence& seq) {
  const EventCounts c = count_events(seq);
  if (c.n_pos == 0) return std::nullopt;
  return static_cast<double>(c.n_neg) / static_cast<double>(c.n_pos);
}

namespace {

double median_in_place(std::vector<double>& values) {
  const std::size_t n = values.size();
  const std::size_t mid = n / 2;
  std::nth_element(values.begin(), values.begin() + mid, values.end());
  const double upper = values[mid];
  if (n % 2 == 1) return upper;
  const double lower = *std::max_element(values.begin(), values.begin() + mid);
  return 0.5 * (lower + upper);
}

void require_points(std::size_t n, std::size_t k) {
  if (k == 0) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (n < k + 1) {
    throw Error(ErrorCode::kTooFewPoints, "need at least " + std::to_string(k + 1) + " points, got " +
                                              std::to_string(n));
  }
}

}  // namespace

double sparsity(std::span<const Vec3> points, std::size_t k) {
  require_points(points.size(), k);
  const NeighborIndex index(std::vector<Vec3>(points.begin(), points.end()));
  std::vector<double> mean_dist(points.size());
  for (std::size_t i = 0; i < points.size(); ++i) {
    double sum = 0.0;
    for (const Neighbor& n : index.knn_of_member(i, k)) sum += std::sqrt(n.dist2);
    mean_dist[i] = sum / static_cast<double>(k);
  }
  return median_in_place(mean_dist);
}

double sparsity(const EventPointCloud& pc, std::size_t k) { return sparsity(to_vecs(pc.points()), k); }

std::vector<double> coherence_profile(std::span<const Vec3> points, std::span<const Polarity> polarity,
                                      std::size_t k) {
  if (points.size() != polarity.size()) {
    throw Error(ErrorCode::kInvalidArgument, "points and polarity tags differ in length");
  }
  require_points(points.size(), k);
  const NeighborIndex index(std::vector<Vec3>(points.begin(), points.end()));
  // at_least[n] = number of points with >= n same-polarity neighbors.
  std::vector<std::size_t> exactly(k + 1, 0);
  for (std::size_t i = 0; i < points.size(); ++i) {
    std::size_t same = 0;
    for (const Neighbor& n : index.knn_of_member(i, k)) same += polarity[n.index] == polarity[i];
    ++exactly[same];
  }
  std::vector<double> profile(k);
  std::size_t at_least = 0;
  for (std::size_t n = k; n >= 1; --n) {
    at_least += exactly[n];
    profile[n - 1] = 100.0 * static_cast<double>(at_least) / static_cast<double>(points.size());
  }
  return profile;
}

double polarity_coherence(std::span<const Vec3> points, std::span<const Polarity> polarity, std::size_t k,
                          std::size_t n) {
  if (n < 1 || n > k) throw Error(ErrorCode::kInvalidArgument, "coherence threshold n must be in [1, k]");
  return coherence_profile(points, polarity, k)[n - 1];
}

std::size_t count_cross_polarity_duplicate_events(const EventSequence& seq) {
  struct Key {
    std::uint32_t x, y, t;
    Polarity p;
  };
  std::vector<Key> keys;
  keys.reserve(seq.events.size());
  for (const Event& e : seq.events) keys.push_back({e.x, e.y, e.t_raw, e.p});
  auto coord_less = [](const Key& a, const Key& b) {
    if (a.t != b.t) return a.t < b.t;
    if (a.x != b.x) return a.x < b.x;
    return a.y < b.y;
  };
  std::sort(keys.begin(), keys.end(), coord_less);
  std::size_t count = 0;
  for (std::size_t i = 0; i < keys.size();) {
    std::size_t j = i;
    bool has_pos = false;
    bool has_neg = false;
    for (; j < keys.size() && !coord_less(keys[i], keys[j]); ++j) {
      (keys[j].p == Polarity::kPos ? has_pos : has_neg) = true;
    }
    if (has_pos && has_neg) count += j - i;
    i = j;
  }
  return count;
}

SequenceStats compute_sequence_stats(const EventSequence& seq, const CharacterizeConfig& cfg) {
  SequenceStats s;
  s.source_id = seq.source_id.value_or("");
  s.label = seq.label.value_or("");
  const EventCounts c = count_events(seq);
  s.n_total = c.n_total;
  s.n_pos = c.n_pos;
  s.n_neg = c.n_neg;
  s.neg_pos_ratio = neg_pos_ratio(seq);
  s.temporal_histogram = temporal_histogram(seq, cfg.n_bins);
  s.n_cross_duplicate_events = count_cross_polarity_duplicate_events(seq);

  const PolaritySplit split = event_to_pc(seq, ConversionConfig{cfg.tsf, DuplicateMethod::kNearestNeighbor});
  if (split.pos.size() > cfg.k) s.sparsity_pos = sparsity(split.pos, cfg.k);
  if (split.neg.size() > cfg.k) s.sparsity_neg = sparsity(split.neg, cfg.k);

  std::vector<Voxel> union_points;
  std::set_union(split.pos.points().begin(), split.pos.points().end(), split.neg.points().begin(),
                 split.neg.points().end(), std::back_inserter(union_points));
  if (union_points.size() > cfg.k) s.sparsity_global = sparsity(to_vecs(union_points), cfg.k);

  // Coherence keeps cross-polarity duplicates as two coincident points.
  std::vector<Vec3> merged = to_vecs(split.pos.points());
  std::vector<Polarity> tags(split.pos.size(), Polarity::kPos);
  for (const Voxel& v : split.neg.points()) {
    merged.push_back(to_vec(v));
    tags.push_back(Polarity::kNeg);
  }
  if (merged.size() > cfg.k) s.coherence = coherence_profile(merged, tags, cfg.k);
  return s;
}

MetricSummary summarize(std::span<const double> values) {
  if (values.empty()) throw Error(ErrorCode::kEmptyInput, "cannot summarize an empty collection");
  MetricSummary m;
  m.count = values.size();
  m.min = std::numeric_limits<double>::infinity();
  m.max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  for (double v : values) {
    sum += v;
    m.min = std::min(m.min, v);
    m.max = std::max(m.max, v);
  }
  m.mean = sum / static_cast<double>(values.size());
  double sq = 0.0;
  for (double v : values) sq += (v - m.mean) * (v - m.mean);
  m.stddev = std::sqrt(sq / static_cast<double>(values.size()));
  // Keep min <= mean <= max under floating-point summation error.
  m.mean = std::clamp(m.mean, m.min, m.max);
  return m;
}

double DatasetSummary::neg_share_percent() const {
  return total_events == 0 ? 0.0 : 100.0 * static_cast<double>(total_neg) / static_cast<double>(total_events);
}

double DatasetSummary::pos_share_percent() const {
  return total_events == 0 ? 0.0 : 100.0 * static_cast<double>(total_pos) / static_cast<double>(total_events);
}

double DatasetSummary::cross_duplicate_percent() const {
  return total_events == 0 ? 0.0
                           : 100.0 * static_cast<double>(total_cross_duplicate_events) /
                                 static_cast<double>(total_events);
}

namespace {

std::string coherence_key(std::size_t n) { return "coherence_n" + std::to_string(n); }

}  // namespace

DatasetSummary dataset_summary(std::span<const SequenceStats> stats) {
  if (stats.empty()) throw Error(ErrorCode::kEmptyInput, "dataset summary needs at least one sequence");
  std::map<std::string, std::vector<double>> columns;
  DatasetSummary out;
  out.n_sequences = stats.size();
  for (const SequenceStats& s : stats) {
    columns["n_total"].push_back(static_cast<double>(s.n_total));
    columns["n_pos"].push_back(static_cast<double>(s.n_pos));
    columns["n_neg"].push_back(static_cast<double>(s.n_neg));
    if (s.neg_pos_ratio) columns["neg_pos_ratio"].push_back(*s.neg_pos_ratio);
    if (s.sparsity_global) columns["sparsity_global"].push_back(*s.sparsity_global);
    if (s.sparsity_pos) columns["sparsity_pos"].push_back(*s.sparsity_pos);
    if (s.sparsity_neg) columns["sparsity_neg"].push_back(*s.sparsity_neg);
    for (std::size_t n = 1; n <= s.coherence.size(); ++n) {
      columns[coherence_key(n)].push_back(s.coherence[n - 1]);
    }
    if (s.n_total > 0) {
      columns["cross_duplicate_percent"].push_back(100.0 * static_cast<double>(s.n_cross_duplicate_events) /
                                                   static_cast<double>(s.n_total));
    }
    out.total_events += s.n_total;
    out.total_pos += s.n_pos;
    out.total_neg += s.n_neg;
    out.total_cross_duplicate_events += s.n_cross_duplicate_events;
  }
  for (const auto& [name, values] : columns) out.metrics[name] = summarize(values);
  return out;
}

namespace {

std::string format_optional(const std::optional<double>& v) {
  if (!v) return "";
  std::ostringstream out;
  out.precision(10);
  out << *v;
  return out.str();
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

}  // namespace

std::string sequence_stats_csv_header(std::size_t k) {
  std::string h =
      "source_id,label,n_total,n_pos,n_neg,neg_pos_ratio,sparsity_global,sparsity_pos,sparsity_neg,"
      "cross_duplicate_events";
  for (std::size_t n = 1; n <= k; ++n) h += "," + coherence_key(n);
  return h;
}

std::string sequence_stats_csv_row(const SequenceStats& s, std::size_t k) {
  std::ostringstream row;
  row << csv_quote(s.source_id) << ',' << csv_quote(s.label) << ',' << s.n_total << ',' << s.n_pos << ','
      << s.n_neg << ',' << format_optional(s.neg_pos_ratio) << ',' << format_optional(s.sparsity_global) << ','
      << format_optional(s.sparsity_pos) << ',' << format_optional(s.sparsity_neg) << ','
      << s.n_cross_duplicate_events;
  for (std::size_t n = 1; n <= k; ++n) {
    row << ',';
    if (n <= s.coherence.size()) row << format_optional(s.coherence[n - 1]);
  }
  return row.str();
}

std::string dataset_summary_json(const DatasetSummary& summary) {
  nlohmann::ordered_json j;
  j["n_sequences"] = summary.n_sequences;
  j["total_events"] = summary.total_events;
  j["total_pos"] = summary.total_pos;
  j["total_neg"] = summary.total_neg;
  j["neg_share_percent"] = summary.neg_share_percent();
  j["pos_share_percent"] = summary.pos_share_percent();
  j["total_cross_duplicate_events"] = summary.total_cross_duplicate_events;
  j["cross_duplicate_percent"] = summary.cross_duplicate_percent();
  auto& metrics = j["metrics"];
  metrics = nlohmann::ordered_json::object();
  for (const auto& [name, m] : summary.metrics) {
    metrics[name] = {{"mean", m.mean}, {"stddev", m.stddev}, {"min", m.min}, {"max", m.max}, {"count", m.count}};
  }
  return j.dump(2) + "\n";
}

}  // namespace evpcc
