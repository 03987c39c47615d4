// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef EVPCC_CHARACTERIZE_HPP
#define EVPCC_CHARACTERIZE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "evpcc/event_io.hpp"
#include "evpcc/pc_model.hpp"

namespace evpcc {

struct EventCounts {
  std::size_t n_total = 0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
};

EventCounts count_events(const EventSequence& seq);

struct TemporalHistogram {
  std::vector<std::uint64_t> global;
  std::vector<std::uint64_t> pos;
  std::vector<std::uint64_t> neg;
};

/// bin = floor((t - t_min) * n_bins / (t_max - t_min + 1)).
TemporalHistogram temporal_histogram(const EventSequence& seq, std::size_t n_bins);

/// n_neg / n_pos, or nullopt when there are no POS events.
std::optional<double> neg_pos_ratio(const EventSequence& seq);

/// Median over points of the mean Euclidean distance to the k nearest
/// neighbors. Requires at least k + 1 points.
double sparsity(std::span<const Vec3> points, std::size_t k = 20);
double sparsity(const EventPointCloud& pc, std::size_t k = 20);

/// Entry n-1 is the percentage of points with at least n same-polarity points
/// among their k nearest neighbors (self excluded), for n = 1..k.
std::vector<double> coherence_profile(std::span<const Vec3> points, std::span<const Polarity> polarity,
                                      std::size_t k = 20);
double polarity_coherence(std::span<const Vec3> points, std::span<const Polarity> polarity,
                          std::size_t k, std::size_t n);

/// Number of events that share (x, y, t_raw) with an event of the other
/// polarity.
std::size_t count_cross_polarity_duplicate_events(const EventSequence& seq);

struct CharacterizeConfig {
  std::int64_t tsf = 256;
  std::size_t k = 20;
  std::size_t n_bins = 100;
};

struct SequenceStats {
  std::string source_id;
  std::string label;
  std::size_t n_total = 0;
  std::size_t n_pos = 0;
  std::size_t n_neg = 0;
  std::optional<double> neg_pos_ratio;
  TemporalHistogram temporal_histogram;
  // Sparsity of the voxelized clouds; absent when a cloud has <= k points.
  std::optional<double> sparsity_global;
  std::optional<double> sparsity_pos;
  std::optional<double> sparsity_neg;
  std::vector<double> coherence;  // empty when the merged cloud has <= k points
  std::size_t n_cross_duplicate_events = 0;
};

SequenceStats compute_sequence_stats(const EventSequence& seq, const CharacterizeConfig& cfg);

struct MetricSummary {
  double mean = 0.0;
  double stddev = 0.0;  // population
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

MetricSummary summarize(std::span<const double> values);

struct DatasetSummary {
  std::size_t n_sequences = 0;
  std::map<std::string, MetricSummary> metrics;
  std::uint64_t total_events = 0;
  std::uint64_t total_pos = 0;
  std::uint64_t total_neg = 0;
  std::uint64_t total_cross_duplicate_events = 0;

  double neg_share_percent() const;
  double pos_share_percent() const;
  double cross_duplicate_percent() const;
};

/// Metrics are keyed n_total, n_pos, n_neg, neg_pos_ratio, sparsity_global,
/// sparsity_pos, sparsity_neg, coherence_n<N> and cross_duplicate_percent.
/// Sequences where a metric is undefined do not contribute to it.
DatasetSummary dataset_summary(std::span<const SequenceStats> stats);

std::string sequence_stats_csv_header(std::size_t k);
std::string sequence_stats_csv_row(const SequenceStats& s, std::size_t k);
std::string dataset_summary_json(const DatasetSummary& summary);

}  // namespace evpcc

#endif  // EVPCC_CHARACTERIZE_HPP
