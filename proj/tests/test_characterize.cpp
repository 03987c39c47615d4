// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "evpcc/characterize.hpp"
#include "evpcc/error.hpp"
#include "oracles.hpp"

using namespace evpcc;

namespace {

EventSequence seq_of(std::vector<Event> events) {
  EventSequence s;
  s.events = std::move(events);
  return s;
}

std::uint64_t total(const std::vector<std::uint64_t>& v) { return std::accumulate(v.begin(), v.end(), 0ull); }

double brute_sparsity(const std::vector<Vec3>& pts, std::size_t k) {
  std::vector<double> means;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    double s = 0.0;
    for (const auto& n : oracle::knn(pts, pts[i], k, i)) s += std::sqrt(n.dist2);
    means.push_back(s / static_cast<double>(k));
  }
  std::sort(means.begin(), means.end());
  const std::size_t m = means.size();
  return m % 2 ? means[m / 2] : 0.5 * (means[m / 2 - 1] + means[m / 2]);
}

}  // namespace

TEST(CountEvents, Basic) {
  const auto empty = count_events({});
  EXPECT_EQ(0u, empty.n_total);
  const auto s = seq_of({{0, 0, 0, Polarity::kPos},
                         {1, 0, 1, Polarity::kPos},
                         {2, 0, 2, Polarity::kPos},
                         {3, 0, 3, Polarity::kNeg},
                         {4, 0, 4, Polarity::kNeg}});
  const auto c = count_events(s);
  EXPECT_EQ(5u, c.n_total);
  EXPECT_EQ(3u, c.n_pos);
  EXPECT_EQ(2u, c.n_neg);
}

TEST(TemporalHistogram, TwoBins) {
  const auto h = temporal_histogram(seq_of({{0, 0, 0, Polarity::kPos}, {0, 0, 9, Polarity::kNeg}}), 2);
  EXPECT_EQ((std::vector<std::uint64_t>{1, 1}), h.global);
  EXPECT_EQ((std::vector<std::uint64_t>{1, 0}), h.pos);
  EXPECT_EQ((std::vector<std::uint64_t>{0, 1}), h.neg);
}

TEST(TemporalHistogram, SingleTimestampGoesToBinZero) {
  const auto h = temporal_histogram(seq_of({{0, 0, 7, Polarity::kPos}, {1, 0, 7, Polarity::kNeg}}), 5);
  EXPECT_EQ((std::vector<std::uint64_t>{2, 0, 0, 0, 0}), h.global);
}

TEST(TemporalHistogram, UniformFixture) {
  EventSequence s;
  for (std::uint32_t t = 0; t < 1000; ++t) s.events.push_back({0, 0, t, t % 2 ? Polarity::kPos : Polarity::kNeg});
  const auto h = temporal_histogram(s, 10);
  for (auto c : h.global) EXPECT_EQ(100u, c);
  EXPECT_EQ(500u, total(h.pos));
  EXPECT_EQ(500u, total(h.neg));
}

TEST(TemporalHistogram, ConservesCounts) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 20; ++i) {
    const auto s = oracle::random_sequence(rng, 500);
    const auto h = temporal_histogram(s, 37);
    const auto c = count_events(s);
    EXPECT_EQ(c.n_total, total(h.global));
    EXPECT_EQ(c.n_pos, total(h.pos));
    EXPECT_EQ(c.n_neg, total(h.neg));
  }
}

TEST(NegPosRatio, Values) {
  EXPECT_DOUBLE_EQ(1.0, *neg_pos_ratio(seq_of({{0, 0, 0, Polarity::kPos},
                                                {0, 0, 1, Polarity::kPos},
                                                {0, 0, 2, Polarity::kPos},
                                                {0, 0, 3, Polarity::kNeg},
                                                {0, 0, 4, Polarity::kNeg},
                                                {0, 0, 5, Polarity::kNeg}})));
  EXPECT_DOUBLE_EQ(2.0, *neg_pos_ratio(seq_of(
                            {{0, 0, 0, Polarity::kPos}, {0, 0, 1, Polarity::kNeg}, {0, 0, 2, Polarity::kNeg}})));
  EXPECT_FALSE(neg_pos_ratio(seq_of({{0, 0, 0, Polarity::kNeg}})));
}

TEST(Sparsity, HandFixtures) {
  const std::vector<Vec3> two{{0, 0, 0}, {3, 4, 0}};
  EXPECT_EQ(5.0, sparsity(two, 1));
  const std::vector<Vec3> three{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}};
  EXPECT_EQ(1.5, sparsity(three, 2));
}

TEST(Sparsity, TooFewPoints) {
  const std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}};
  try {
    sparsity(pts, 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(ErrorCode::kTooFewPoints, e.code());
  }
}

TEST(Sparsity, MatchesBruteForceAndIsInvariant) {
  std::mt19937_64 rng(11);
  auto pts = oracle::random_cloud(rng, 300, 30);
  const double s = sparsity(pts, 20);
  EXPECT_DOUBLE_EQ(brute_sparsity(pts, 20), s);

  auto shifted = pts;
  for (auto& p : shifted) p = {p[0] + 17, p[1] - 4, p[2] + 1000};
  EXPECT_DOUBLE_EQ(s, sparsity(shifted, 20));

  auto permuted = pts;
  for (auto& p : permuted) p = {p[2], p[0], p[1]};
  EXPECT_DOUBLE_EQ(s, sparsity(permuted, 20));

  std::shuffle(pts.begin(), pts.end(), rng);
  EXPECT_DOUBLE_EQ(s, sparsity(pts, 20));
}

TEST(Coherence, SinglePolarityIsFull) {
  std::mt19937_64 rng(1);
  const auto pts = oracle::random_cloud(rng, 100, 20);
  const std::vector<Polarity> pol(pts.size(), Polarity::kNeg);
  for (double v : coherence_profile(pts, pol, 5)) EXPECT_EQ(100.0, v);
}

TEST(Coherence, AlternatingLattice) {
  std::vector<Vec3> pts;
  std::vector<Polarity> pol;
  for (int i = 0; i < 10; ++i) {
    pts.push_back({double(i), 0, 0});
    pol.push_back(i % 2 ? Polarity::kPos : Polarity::kNeg);
  }
  EXPECT_EQ(0.0, polarity_coherence(pts, pol, 2, 2));
  // Only the two end points see a same-polarity point (two steps away).
  EXPECT_DOUBLE_EQ(20.0, polarity_coherence(pts, pol, 2, 1));
}

TEST(Coherence, MonotoneInThreshold) {
  std::mt19937_64 rng(21);
  std::bernoulli_distribution coin(0.5);
  for (int rep = 0; rep < 10; ++rep) {
    const auto pts = oracle::random_cloud(rng, 200, 15);
    std::vector<Polarity> pol;
    for (std::size_t i = 0; i < pts.size(); ++i) pol.push_back(coin(rng) ? Polarity::kPos : Polarity::kNeg);
    const auto prof = coherence_profile(pts, pol, 20);
    ASSERT_EQ(20u, prof.size());
    for (std::size_t n = 1; n < prof.size(); ++n) EXPECT_LE(prof[n], prof[n - 1]);
    for (std::size_t n = 1; n <= 20; n += 7) EXPECT_EQ(prof[n - 1], polarity_coherence(pts, pol, 20, n));
  }
}

TEST(Coherence, MatchesBruteForce) {
  std::mt19937_64 rng(8);
  std::bernoulli_distribution coin(0.5);
  const auto pts = oracle::random_cloud(rng, 150, 10);
  std::vector<Polarity> pol;
  for (std::size_t i = 0; i < pts.size(); ++i) pol.push_back(coin(rng) ? Polarity::kPos : Polarity::kNeg);
  const std::size_t k = 6;
  std::vector<std::size_t> hits(k + 1, 0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    std::size_t same = 0;
    for (const auto& n : oracle::knn(pts, pts[i], k, i)) same += pol[n.index] == pol[i];
    for (std::size_t n = 1; n <= same; ++n) ++hits[n];
  }
  const auto prof = coherence_profile(pts, pol, k);
  for (std::size_t n = 1; n <= k; ++n) {
    EXPECT_DOUBLE_EQ(100.0 * static_cast<double>(hits[n]) / static_cast<double>(pts.size()), prof[n - 1]);
  }
}

TEST(CrossDuplicates, CountsBothEvents) {
  const auto s = seq_of({{1, 1, 5, Polarity::kPos},
                         {1, 1, 5, Polarity::kNeg},
                         {1, 1, 5, Polarity::kNeg},
                         {2, 2, 5, Polarity::kPos}});
  EXPECT_EQ(3u, count_cross_polarity_duplicate_events(s));
}

TEST(DatasetSummary, PopulationStatistics) {
  const std::vector<double> one{7.0};
  const auto s1 = summarize(one);
  EXPECT_EQ(7.0, s1.mean);
  EXPECT_EQ(0.0, s1.stddev);
  const std::vector<double> two{10.0, 20.0};
  const auto s2 = summarize(two);
  EXPECT_EQ(15.0, s2.mean);
  EXPECT_EQ(5.0, s2.stddev);
  EXPECT_EQ(10.0, s2.min);
  EXPECT_EQ(20.0, s2.max);
  EXPECT_THROW(summarize(std::span<const double>{}), Error);
}

TEST(DatasetSummary, AggregatesSequences) {
  std::mt19937_64 rng(2);
  std::vector<SequenceStats> stats;
  for (std::size_t n : {300u, 600u}) stats.push_back(compute_sequence_stats(oracle::random_sequence(rng, n), {}));
  const auto sum = dataset_summary(stats);
  EXPECT_EQ(2u, sum.n_sequences);
  EXPECT_EQ(900u, sum.total_events);
  EXPECT_EQ(sum.total_events, sum.total_pos + sum.total_neg);
  EXPECT_NEAR(100.0, sum.neg_share_percent() + sum.pos_share_percent(), 1e-12);
  EXPECT_EQ(450.0, sum.metrics.at("n_total").mean);
  EXPECT_EQ(150.0, sum.metrics.at("n_total").stddev);
  for (const auto& [name, m] : sum.metrics) {
    EXPECT_LE(m.min, m.mean) << name;
    EXPECT_LE(m.mean, m.max) << name;
  }
  EXPECT_TRUE(sum.metrics.count("sparsity_global"));
  EXPECT_TRUE(sum.metrics.count("coherence_n20"));
  EXPECT_THROW(dataset_summary({}), Error);
}

TEST(SequenceStats, ShuffledInputGivesSameStats) {
  std::mt19937_64 rng(4);
  auto s = oracle::random_sequence(rng, 400);
  const auto a = compute_sequence_stats(s, {});
  std::shuffle(s.events.begin(), s.events.end(), rng);
  const auto b = compute_sequence_stats(s, {});
  EXPECT_EQ(a.n_total, b.n_total);
  EXPECT_EQ(a.neg_pos_ratio, b.neg_pos_ratio);
  EXPECT_EQ(a.sparsity_global, b.sparsity_global);
  EXPECT_EQ(a.coherence, b.coherence);
  EXPECT_EQ(a.temporal_histogram.global, b.temporal_histogram.global);
}
