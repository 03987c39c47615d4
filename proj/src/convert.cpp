// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

#include "evpcc/convert.hpp"

#include <algorithm>
#include <cmath>

#include "evpcc/error.hpp"

namespace evpcc {

DuplicateMethod parse_duplicate_method(const std::string& text) {
  if (text == "nn") return DuplicateMethod::kNearestNeighbor;
  if (text == "prob") return DuplicateMethod::kProbability;
  throw Error(ErrorCode::kInvalidArgument, "unknown duplicate method '" + text + "' (expected nn or prob)");
}

const char* to_string(DuplicateMethod method) {
  return method == DuplicateMethod::kProbability ? "prob" : "nn";
}

std::int64_t round_half_away(double value) { return static_cast<std::int64_t>(std::round(value)); }

std::int64_t scaled_time(std::uint32_t t_raw, double units_per_second, std::int64_t tsf) {
  // t_raw * tsf is exact in double, so the only rounding is the division.
  return round_half_away(static_cast<double>(t_raw) * static_cast<double>(tsf) / units_per_second);
}

namespace {

void check_config(const ConversionConfig& cfg) {
  if (cfg.tsf < 1) throw Error(ErrorCode::kInvalidArgument, "tsf must be >= 1");
}

}  // namespace

PolaritySplit event_to_pc(const EventSequence& seq, const ConversionConfig& cfg) {
  check_config(cfg);
  if (!(seq.units_per_second > 0)) throw Error(ErrorCode::kInvalidArgument, "units_per_second must be > 0");
  std::vector<Voxel> pos_points;
  std::vector<Voxel> neg_points;
  for (const Event& e : seq.events) {
    const Voxel v{e.x, e.y, scaled_time(e.t_raw, seq.units_per_second, cfg.tsf)};
    (e.p == Polarity::kPos ? pos_points : neg_points).push_back(v);
  }
  PolaritySplit split;
  split.pos = EventPointCloud::from_points(Polarity::kPos, std::move(pos_points));
  split.neg = EventPointCloud::from_points(Polarity::kNeg, std::move(neg_points));
  split.stats.n_input_events = seq.events.size();
  split.stats.n_output_points_pos = split.pos.size();
  split.stats.n_output_points_neg = split.neg.size();
  split.stats.n_discarded_same_polarity = seq.events.size() - split.pos.size() - split.neg.size();
  split.stats.n_cross_polarity_duplicates = cross_duplicates(split.pos, split.neg).size();
  return split;
}

std::vector<Voxel> cross_duplicates(const EventPointCloud& pos, const EventPointCloud& neg) {
  std::vector<Voxel> out;
  std::set_intersection(pos.points().begin(), pos.points().end(), neg.points().begin(),
                        neg.points().end(), std::back_inserter(out));
  return out;
}

namespace {

/// Kd-tree over the non-duplicate candidates, reused for all duplicates of one
/// merge.
class NnResolver {
 public:
  NnResolver(std::span<const TaggedVoxel> merged, std::span<const Voxel> duplicates) {
    std::vector<Voxel> dup_sorted(duplicates.begin(), duplicates.end());
    std::sort(dup_sorted.begin(), dup_sorted.end());
    std::vector<Vec3> coords;
    for (const TaggedVoxel& t : merged) {
      if (std::binary_search(dup_sorted.begin(), dup_sorted.end(), t.v)) continue;
      coords.push_back(to_vec(t.v));
      tags_.push_back(t.p);
    }
    if (!coords.empty()) index_.emplace(std::move(coords));
  }

  bool has_candidates() const { return index_.has_value(); }

  Polarity resolve(const Voxel& v) const {
    if (!index_) throw Error(ErrorCode::kNoCandidates, "every merged point is a cross-polarity duplicate");
    const std::size_t n = index_->size();
    const Vec3 q = to_vec(v);
    std::size_t k = std::min<std::size_t>(16, n);
    for (;;) {
      const auto found = index_->knn(q, k);
      const bool complete = found.size() == n;
      std::size_t n_pos = 0;
      std::size_t n_neg = 0;
      std::size_t i = 0;
      while (i < found.size()) {
        const double d = found[i].dist2;
        // A group touching the end of a partial result may continue beyond it.
        if (!complete && d == found.back().dist2) break;
        for (; i < found.size() && found[i].dist2 == d; ++i) {
          (tags_[found[i].index] == Polarity::kPos ? n_pos : n_neg)++;
        }
        if (n_pos != n_neg) return n_pos > n_neg ? Polarity::kPos : Polarity::kNeg;
      }
      if (complete) return kExhaustedTiePolarity;
      k = std::min(2 * k, n);
    }
  }

 private:
  std::vector<Polarity> tags_;
  std::optional<NeighborIndex> index_;
};

}  // namespace

std::vector<Polarity> resolve_duplicates_nn(std::span<const TaggedVoxel> merged,
                                            std::span<const Voxel> duplicates) {
  if (duplicates.empty()) return {};
  const NnResolver resolver(merged, duplicates);
  std::vector<Polarity> out;
  out.reserve(duplicates.size());
  for (const Voxel& v : duplicates) out.push_back(resolver.resolve(v));
  return out;
}

std::vector<Polarity> resolve_duplicates_prob(std::span<const Voxel> duplicates,
                                              const EventPointCloud& pos, const EventPointCloud& neg,
                                              std::span<const TaggedVoxel> merged) {
  std::vector<Polarity> out;
  out.reserve(duplicates.size());
  std::optional<NnResolver> fallback;
  for (const Voxel& v : duplicates) {
    const auto sp = pos.score_of(v);
    const auto sn = neg.score_of(v);
    if (!sp || !sn) {
      throw Error(ErrorCode::kMissingScores, "probability resolution needs scores for voxel (" +
                                                 std::to_string(v.x) + "," + std::to_string(v.y) + "," +
                                                 std::to_string(v.z) + ") in both clouds");
    }
    if (*sp > *sn) {
      out.push_back(Polarity::kPos);
    } else if (*sp < *sn) {
      out.push_back(Polarity::kNeg);
    } else {
      if (!fallback) fallback.emplace(merged, duplicates);
      out.push_back(fallback->resolve(v));
    }
  }
  return out;
}

EventSequence pc_to_event(const EventPointCloud& pos, const EventPointCloud& neg,
                          const ConversionConfig& cfg, double units_per_second) {
  check_config(cfg);
  if (!(units_per_second > 0)) throw Error(ErrorCode::kInvalidArgument, "units_per_second must be > 0");
  if (cfg.duplicate_method == DuplicateMethod::kProbability && (!pos.has_scores() || !neg.has_scores())) {
    throw Error(ErrorCode::kMissingScores, "the prob duplicate method requires scores on both clouds");
  }

  std::vector<TaggedVoxel> merged;
  merged.reserve(pos.size() + neg.size());
  for (const Voxel& v : pos.points()) merged.push_back({v, Polarity::kPos});
  for (const Voxel& v : neg.points()) merged.push_back({v, Polarity::kNeg});

  const std::vector<Voxel> dups = cross_duplicates(pos, neg);
  const std::vector<Polarity> resolved =
      cfg.duplicate_method == DuplicateMethod::kProbability
          ? resolve_duplicates_prob(dups, pos, neg, merged)
          : resolve_duplicates_nn(merged, dups);

  EventSequence seq;
  seq.units_per_second = units_per_second;
  seq.events.reserve(merged.size() - dups.size());
  auto emit = [&](const Voxel& v, Polarity p) {
    const std::int64_t t = round_half_away(static_cast<double>(v.z) * units_per_second /
                                           static_cast<double>(cfg.tsf));
    if (v.x < 0 || v.x > kMaxX || v.y < 0 || v.y > kMaxY || t < 0 || t > kMaxTimestamp) {
      throw Error(ErrorCode::kFieldOverflow, "rescaled point (" + std::to_string(v.x) + "," +
                                                 std::to_string(v.y) + "," + std::to_string(t) +
                                                 ") does not fit the event format");
    }
    seq.events.push_back({static_cast<std::uint32_t>(v.x), static_cast<std::uint32_t>(v.y),
                          static_cast<std::uint32_t>(t), p});
  };
  for (const TaggedVoxel& t : merged) {
    if (!std::binary_search(dups.begin(), dups.end(), t.v)) emit(t.v, t.p);
  }
  for (std::size_t i = 0; i < dups.size(); ++i) emit(dups[i], resolved[i]);

  std::sort(seq.events.begin(), seq.events.end(), [](const Event& a, const Event& b) {
    if (a.t_raw != b.t_raw) return a.t_raw < b.t_raw;
    if (a.x != b.x) return a.x < b.x;
    if (a.y != b.y) return a.y < b.y;
    return a.p < b.p;
  });
  return seq;
}

}  // namespace evpcc
