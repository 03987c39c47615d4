// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef EVPCC_PIPELINE_HPP
#define EVPCC_PIPELINE_HPP

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "evpcc/characterize.hpp"
#include "evpcc/convert.hpp"
#include "evpcc/event_io.hpp"
#include "evpcc/octree_codec.hpp"
#include "evpcc/quality.hpp"

namespace evpcc {

enum class PipelineKind { kOriginal, kVoxelized, kDecompressed };

PipelineKind parse_pipeline_kind(const std::string& text);
const char* to_string(PipelineKind kind);

struct CodecSpec {
  enum class Kind { kBuiltin, kExternal };
  Kind kind = Kind::kBuiltin;
  OctreeConfig octree;
  ExternalCodecCommand external;
  std::string name;  // optional display name for external codecs

  bool score_capable() const { return kind == Kind::kBuiltin; }
  /// Codec family, shared by all rate points of one curve.
  std::string family() const;
  /// Rate point within the family, e.g. "t2" for two truncated levels.
  std::string rate_point() const;
};

struct MetricOptions {
  bool e2e = true;
  bool e2d = true;
  std::optional<double> peak;
};

struct PipelineJob {
  PipelineKind pipeline = PipelineKind::kVoxelized;
  std::int64_t tsf = 256;
  std::optional<CodecSpec> codec;
  DuplicateMethod duplicate_method = DuplicateMethod::kNearestNeighbor;
  MetricOptions metrics;
  std::filesystem::path dataset_root;
  std::filesystem::path output_dir = "out";
  FormatParams format;
  unsigned jobs = 0;  // 0 = hardware concurrency

  void validate() const;
};

/// Parses the JSON job description; missing keys keep their defaults.
PipelineJob parse_job_json(const std::string& text);

struct SweepRow {
  std::string source_id;
  std::string label;
  std::string pipeline;
  std::int64_t tsf = 0;
  std::string codec;       // codec family, empty for the voxelized pipeline
  std::string rate_point;  // empty for the voxelized pipeline
  std::string duplicate_method;
  std::size_t n_events = 0;
  std::size_t n_output_events = 0;
  std::optional<double> bpe;
  std::optional<double> psnr_e2e;
  std::optional<double> psnr_e2d;
  double peak = 0.0;
  double discarded_percent = 0.0;
  std::size_t cross_duplicates = 0;  // voxels resolved by the duplicate method
};

struct Failure {
  std::string source_id;
  std::string configuration;
  std::string message;
};

struct ConfigAggregate {
  std::string pipeline;
  std::int64_t tsf = 0;
  std::string codec;
  std::string rate_point;
  std::string duplicate_method;
  std::size_t n_rows = 0;
  std::optional<double> mean_bpe;
  std::optional<double> mean_psnr_e2e;
  std::optional<double> mean_psnr_e2d;
  double mean_discarded_percent = 0.0;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  std::vector<Failure> failures;

  std::vector<ConfigAggregate> aggregates() const;
};

/// Per-sequence evaluation of the voxelized pipeline: e2p, p2e (NN), metrics.
SweepRow evaluate_voxelized(const EventSequence& seq, std::int64_t tsf, const MetricOptions& metrics);

/// Per-sequence evaluation of the decompressed pipeline. `workdir` holds
/// external-codec temporaries.
SweepRow evaluate_decompressed(const EventSequence& seq, std::int64_t tsf, const CodecSpec& codec,
                               DuplicateMethod method, const MetricOptions& metrics,
                               const std::filesystem::path& workdir);

/// Calls fn(i) for i in [0, n) on up to `jobs` threads (0 = all cores).
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn);

SweepReport run_voxelized(const PipelineJob& job);
SweepReport run_decompressed(const PipelineJob& job);

struct OriginalReport {
  std::vector<SequenceStats> stats;
  std::vector<Failure> failures;
};

/// Characterizes every sequence and writes `<out>/tensors/<label>/<name>.evt.tensor`.
OriginalReport run_original(const PipelineJob& job, const CharacterizeConfig& cfg, std::size_t bins);

/// Runs the decompressed pipeline for every tsf x codec combination. Entries
/// are evaluated once per combination; results are ordered by (tsf, codec,
/// entry).
SweepReport sweep(const PipelineJob& base, const std::vector<std::int64_t>& tsfs,
                  const std::vector<CodecSpec>& codecs);

/// One curve per (tsf, codec family, duplicate method): mean bpe against the
/// mean of the chosen PSNR, sorted by rate. Points with undefined or infinite
/// scores are left out.
enum class CurveMetric { kE2e, kE2d };
std::vector<RateDistortionCurve> build_curves(const SweepReport& report, CurveMetric metric);

std::string sweep_rows_csv(const SweepReport& report);
std::string aggregates_csv(const SweepReport& report);
std::string report_summary_json(const SweepReport& report);
std::string failures_json(const std::vector<Failure>& failures);

/// Writes rows.csv, aggregates.csv, summary.json, failures.json (when there are
/// failures) and, for decompressed runs, curves/<label>_{e2e,e2d}.csv.
void write_report(const SweepReport& report, const std::filesystem::path& out_dir);

}  // namespace evpcc

#endif  // EVPCC_PIPELINE_HPP
