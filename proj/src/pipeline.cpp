// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

#include "evpcc/pipeline.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "evpcc/error.hpp"
#include "evpcc/tensor_export.hpp"

namespace evpcc {

namespace fs = std::filesystem;

PipelineKind parse_pipeline_kind(const std::string& text) {
  if (text == "original") return PipelineKind::kOriginal;
  if (text == "voxelized") return PipelineKind::kVoxelized;
  if (text == "decompressed") return PipelineKind::kDecompressed;
  throw Error(ErrorCode::kInvalidArgument, "unknown pipeline '" + text + "'");
}

const char* to_string(PipelineKind kind) {
  switch (kind) {
    case PipelineKind::kOriginal: return "original";
    case PipelineKind::kVoxelized: return "voxelized";
    case PipelineKind::kDecompressed: return "decompressed";
  }
  return "?";
}

std::string CodecSpec::family() const {
  if (kind == Kind::kBuiltin) return "octree";
  const std::string n = name.empty() ? "external" : name;
  return n.substr(0, n.find('@'));
}

std::string CodecSpec::rate_point() const {
  if (kind == Kind::kBuiltin) {
    return octree.mode == OctreeMode::kLossless ? "lossless" : "t" + std::to_string(octree.truncate_levels);
  }
  const auto at = name.find('@');
  return at == std::string::npos ? "" : name.substr(at + 1);
}

void PipelineJob::validate() const {
  if (tsf < 1) throw Error(ErrorCode::kInvalidArgument, "tsf must be >= 1");
  if (pipeline == PipelineKind::kDecompressed && !codec) {
    throw Error(ErrorCode::kInvalidArgument, "the decompressed pipeline needs a codec");
  }
  if (codec && codec->kind == CodecSpec::Kind::kBuiltin) codec->octree.validate();
  if (duplicate_method == DuplicateMethod::kProbability) {
    if (pipeline != PipelineKind::kDecompressed) {
      throw Error(ErrorCode::kInvalidArgument, "the prob method only applies to the decompressed pipeline");
    }
    if (!codec->score_capable()) {
      throw Error(ErrorCode::kInvalidArgument, "the prob method needs a codec that reports occupancy scores");
    }
  }
  if (metrics.peak && !(*metrics.peak > 0.0)) throw Error(ErrorCode::kInvalidArgument, "peak must be > 0");
}

PipelineJob parse_job_json(const std::string& text) {
  PipelineJob job;
  try {
    const auto j = nlohmann::json::parse(text);
    if (j.contains("pipeline")) job.pipeline = parse_pipeline_kind(j["pipeline"].get<std::string>());
    if (j.contains("tsf")) job.tsf = j["tsf"].get<std::int64_t>();
    if (j.contains("duplicate_method")) {
      job.duplicate_method = parse_duplicate_method(j["duplicate_method"].get<std::string>());
    }
    if (j.contains("dataset_root")) job.dataset_root = j["dataset_root"].get<std::string>();
    if (j.contains("output_dir")) job.output_dir = j["output_dir"].get<std::string>();
    if (j.contains("units")) job.format.timestamp_unit = parse_timestamp_unit(j["units"].get<std::string>());
    if (j.contains("jobs")) job.jobs = j["jobs"].get<unsigned>();
    if (j.contains("metrics")) {
      const auto& m = j["metrics"];
      job.metrics.e2e = m.value("e2e", true);
      job.metrics.e2d = m.value("e2d", true);
      if (m.contains("peak") && !m["peak"].is_null()) job.metrics.peak = m["peak"].get<double>();
    }
    if (j.contains("codec") && !j["codec"].is_null()) {
      const auto& c = j["codec"];
      CodecSpec spec;
      const std::string kind = c.value("kind", std::string("builtin"));
      if (kind == "external") {
        spec.kind = CodecSpec::Kind::kExternal;
        spec.external = ExternalCodecCommand::parse(c.at("command").get<std::string>());
        spec.name = c.value("name", std::string("external"));
      } else if (kind == "builtin") {
        spec.octree.mode = parse_octree_mode(c.value("mode", std::string("lossless")));
        spec.octree.truncate_levels = c.value("truncate", 0);
        spec.octree.score_radius = c.value("score_radius", 2);
      } else {
        throw Error(ErrorCode::kInvalidArgument, "codec kind must be builtin or external");
      }
      job.codec = spec;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kParse, std::string("bad job description: ") + e.what());
  }
  job.validate();
  return job;
}

namespace {

std::optional<double> metric_or_empty(const std::function<double()>& compute) {
  try {
    return compute();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kTooFewPoints || e.code() == ErrorCode::kUndefinedMetric) return std::nullopt;
    throw;
  }
}

void fill_metrics(SweepRow& row, const EventSequence& ref, const EventSequence& dec, const MetricOptions& opts) {
  const MetricPoints a = to_metric_space(ref);
  const MetricPoints b = to_metric_space(dec);
  row.peak = opts.peak ? *opts.peak : default_peak(a);
  if (opts.e2e) row.psnr_e2e = metric_or_empty([&] { return psnr_e2e(a, b, row.peak).psnr_db; });
  if (opts.e2d) row.psnr_e2d = metric_or_empty([&] { return psnr_e2d(a, b, row.peak).psnr_db; });
}

SweepRow base_row(const EventSequence& seq, PipelineKind kind, std::int64_t tsf, DuplicateMethod method) {
  SweepRow row;
  row.source_id = seq.source_id.value_or("");
  row.label = seq.label.value_or("");
  row.pipeline = to_string(kind);
  row.tsf = tsf;
  row.duplicate_method = to_string(method);
  row.n_events = seq.events.size();
  return row;
}

}  // namespace

SweepRow evaluate_voxelized(const EventSequence& seq, std::int64_t tsf, const MetricOptions& metrics) {
  const ConversionConfig cfg{tsf, DuplicateMethod::kNearestNeighbor};
  SweepRow row = base_row(seq, PipelineKind::kVoxelized, tsf, cfg.duplicate_method);
  const PolaritySplit split = event_to_pc(seq, cfg);
  const EventSequence dec = pc_to_event(split.pos, split.neg, cfg, seq.units_per_second);
  row.n_output_events = dec.events.size();
  row.discarded_percent = split.stats.discarded_percent();
  row.cross_duplicates = split.stats.n_cross_polarity_duplicates;
  fill_metrics(row, seq, dec, metrics);
  return row;
}

SweepRow evaluate_decompressed(const EventSequence& seq, std::int64_t tsf, const CodecSpec& codec,
                               DuplicateMethod method, const MetricOptions& metrics, const fs::path& workdir) {
  const ConversionConfig cfg{tsf, method};
  SweepRow row = base_row(seq, PipelineKind::kDecompressed, tsf, method);
  row.codec = codec.family();
  row.rate_point = codec.rate_point();
  const PolaritySplit split = event_to_pc(seq, cfg);
  row.discarded_percent = split.stats.discarded_percent();

  std::size_t bytes[2] = {0, 0};
  EventPointCloud decoded[2];
  const EventPointCloud* clouds[2] = {&split.pos, &split.neg};
  for (int i = 0; i < 2; ++i) {
    const EventPointCloud& pc = *clouds[i];
    if (codec.kind == CodecSpec::Kind::kBuiltin) {
      const OctreeBitstream bs = pc.empty() ? empty_bitstream(pc.polarity(), codec.octree) : encode(pc, codec.octree);
      const std::vector<std::uint8_t> wire = bs.serialize();
      bytes[i] = wire.size();
      decoded[i] = decode(OctreeBitstream::parse(wire));
    } else if (pc.empty()) {
      decoded[i] = EventPointCloud(pc.polarity());
    } else {
      const fs::path input = workdir / (pc.polarity() == Polarity::kPos ? "pos.ply" : "neg.ply");
      fs::create_directories(workdir);
      save_ply(input, pc);
      ExternalCodecResult result = run_external_codec(codec.external, input, workdir, pc.polarity());
      bytes[i] = result.compressed_bytes;
      decoded[i] = std::move(result.decoded);
    }
  }
  row.bpe = rate_bpe(bytes[0], bytes[1], seq.events.size());
  row.cross_duplicates = cross_duplicates(decoded[0], decoded[1]).size();
  const EventSequence dec = pc_to_event(decoded[0], decoded[1], cfg, seq.units_per_second);
  row.n_output_events = dec.events.size();
  fill_metrics(row, seq, dec, metrics);
  return row;
}

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs == 0) jobs = std::max(1u, std::thread::hardware_concurrency());
  const std::size_t workers = std::min<std::size_t>(jobs, n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  std::vector<std::thread> threads;
  threads.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    threads.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          const std::lock_guard lock(error_mutex);
          if (!first_error) first_error = std::current_exception();
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

namespace {

struct Task {
  std::size_t entry = 0;
  std::int64_t tsf = 0;
  std::optional<CodecSpec> codec;
};

std::string configuration_name(PipelineKind kind, std::int64_t tsf, const std::optional<CodecSpec>& codec,
                               DuplicateMethod method) {
  std::string name = std::string(to_string(kind)) + " tsf=" + std::to_string(tsf);
  if (codec) name += " codec=" + codec->family() + (codec->rate_point().empty() ? "" : "/" + codec->rate_point());
  return name + " dup=" + to_string(method);
}

SweepReport run_tasks(const PipelineJob& job, const std::vector<DatasetEntry>& entries,
                      const std::vector<Task>& tasks) {
  std::vector<std::optional<SweepRow>> rows(tasks.size());
  std::vector<std::optional<Failure>> failures(tasks.size());
  parallel_for(tasks.size(), job.jobs, [&](std::size_t i) {
    const Task& task = tasks[i];
    const DatasetEntry& entry = entries[task.entry];
    try {
      EventSequence seq = load_events(entry.source, job.format);
      seq.label = entry.label;
      if (job.pipeline == PipelineKind::kVoxelized) {
        rows[i] = evaluate_voxelized(seq, task.tsf, job.metrics);
      } else {
        const fs::path workdir = job.output_dir / "work" / std::to_string(i);
        rows[i] = evaluate_decompressed(seq, task.tsf, *task.codec, job.duplicate_method, job.metrics, workdir);
        if (task.codec->kind == CodecSpec::Kind::kExternal) {
          std::error_code ec;
          fs::remove_all(workdir, ec);
        }
      }
    } catch (const std::exception& e) {
      failures[i] = Failure{entry.source.string(),
                            configuration_name(job.pipeline, task.tsf, task.codec, job.duplicate_method), e.what()};
    }
  });
  SweepReport report;
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    if (rows[i]) report.rows.push_back(std::move(*rows[i]));
    if (failures[i]) report.failures.push_back(std::move(*failures[i]));
  }
  return report;
}

}  // namespace

SweepReport run_voxelized(const PipelineJob& job) {
  PipelineJob j = job;
  j.pipeline = PipelineKind::kVoxelized;
  j.validate();
  const auto entries = walk_dataset(j.dataset_root);
  std::vector<Task> tasks;
  for (std::size_t e = 0; e < entries.size(); ++e) tasks.push_back({e, j.tsf, std::nullopt});
  return run_tasks(j, entries, tasks);
}

SweepReport run_decompressed(const PipelineJob& job) {
  PipelineJob j = job;
  j.pipeline = PipelineKind::kDecompressed;
  j.validate();
  const auto entries = walk_dataset(j.dataset_root);
  std::vector<Task> tasks;
  for (std::size_t e = 0; e < entries.size(); ++e) tasks.push_back({e, j.tsf, j.codec});
  return run_tasks(j, entries, tasks);
}

SweepReport sweep(const PipelineJob& base, const std::vector<std::int64_t>& tsfs,
                  const std::vector<CodecSpec>& codecs) {
  if (tsfs.empty() || codecs.empty()) throw Error(ErrorCode::kInvalidArgument, "sweep grids must be non-empty");
  PipelineJob j = base;
  j.pipeline = PipelineKind::kDecompressed;
  j.codec = codecs.front();
  for (const std::int64_t tsf : tsfs) {
    j.tsf = tsf;
    for (const CodecSpec& codec : codecs) {
      j.codec = codec;
      j.validate();
    }
  }
  const auto entries = walk_dataset(j.dataset_root);
  std::vector<Task> tasks;
  for (const std::int64_t tsf : tsfs) {
    for (const CodecSpec& codec : codecs) {
      for (std::size_t e = 0; e < entries.size(); ++e) tasks.push_back({e, tsf, codec});
    }
  }
  return run_tasks(j, entries, tasks);
}

OriginalReport run_original(const PipelineJob& job, const CharacterizeConfig& cfg, std::size_t bins) {
  const auto entries = walk_dataset(job.dataset_root);
  std::vector<std::optional<SequenceStats>> stats(entries.size());
  std::vector<std::optional<Failure>> failures(entries.size());
  parallel_for(entries.size(), job.jobs, [&](std::size_t i) {
    const DatasetEntry& entry = entries[i];
    try {
      EventSequence seq = load_events(entry.source, job.format);
      seq.label = entry.label;
      stats[i] = compute_sequence_stats(seq, cfg);
      const fs::path dir = job.output_dir / "tensors" / entry.label;
      fs::create_directories(dir);
      const EventTensor tensor = build_tensor(seq, bins);
      write_file_bytes(dir / (entry.source.stem().string() + ".evt.tensor"), write_tensor(tensor));
    } catch (const std::exception& e) {
      failures[i] = Failure{entry.source.string(), "original", e.what()};
    }
  });
  OriginalReport report;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (stats[i]) report.stats.push_back(std::move(*stats[i]));
    if (failures[i]) report.failures.push_back(std::move(*failures[i]));
  }
  return report;
}

std::vector<ConfigAggregate> SweepReport::aggregates() const {
  std::vector<ConfigAggregate> out;
  std::map<std::tuple<std::string, std::int64_t, std::string, std::string, std::string>, std::size_t> slot;
  struct Sums {
    double bpe = 0, e2e = 0, e2d = 0, discarded = 0;
    std::size_t n_bpe = 0, n_e2e = 0, n_e2d = 0;
  };
  std::vector<Sums> sums;
  for (const SweepRow& r : rows) {
    const auto key = std::make_tuple(r.pipeline, r.tsf, r.codec, r.rate_point, r.duplicate_method);
    auto [it, inserted] = slot.emplace(key, out.size());
    if (inserted) {
      ConfigAggregate agg;
      agg.pipeline = r.pipeline;
      agg.tsf = r.tsf;
      agg.codec = r.codec;
      agg.rate_point = r.rate_point;
      agg.duplicate_method = r.duplicate_method;
      out.push_back(std::move(agg));
      sums.emplace_back();
    }
    ConfigAggregate& agg = out[it->second];
    Sums& s = sums[it->second];
    ++agg.n_rows;
    s.discarded += r.discarded_percent;
    if (r.bpe) s.bpe += *r.bpe, ++s.n_bpe;
    if (r.psnr_e2e) s.e2e += *r.psnr_e2e, ++s.n_e2e;
    if (r.psnr_e2d) s.e2d += *r.psnr_e2d, ++s.n_e2d;
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    const Sums& s = sums[i];
    out[i].mean_discarded_percent = s.discarded / static_cast<double>(out[i].n_rows);
    if (s.n_bpe) out[i].mean_bpe = s.bpe / static_cast<double>(s.n_bpe);
    if (s.n_e2e) out[i].mean_psnr_e2e = s.e2e / static_cast<double>(s.n_e2e);
    if (s.n_e2d) out[i].mean_psnr_e2d = s.e2d / static_cast<double>(s.n_e2d);
  }
  return out;
}

std::vector<RateDistortionCurve> build_curves(const SweepReport& report, CurveMetric metric) {
  std::vector<RateDistortionCurve> curves;
  std::map<std::string, std::size_t> by_label;
  for (const ConfigAggregate& a : report.aggregates()) {
    if (a.pipeline != to_string(PipelineKind::kDecompressed) || !a.mean_bpe) continue;
    const std::optional<double>& score = metric == CurveMetric::kE2e ? a.mean_psnr_e2e : a.mean_psnr_e2d;
    const std::string label = "tsf" + std::to_string(a.tsf) + "_" + a.codec + "_" + a.duplicate_method;
    auto [it, inserted] = by_label.emplace(label, curves.size());
    if (inserted) curves.push_back({label, {}});
    if (score && std::isfinite(*score)) curves[it->second].points.push_back({*a.mean_bpe, *score});
  }
  for (RateDistortionCurve& c : curves) {
    std::stable_sort(c.points.begin(), c.points.end(),
                     [](const CurvePoint& a, const CurvePoint& b) { return a.rate < b.rate; });
    c.points.erase(std::unique(c.points.begin(), c.points.end(),
                               [](const CurvePoint& a, const CurvePoint& b) { return a.rate == b.rate; }),
                   c.points.end());
  }
  return curves;
}

namespace {

std::string fmt(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::ostringstream out;
  out.precision(10);
  out << v;
  return out.str();
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : ""; }

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

nlohmann::ordered_json json_number(const std::optional<double>& v) {
  if (!v) return nullptr;
  if (std::isinf(*v)) return *v > 0 ? "inf" : "-inf";
  return *v;
}

}  // namespace

std::string sweep_rows_csv(const SweepReport& report) {
  std::ostringstream out;
  out << "source_id,label,pipeline,tsf,codec,rate_point,duplicate_method,n_events,n_output_events,bpe,"
         "psnr_e2e,psnr_e2d,peak,discarded_percent,cross_duplicates\n";
  for (const SweepRow& r : report.rows) {
    out << csv_field(r.source_id) << ',' << csv_field(r.label) << ',' << r.pipeline << ',' << r.tsf << ','
        << r.codec << ',' << r.rate_point << ',' << r.duplicate_method << ',' << r.n_events << ','
        << r.n_output_events << ',' << fmt(r.bpe) << ',' << fmt(r.psnr_e2e) << ',' << fmt(r.psnr_e2d) << ','
        << fmt(r.peak) << ',' << fmt(r.discarded_percent) << ',' << r.cross_duplicates << '\n';
  }
  return out.str();
}

std::string aggregates_csv(const SweepReport& report) {
  std::ostringstream out;
  out << "pipeline,tsf,codec,rate_point,duplicate_method,n_rows,mean_bpe,mean_psnr_e2e,mean_psnr_e2d,"
         "mean_discarded_percent\n";
  for (const ConfigAggregate& a : report.aggregates()) {
    out << a.pipeline << ',' << a.tsf << ',' << a.codec << ',' << a.rate_point << ',' << a.duplicate_method << ','
        << a.n_rows << ',' << fmt(a.mean_bpe) << ',' << fmt(a.mean_psnr_e2e) << ',' << fmt(a.mean_psnr_e2d) << ','
        << fmt(a.mean_discarded_percent) << '\n';
  }
  return out.str();
}

std::string report_summary_json(const SweepReport& report) {
  nlohmann::ordered_json j;
  j["n_rows"] = report.rows.size();
  j["n_failures"] = report.failures.size();
  auto& configs = j["configurations"];
  configs = nlohmann::ordered_json::array();
  for (const ConfigAggregate& a : report.aggregates()) {
    configs.push_back({{"pipeline", a.pipeline},
                       {"tsf", a.tsf},
                       {"codec", a.codec},
                       {"rate_point", a.rate_point},
                       {"duplicate_method", a.duplicate_method},
                       {"n_rows", a.n_rows},
                       {"mean_bpe", json_number(a.mean_bpe)},
                       {"mean_psnr_e2e", json_number(a.mean_psnr_e2e)},
                       {"mean_psnr_e2d", json_number(a.mean_psnr_e2d)},
                       {"mean_discarded_percent", a.mean_discarded_percent}});
  }
  return j.dump(2) + "\n";
}

std::string failures_json(const std::vector<Failure>& failures) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const Failure& f : failures) {
    j.push_back({{"source_id", f.source_id}, {"configuration", f.configuration}, {"message", f.message}});
  }
  return j.dump(2) + "\n";
}

void write_report(const SweepReport& report, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  write_text_file(out_dir / "rows.csv", sweep_rows_csv(report));
  write_text_file(out_dir / "aggregates.csv", aggregates_csv(report));
  write_text_file(out_dir / "summary.json", report_summary_json(report));
  if (!report.failures.empty()) write_text_file(out_dir / "failures.json", failures_json(report.failures));
  for (const CurveMetric metric : {CurveMetric::kE2e, CurveMetric::kE2d}) {
    for (const RateDistortionCurve& c : build_curves(report, metric)) {
      fs::create_directories(out_dir / "curves");
      const std::string suffix = metric == CurveMetric::kE2e ? "_e2e.csv" : "_e2d.csv";
      write_text_file(out_dir / "curves" / (c.label + suffix), write_curve_csv(c));
    }
  }
}

}  // namespace evpcc
