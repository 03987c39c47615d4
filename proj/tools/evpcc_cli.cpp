// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

// Command-line front end: conversion, coding, metrics and dataset pipelines.
// Exit codes: 0 success, 1 runtime or partial failure, 2 invalid invocation.

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <sstream>

#include "evpcc/characterize.hpp"
#include "evpcc/convert.hpp"
#include "evpcc/error.hpp"
#include "evpcc/event_io.hpp"
#include "evpcc/octree_codec.hpp"
#include "evpcc/pipeline.hpp"
#include "evpcc/quality.hpp"
#include "evpcc/tensor_export.hpp"

namespace fs = std::filesystem;
using namespace evpcc;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct GlobalOptions {
  std::string units = "us";
  std::int64_t tsf = 256;
  unsigned jobs = 0;
  std::string out;
};

FormatParams format_of(const GlobalOptions& g) { return FormatParams{parse_timestamp_unit(g.units)}; }

void emit(const std::string& text, const std::string& out) {
  if (out.empty()) {
    std::cout << text;
  } else {
    if (fs::path(out).has_parent_path()) fs::create_directories(fs::path(out).parent_path());
    write_text_file(out, text);
  }
}

nlohmann::ordered_json json_db(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

Polarity parse_polarity(const std::string& s) {
  if (s == "pos") return Polarity::kPos;
  if (s == "neg") return Polarity::kNeg;
  throw Error(ErrorCode::kInvalidArgument, "polarity must be pos or neg");
}

std::vector<EventSequence> load_inputs(const std::vector<std::string>& inputs, const FormatParams& fmt) {
  std::vector<EventSequence> out;
  for (const std::string& in : inputs) {
    if (fs::is_directory(in)) {
      for (const DatasetEntry& e : walk_dataset(in)) {
        EventSequence seq = load_events(e.source, fmt);
        seq.label = e.label;
        out.push_back(std::move(seq));
      }
    } else {
      out.push_back(load_events(in, fmt));
    }
  }
  return out;
}

std::string stem_of(const fs::path& p) {
  std::string name = p.filename().string();
  for (const char* ext : {".evt.csv", ".bin", ".csv", ".ply", ".eoc"}) {
    const std::string e(ext);
    if (name.size() > e.size() && name.ends_with(e)) return name.substr(0, name.size() - e.size());
  }
  return p.stem().string();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"evpcc: event sequences as point clouds; conversion, octree coding and quality metrics"};
  app.require_subcommand(1);
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--units", g.units, "timestamp unit of event files: us, ms or s")->capture_default_str();
  app.add_option("--tsf", g.tsf, "temporal scaling factor")->capture_default_str();
  app.add_option("--jobs", g.jobs, "worker threads (0 = all cores)")->capture_default_str();
  app.add_option("--out", g.out, "output file or directory");

  // characterize
  auto* characterize = app.add_subcommand("characterize", "per-sequence statistics and dataset summary");
  std::vector<std::string> char_inputs;
  std::size_t char_k = 20, char_bins = 100;
  characterize->add_option("inputs", char_inputs, "event files or dataset roots")->required();
  characterize->add_option("--k", char_k, "neighbors for sparsity and coherence")->capture_default_str();
  characterize->add_option("--bins", char_bins, "temporal histogram bins")->capture_default_str();

  // e2p
  auto* e2p = app.add_subcommand("e2p", "events to one PLY per polarity plus conversion stats");
  std::string e2p_input;
  e2p->add_option("input", e2p_input, "event file")->required();

  // p2e
  auto* p2e = app.add_subcommand("p2e", "two PLY clouds back to an event file");
  std::string p2e_pos, p2e_neg, dup_method = "nn";
  p2e->add_option("--pos", p2e_pos, "POS cloud")->required();
  p2e->add_option("--neg", p2e_neg, "NEG cloud")->required();
  p2e->add_option("--dup-method", dup_method, "nn or prob")->capture_default_str();

  // encode / decode
  auto* enc = app.add_subcommand("encode", "octree-encode a PLY cloud (or run an external codec)");
  std::string enc_input, mode = "lossless", polarity = "neg", external;
  int truncate = 0, score_radius = 2;
  enc->add_option("input", enc_input, "PLY cloud")->required();
  enc->add_option("--mode", mode, "lossless or lossy")->capture_default_str();
  enc->add_option("--truncate", truncate, "octree levels dropped in lossy mode")->capture_default_str();
  enc->add_option("--score-radius", score_radius, "occupancy score radius")->capture_default_str();
  enc->add_option("--polarity", polarity, "polarity recorded in the stream: pos or neg")->capture_default_str();
  enc->add_option("--external", external, "\"<encode cmd>;<decode cmd>\" with {in}, {bin}, {out}");

  auto* dec = app.add_subcommand("decode", "decode an .eoc stream to PLY (with occupancy scores)");
  std::string dec_input;
  dec->add_option("input", dec_input, ".eoc stream")->required();

  // run / sweep
  auto* run = app.add_subcommand("run", "run one pipeline job over a dataset");
  std::string run_config, run_pipeline = "voxelized", run_dataset;
  run->add_option("--config", run_config, "JSON job description");
  run->add_option("--pipeline", run_pipeline, "original, voxelized or decompressed")->capture_default_str();
  run->add_option("--dataset", run_dataset, "dataset root (one directory per class)");
  run->add_option("--mode", mode, "builtin codec mode")->capture_default_str();
  run->add_option("--truncate", truncate, "builtin codec truncation")->capture_default_str();
  run->add_option("--score-radius", score_radius, "builtin codec score radius")->capture_default_str();
  run->add_option("--external", external, "external codec \"<encode cmd>;<decode cmd>\"");
  run->add_option("--dup-method", dup_method, "nn or prob")->capture_default_str();
  std::optional<double> peak;
  std::string metric = "both";
  run->add_option("--peak", peak, "PSNR peak (default: reference extent)");
  run->add_option("--metric", metric, "e2e, e2d or both")->capture_default_str();

  auto* sweep_cmd = app.add_subcommand("sweep", "decompressed pipeline over a TSF x codec grid");
  std::string sweep_dataset;
  std::vector<std::int64_t> sweep_tsfs{64, 128, 256};
  std::vector<int> sweep_truncs;
  std::vector<std::string> sweep_externals;
  sweep_cmd->add_option("--dataset", sweep_dataset, "dataset root")->required();
  sweep_cmd->add_option("--tsfs", sweep_tsfs, "TSF values")->delimiter(',')->capture_default_str();
  sweep_cmd->add_option("--truncations", sweep_truncs, "builtin truncation levels (0 = lossless)")
      ->delimiter(',');
  sweep_cmd->add_option("--external", sweep_externals, "name@point=<encode cmd>;<decode cmd> (repeatable)");
  sweep_cmd->add_option("--score-radius", score_radius, "builtin codec score radius")->capture_default_str();
  sweep_cmd->add_option("--dup-method", dup_method, "nn or prob")->capture_default_str();
  sweep_cmd->add_option("--peak", peak, "PSNR peak (default: reference extent)");
  sweep_cmd->add_option("--metric", metric, "e2e, e2d or both")->capture_default_str();

  // metrics / bdrate / topk / tensor
  auto* metrics = app.add_subcommand("metrics", "PSNR E2E / E2D between two event files");
  std::string ref_path, dec_path;
  metrics->add_option("--ref", ref_path, "reference events")->required();
  metrics->add_option("--dec", dec_path, "decompressed events")->required();
  metrics->add_option("--peak", peak, "PSNR peak (default: reference extent)");
  metrics->add_option("--metric", metric, "e2e, e2d or both")->capture_default_str();

  auto* bdrate = app.add_subcommand("bdrate", "Bjontegaard delta rate between two rate,score curves");
  std::string curve_ref, curve_test;
  bdrate->add_option("reference", curve_ref, "reference curve CSV")->required();
  bdrate->add_option("test", curve_test, "test curve CSV")->required();

  auto* topk = app.add_subcommand("topk", "Top-k accuracy from a prediction file");
  std::string pred_path, truth_path, truth_dataset;
  std::vector<std::size_t> ks{1, 5};
  topk->add_option("--pred", pred_path, "predictions CSV")->required();
  topk->add_option("--truth", truth_path, "ground truth CSV source_id,label");
  topk->add_option("--dataset", truth_dataset, "dataset root; ids are <label>/<file>");
  topk->add_option("--k", ks, "k values")->delimiter(',')->capture_default_str();

  auto* tensor = app.add_subcommand("tensor", "export event spike tensors (.evt.tensor)");
  std::vector<std::string> tensor_inputs;
  std::size_t bins = kDefaultBins, height = kDefaultHeight, width = kDefaultWidth;
  tensor->add_option("inputs", tensor_inputs, "event files or dataset roots")->required();
  tensor->add_option("--bins", bins, "temporal bins")->capture_default_str();
  tensor->add_option("--height", height, "grid rows")->capture_default_str();
  tensor->add_option("--width", width, "grid columns")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kExitOk : kExitUsage;
  }

  auto metric_options = [&] {
    MetricOptions m;
    if (metric != "e2e" && metric != "e2d" && metric != "both") {
      throw Error(ErrorCode::kInvalidArgument, "--metric must be e2e, e2d or both");
    }
    m.e2e = metric != "e2d";
    m.e2d = metric != "e2e";
    m.peak = peak;
    return m;
  };
  auto out_dir = [&](const char* fallback) { return fs::path(g.out.empty() ? fallback : g.out); };

  try {
    const FormatParams fmt = format_of(g);

    if (*characterize) {
      const CharacterizeConfig cfg{g.tsf, char_k, char_bins};
      const auto sequences = load_inputs(char_inputs, fmt);
      std::vector<std::optional<SequenceStats>> slots(sequences.size());
      parallel_for(sequences.size(), g.jobs, [&](std::size_t i) { slots[i] = compute_sequence_stats(sequences[i], cfg); });
      std::vector<SequenceStats> stats;
      std::string csv = sequence_stats_csv_header(char_k) + "\n";
      for (auto& s : slots) {
        csv += sequence_stats_csv_row(*s, char_k) + "\n";
        stats.push_back(std::move(*s));
      }
      const fs::path dir = out_dir("characterize_out");
      fs::create_directories(dir);
      write_text_file(dir / "sequences.csv", csv);
      write_text_file(dir / "summary.json", dataset_summary_json(dataset_summary(stats)));
      std::cout << "wrote " << (dir / "sequences.csv").string() << " and " << (dir / "summary.json").string() << "\n";
      return kExitOk;
    }

    if (*e2p) {
      const EventSequence seq = load_events(e2p_input, fmt);
      const PolaritySplit split = event_to_pc(seq, ConversionConfig{g.tsf, DuplicateMethod::kNearestNeighbor});
      const fs::path dir = out_dir(".");
      fs::create_directories(dir);
      const std::string stem = stem_of(e2p_input);
      save_ply(dir / (stem + ".pos.ply"), split.pos);
      save_ply(dir / (stem + ".neg.ply"), split.neg);
      nlohmann::ordered_json j{{"tsf", g.tsf},
                               {"n_input_events", split.stats.n_input_events},
                               {"n_discarded_same_polarity", split.stats.n_discarded_same_polarity},
                               {"discarded_percent", split.stats.discarded_percent()},
                               {"n_cross_polarity_duplicates", split.stats.n_cross_polarity_duplicates},
                               {"n_output_points_pos", split.stats.n_output_points_pos},
                               {"n_output_points_neg", split.stats.n_output_points_neg}};
      write_text_file(dir / (stem + ".stats.json"), j.dump(2) + "\n");
      return kExitOk;
    }

    if (*p2e) {
      if (g.out.empty()) throw Error(ErrorCode::kInvalidArgument, "p2e needs --out <events file>");
      const ConversionConfig cfg{g.tsf, parse_duplicate_method(dup_method)};
      const EventSequence seq =
          pc_to_event(load_ply(p2e_pos, Polarity::kPos), load_ply(p2e_neg, Polarity::kNeg), cfg, fmt.units_per_second());
      save_events(g.out, seq);
      return kExitOk;
    }

    if (*enc) {
      const Polarity pol = parse_polarity(polarity);
      if (!external.empty()) {
        const fs::path dir = out_dir("external_out");
        const ExternalCodecResult r =
            run_external_codec(ExternalCodecCommand::parse(external), enc_input, dir, pol);
        std::cout << nlohmann::ordered_json{{"compressed_bytes", r.compressed_bytes},
                                            {"decoded_points", r.decoded.size()},
                                            {"workdir", dir.string()}}
                         .dump(2)
                  << "\n";
        return kExitOk;
      }
      if (g.out.empty()) throw Error(ErrorCode::kInvalidArgument, "encode needs --out <file.eoc>");
      OctreeConfig cfg{parse_octree_mode(mode), truncate, score_radius};
      const OctreeBitstream bs = encode(load_ply(enc_input, pol), cfg);
      const auto bytes = bs.serialize();
      write_file_bytes(g.out, bytes);
      std::cout << nlohmann::ordered_json{{"bytes", bytes.size()},
                                          {"depth", bs.header.depth},
                                          {"truncate_levels", bs.header.truncate_levels},
                                          {"input_points", bs.header.n_input_points},
                                          {"output_points", bs.header.n_output_nodes}}
                       .dump(2)
                << "\n";
      return kExitOk;
    }

    if (*dec) {
      if (g.out.empty()) throw Error(ErrorCode::kInvalidArgument, "decode needs --out <file.ply>");
      save_ply(g.out, decode(OctreeBitstream::parse(read_file_bytes(dec_input))));
      return kExitOk;
    }

    if (*run) {
      PipelineJob job;
      if (!run_config.empty()) {
        job = parse_job_json(read_text_file(run_config));
      } else {
        job.pipeline = parse_pipeline_kind(run_pipeline);
        job.tsf = g.tsf;
        job.dataset_root = run_dataset;
        job.duplicate_method = parse_duplicate_method(dup_method);
        job.metrics = metric_options();
        job.format = fmt;
        job.jobs = g.jobs;
        job.output_dir = out_dir("run_out");
        if (job.pipeline == PipelineKind::kDecompressed) {
          CodecSpec spec;
          if (!external.empty()) {
            spec.kind = CodecSpec::Kind::kExternal;
            spec.external = ExternalCodecCommand::parse(external);
            spec.name = "external";
          } else {
            spec.octree = OctreeConfig{parse_octree_mode(mode), truncate, score_radius};
          }
          job.codec = spec;
        }
        job.validate();
      }
      if (job.dataset_root.empty()) throw Error(ErrorCode::kInvalidArgument, "run needs --dataset or a config");
      if (job.pipeline == PipelineKind::kOriginal) {
        const CharacterizeConfig cfg{job.tsf, 20, 100};
        const OriginalReport rep = run_original(job, cfg, kDefaultBins);
        fs::create_directories(job.output_dir);
        std::string csv = sequence_stats_csv_header(cfg.k) + "\n";
        for (const auto& s : rep.stats) csv += sequence_stats_csv_row(s, cfg.k) + "\n";
        write_text_file(job.output_dir / "sequences.csv", csv);
        if (!rep.stats.empty()) {
          write_text_file(job.output_dir / "summary.json", dataset_summary_json(dataset_summary(rep.stats)));
        }
        if (!rep.failures.empty()) {
          write_text_file(job.output_dir / "failures.json", failures_json(rep.failures));
          return kExitFailure;
        }
        return kExitOk;
      }
      const SweepReport rep = job.pipeline == PipelineKind::kVoxelized ? run_voxelized(job) : run_decompressed(job);
      write_report(rep, job.output_dir);
      std::cout << "rows: " << rep.rows.size() << ", failures: " << rep.failures.size() << "\n";
      return rep.failures.empty() ? kExitOk : kExitFailure;
    }

    if (*sweep_cmd) {
      PipelineJob job;
      job.pipeline = PipelineKind::kDecompressed;
      job.dataset_root = sweep_dataset;
      job.duplicate_method = parse_duplicate_method(dup_method);
      job.metrics = metric_options();
      job.format = fmt;
      job.jobs = g.jobs;
      job.output_dir = out_dir("sweep_out");
      std::vector<CodecSpec> codecs;
      for (const int t : sweep_truncs) {
        CodecSpec spec;
        spec.octree = OctreeConfig{t == 0 ? OctreeMode::kLossless : OctreeMode::kLossy, t, score_radius};
        codecs.push_back(spec);
      }
      for (const std::string& e : sweep_externals) {
        const auto eq = e.find('=');
        if (eq == std::string::npos) throw Error(ErrorCode::kInvalidArgument, "--external expects name@point=<cmds>");
        CodecSpec spec;
        spec.kind = CodecSpec::Kind::kExternal;
        spec.name = e.substr(0, eq);
        spec.external = ExternalCodecCommand::parse(e.substr(eq + 1));
        codecs.push_back(spec);
      }
      if (codecs.empty()) throw Error(ErrorCode::kInvalidArgument, "sweep needs --truncations or --external");
      const SweepReport rep = sweep(job, sweep_tsfs, codecs);
      write_report(rep, job.output_dir);
      std::cout << "rows: " << rep.rows.size() << ", failures: " << rep.failures.size() << "\n";
      return rep.failures.empty() ? kExitOk : kExitFailure;
    }

    if (*metrics) {
      const MetricOptions m = metric_options();
      const EventSequence ref = load_events(ref_path, fmt);
      const EventSequence decd = load_events(dec_path, fmt);
      const MetricPoints a = to_metric_space(ref);
      const MetricPoints b = to_metric_space(decd);
      const double used_peak = m.peak ? *m.peak : default_peak(a);
      nlohmann::ordered_json j{{"reference", ref_path}, {"decoded", dec_path}, {"metric_tsf", kMetricTsf}, {"peak", used_peak}};
      if (m.e2e) {
        const PsnrResult r = psnr_e2e(a, b, used_peak);
        j["psnr_e2e"] = {{"db", json_db(r.psnr_db)}, {"mse_ref_to_dec", r.mse_ref_to_dec}, {"mse_dec_to_ref", r.mse_dec_to_ref}};
      }
      if (m.e2d) {
        const PsnrResult r = psnr_e2d(a, b, used_peak);
        j["psnr_e2d"] = {{"db", json_db(r.psnr_db)}, {"mse_ref_to_dec", r.mse_ref_to_dec}, {"mse_dec_to_ref", r.mse_dec_to_ref}};
      }
      emit(j.dump(2) + "\n", g.out);
      return kExitOk;
    }

    if (*bdrate) {
      const auto ref = read_curve_csv(read_text_file(curve_ref), curve_ref);
      const auto test = read_curve_csv(read_text_file(curve_test), curve_test);
      const nlohmann::ordered_json j{{"reference", curve_ref}, {"test", curve_test}, {"bd_rate_percent", bd_rate(ref, test)}};
      emit(j.dump(2) + "\n", g.out);
      return kExitOk;
    }

    if (*topk) {
      std::map<std::string, std::string> truth;
      if (!truth_path.empty()) {
        truth = parse_ground_truth(read_text_file(truth_path));
      } else if (!truth_dataset.empty()) {
        for (const DatasetEntry& e : walk_dataset(truth_dataset)) {
          truth[e.label + "/" + e.source.filename().string()] = e.label;
        }
      } else {
        throw Error(ErrorCode::kInvalidArgument, "topk needs --truth or --dataset");
      }
      const auto preds = parse_predictions(read_text_file(pred_path));
      nlohmann::ordered_json j{{"n_sequences", preds.size()}};
      for (const std::size_t k : ks) j["top" + std::to_string(k)] = top_k(preds, truth, k);
      emit(j.dump(2) + "\n", g.out);
      return kExitOk;
    }

    if (*tensor) {
      const fs::path dir = out_dir("tensors");
      fs::create_directories(dir);
      for (const EventSequence& seq : load_inputs(tensor_inputs, fmt)) {
        const fs::path src(seq.source_id.value_or("sequence"));
        fs::path target = dir;
        if (seq.label) target /= *seq.label;
        fs::create_directories(target);
        write_file_bytes(target / (src.stem().string() + ".evt.tensor"),
                         write_tensor(build_tensor(seq, bins, height, width)));
      }
      return kExitOk;
    }
  } catch (const Error& e) {
    std::cerr << "error (" << to_string(e.code()) << "): " << e.what() << "\n";
    return e.code() == ErrorCode::kInvalidArgument ? kExitUsage : kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}
