#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdse/data/manifest.hpp"
#include "cdse/harness/config.hpp"
#include "cdse/harness/train.hpp"
#include "cdse/metrics/asr.hpp"
#include "cdse/metrics/pesq.hpp"
#include "cdse/metrics/report.hpp"
#include "cdse/signal/waveform.hpp"

namespace cdse::harness {

// Everything a run persists lives under one directory.
struct RunLayout {
  std::filesystem::path dir;

  std::filesystem::path config() const { return dir / "config.yaml"; }
  std::filesystem::path loss_log() const { return dir / "loss_log.jsonl"; }
  std::filesystem::path calibration() const { return dir / "calibration.json"; }
  std::filesystem::path checkpoints() const { return dir / "checkpoints"; }
  std::filesystem::path generator_checkpoint() const { return checkpoints() / "generator.ckpt"; }
  std::filesystem::path discriminator_checkpoint() const { return checkpoints() / "discriminator.ckpt"; }
  std::filesystem::path epoch_checkpoint(const std::string& role, int epoch) const;
  std::filesystem::path enhanced() const { return dir / "enhanced"; }
  std::filesystem::path enhanced_index() const { return enhanced() / "index.jsonl"; }
  std::filesystem::path track_metrics() const { return dir / "metrics" / "tracks.jsonl"; }
  std::filesystem::path aggregate() const { return dir / "metrics" / "aggregate.json"; }
};

struct EnhancedTrack {
  std::size_t entry = 0;  // manifest entry index
  double snr_db = 0.0;
  std::string file;       // relative to the run directory
};

struct TrackRecord {
  std::size_t entry = 0;
  double snr_db = 0.0;
  std::string sentence_id;
  std::string reference;
  std::string hypothesis;
  metrics::MetricsReport report;
};

struct AggregateRow {
  std::string run;
  Framework framework = Framework::kWiener;
  double snr_db = 0.0;
  std::size_t tracks = 0;
  metrics::MetricsReport mean;
};

void to_json(nlohmann::json& j, const EnhancedTrack& t);
void from_json(const nlohmann::json& j, EnhancedTrack& t);
void to_json(nlohmann::json& j, const TrackRecord& t);
void from_json(const nlohmann::json& j, TrackRecord& t);
void to_json(nlohmann::json& j, const AggregateRow& r);
void from_json(const nlohmann::json& j, AggregateRow& r);

struct RunRecord {
  RunLayout layout;
  RunConfig config;
  std::vector<EpochLog> loss_log;
  std::vector<TrackRecord> tracks;
  std::vector<AggregateRow> aggregate;

  std::string name() const { return layout.dir.filename().string(); }
};

// Test-split entries of the run's manifest at the run's SNRs, in manifest order.
std::vector<std::size_t> test_entries(const RunConfig& cfg, const data::Manifest& manifest);

// Enhances every test entry with the run's latest checkpoint (or the Wiener
// filter) and writes enhanced/<snr>/<entry>.wav plus enhanced/index.jsonl.
std::vector<EnhancedTrack> enhance_run(const std::filesystem::path& run_dir, unsigned workers = 4);

// Per-track scores; kAlignment when the lists or track lengths disagree.
std::vector<metrics::MetricsReport> evaluate_tracks(const std::vector<signal::Waveform>& clean,
                                                    const std::vector<signal::Waveform>& enhanced,
                                                    const std::vector<std::string>& references,
                                                    const std::vector<std::string>& hypotheses,
                                                    const metrics::PesqScorer* pesq, unsigned workers = 4);

struct EvaluateOptions {
  // Unset: an in-process template stub server answers the ASR requests.
  std::optional<metrics::AsrConfig> asr;
  const metrics::PesqScorer* pesq = nullptr;
  unsigned workers = 4;
};

// Scores the enhanced tracks of a run and writes metrics/tracks.jsonl and
// metrics/aggregate.json.
RunRecord evaluate_run(const std::filesystem::path& run_dir, const EvaluateOptions& opts);

// One row per SNR, means over that SNR's tracks.
std::vector<AggregateRow> aggregate_rows(const std::string& run, Framework framework,
                                         const std::vector<TrackRecord>& tracks);

// Reads a run directory; kFormat when the stored aggregate does not match
// the per-track records.
RunRecord load_run(const std::filesystem::path& run_dir);

struct ReportFiles {
  std::filesystem::path table_csv;
  std::filesystem::path table_txt;
  std::filesystem::path boxplot_csv;
};

// Comparison table (PESQ, CSIG, CBAK, COVL, SSNR, STOI %, 1-WER %) with one
// row per run and SNR, and per-track SSNR / 1-WER values for boxplots.
ReportFiles write_report(const std::vector<RunRecord>& runs, const std::filesystem::path& out_dir);

}  // namespace cdse::harness
