#include "cdse/harness/run.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>
#include <thread>

#include "cdse/data/manifest.hpp"
#include "cdse/error.hpp"
#include "cdse/harness/pipeline.hpp"
#include "cdse/signal/wav_io.hpp"

namespace cdse::harness {

namespace {

using nlohmann::json;

std::string snr_label(double snr) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", snr);
  return buf;
}

bool snr_selected(const RunConfig& cfg, double snr) {
  return std::any_of(cfg.snr_list.begin(), cfg.snr_list.end(), [&](double s) { return std::abs(s - snr) < 1e-9; });
}

template <typename T>
std::vector<T> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot read " + path.string());
  std::vector<T> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(json::parse(line).get<T>());
    } catch (const json::exception& e) {
      fail(ErrorCode::kFormat, path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

template <typename T>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& rows) {
  std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  for (const auto& r : rows) out << json(r).dump() << "\n";
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

// Runs fn(i) for i in [0, n) on up to `workers` threads; rethrows the first failure.
template <typename Fn>
void parallel_for(std::size_t n, unsigned workers, Fn fn) {
  workers = std::max(1u, std::min<unsigned>(workers, static_cast<unsigned>(n)));
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex mu;
  auto work = [&] {
    for (auto i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!error) error = std::current_exception();
        next = n;
      }
    }
  };
  std::vector<std::thread> threads;
  for (unsigned t = 1; t < workers; ++t) threads.emplace_back(work);
  work();
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
}

bool close(double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); }

bool same_report(const metrics::MetricsReport& a, const metrics::MetricsReport& b) {
  if (a.pesq.has_value() != b.pesq.has_value()) return false;
  if (a.pesq && !close(*a.pesq, *b.pesq)) return false;
  return close(a.csig, b.csig) && close(a.cbak, b.cbak) && close(a.covl, b.covl) && close(a.ssnr_db, b.ssnr_db) &&
         close(a.stoi, b.stoi) && close(a.one_minus_wer, b.one_minus_wer);
}

}  // namespace

std::filesystem::path RunLayout::epoch_checkpoint(const std::string& role, int epoch) const {
  return checkpoints() / (role + "_e" + std::to_string(epoch) + ".ckpt");
}

void to_json(json& j, const EnhancedTrack& t) { j = {{"entry", t.entry}, {"snr_db", t.snr_db}, {"file", t.file}}; }

void from_json(const json& j, EnhancedTrack& t) {
  t.entry = j.at("entry").get<std::size_t>();
  t.snr_db = j.at("snr_db").get<double>();
  t.file = j.at("file").get<std::string>();
}

void to_json(json& j, const TrackRecord& t) {
  j = {{"entry", t.entry},         {"snr_db", t.snr_db},         {"sentence_id", t.sentence_id},
       {"reference", t.reference}, {"hypothesis", t.hypothesis}, {"metrics", t.report}};
}

void from_json(const json& j, TrackRecord& t) {
  t.entry = j.at("entry").get<std::size_t>();
  t.snr_db = j.at("snr_db").get<double>();
  t.sentence_id = j.at("sentence_id").get<std::string>();
  t.reference = j.at("reference").get<std::string>();
  t.hypothesis = j.at("hypothesis").get<std::string>();
  t.report = j.at("metrics").get<metrics::MetricsReport>();
}

void to_json(json& j, const AggregateRow& r) {
  j = {{"run", r.run}, {"framework", to_string(r.framework)}, {"snr_db", r.snr_db}, {"tracks", r.tracks},
       {"metrics", r.mean}};
}

void from_json(const json& j, AggregateRow& r) {
  r.run = j.at("run").get<std::string>();
  r.framework = framework_from_string(j.at("framework").get<std::string>());
  r.snr_db = j.at("snr_db").get<double>();
  r.tracks = j.at("tracks").get<std::size_t>();
  r.mean = j.at("metrics").get<metrics::MetricsReport>();
}

std::vector<std::size_t> test_entries(const RunConfig& cfg, const data::Manifest& manifest) {
  std::vector<std::size_t> out;
  for (auto i : manifest.indices(data::Split::kTest)) {
    if (snr_selected(cfg, manifest.entries[i].snr_db)) out.push_back(i);
  }
  return out;
}

std::vector<EnhancedTrack> enhance_run(const std::filesystem::path& run_dir, unsigned workers) {
  const RunLayout layout{run_dir};
  const auto cfg = load_run_config(layout.config());
  const auto enhancer = load_enhancer(cfg, layout.generator_checkpoint());
  const auto manifest = data::read_manifest(cfg.manifest);
  const auto entries = test_entries(cfg, manifest);
  require(!entries.empty(), ErrorCode::kEmptyDataset, "no test entries at the requested SNRs");
  const auto pairs = data::load_pairs(manifest, entries, workers);

  std::vector<EnhancedTrack> index;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& p = pairs[k];
    EnhancedTrack t{entries[k], p.snr_db, {}};
    char name[32];
    std::snprintf(name, sizeof name, "%05zu.wav", entries[k]);
    const auto rel = std::filesystem::path("enhanced") / ("snr_" + snr_label(p.snr_db)) / name;
    t.file = rel.generic_string();
    std::filesystem::create_directories((run_dir / rel).parent_path());
    const auto out = enhancer(p.noisy);
    require(out.size() == p.noisy.size(), ErrorCode::kAlignment, "enhancement changed the length of entry " +
                                                                      std::to_string(entries[k]));
    signal::write_wav(run_dir / rel, out);
    index.push_back(std::move(t));
  }
  write_jsonl(layout.enhanced_index(), index);
  return index;
}

std::vector<metrics::MetricsReport> evaluate_tracks(const std::vector<signal::Waveform>& clean,
                                                    const std::vector<signal::Waveform>& enhanced,
                                                    const std::vector<std::string>& references,
                                                    const std::vector<std::string>& hypotheses,
                                                    const metrics::PesqScorer* pesq, unsigned workers) {
  const auto n = clean.size();
  require(enhanced.size() == n && references.size() == n && hypotheses.size() == n, ErrorCode::kAlignment,
          "clean, enhanced and transcript lists differ in length");
  for (std::size_t i = 0; i < n; ++i) {
    require(clean[i].size() == enhanced[i].size(), ErrorCode::kAlignment,
            "track " + std::to_string(i) + ": enhanced length " + std::to_string(enhanced[i].size()) +
                " differs from clean length " + std::to_string(clean[i].size()));
  }
  std::vector<metrics::MetricsReport> out(n);
  parallel_for(n, workers, [&](std::size_t i) {
    out[i] = metrics::score_track(clean[i], enhanced[i], references[i], hypotheses[i], pesq);
  });
  return out;
}

std::vector<AggregateRow> aggregate_rows(const std::string& run, Framework framework,
                                         const std::vector<TrackRecord>& tracks) {
  std::map<double, std::vector<metrics::MetricsReport>> by_snr;
  for (const auto& t : tracks) by_snr[t.snr_db].push_back(t.report);
  std::vector<AggregateRow> rows;
  for (const auto& [snr, reports] : by_snr) {
    rows.push_back({run, framework, snr, reports.size(), metrics::aggregate(reports)});
  }
  return rows;
}

RunRecord evaluate_run(const std::filesystem::path& run_dir, const EvaluateOptions& opts) {
  RunRecord rec;
  rec.layout = RunLayout{run_dir};
  rec.config = load_run_config(rec.layout.config());
  const auto manifest = data::read_manifest(rec.config.manifest);
  const auto index = read_jsonl<EnhancedTrack>(rec.layout.enhanced_index());
  require(!index.empty(), ErrorCode::kEmptyDataset, "no enhanced tracks in " + rec.layout.enhanced_index().string());

  std::vector<std::size_t> entries;
  std::vector<signal::Waveform> enhanced;
  std::vector<std::string> references;
  for (const auto& t : index) {
    require(t.entry < manifest.entries.size(), ErrorCode::kAlignment,
            "enhanced entry " + std::to_string(t.entry) + " is not in the manifest");
    entries.push_back(t.entry);
    enhanced.push_back(signal::read_wav(run_dir / t.file));
    references.push_back(manifest.entries[t.entry].transcript);
  }
  const auto pairs = data::load_pairs(manifest, entries, opts.workers);
  std::vector<signal::Waveform> clean;
  for (const auto& p : pairs) clean.push_back(p.clean);

  std::unique_ptr<metrics::AsrStubServer> stub;
  metrics::AsrConfig asr_cfg;
  if (opts.asr) {
    asr_cfg = *opts.asr;
  } else {
    stub = std::make_unique<metrics::AsrStubServer>(metrics::AsrStubServer::Mode::kTemplates);
    stub->start();
    asr_cfg.url = stub->url();
  }
  const auto hypotheses = metrics::AsrClient(asr_cfg).transcribe_batch(enhanced);
  if (stub) stub->stop();

  const auto reports = evaluate_tracks(clean, enhanced, references, hypotheses, opts.pesq, opts.workers);
  for (std::size_t k = 0; k < index.size(); ++k) {
    rec.tracks.push_back({index[k].entry, index[k].snr_db, manifest.entries[index[k].entry].sentence_id,
                          references[k], hypotheses[k], reports[k]});
  }
  rec.aggregate = aggregate_rows(rec.name(), rec.config.framework, rec.tracks);
  write_jsonl(rec.layout.track_metrics(), rec.tracks);
  write_text(rec.layout.aggregate(), json(rec.aggregate).dump(2) + "\n");
  if (std::filesystem::exists(rec.layout.loss_log())) rec.loss_log = read_jsonl<EpochLog>(rec.layout.loss_log());
  return rec;
}

RunRecord load_run(const std::filesystem::path& run_dir) {
  RunRecord rec;
  rec.layout = RunLayout{run_dir};
  rec.config = load_run_config(rec.layout.config());
  if (std::filesystem::exists(rec.layout.loss_log())) rec.loss_log = read_jsonl<EpochLog>(rec.layout.loss_log());
  rec.tracks = read_jsonl<TrackRecord>(rec.layout.track_metrics());
  std::ifstream in(rec.layout.aggregate());
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot read " + rec.layout.aggregate().string());
  std::vector<AggregateRow> stored;
  try {
    stored = json::parse(in).get<std::vector<AggregateRow>>();
  } catch (const json::exception& e) {
    fail(ErrorCode::kFormat, rec.layout.aggregate().string() + ": " + e.what());
  }
  rec.aggregate = aggregate_rows(rec.name(), rec.config.framework, rec.tracks);
  bool same = stored.size() == rec.aggregate.size();
  for (std::size_t i = 0; same && i < stored.size(); ++i) {
    same = stored[i].framework == rec.aggregate[i].framework && close(stored[i].snr_db, rec.aggregate[i].snr_db) &&
           stored[i].tracks == rec.aggregate[i].tracks && same_report(stored[i].mean, rec.aggregate[i].mean);
  }
  require(same, ErrorCode::kFormat,
          rec.layout.aggregate().string() + " does not match the per-track metrics in " +
              rec.layout.track_metrics().string());
  return rec;
}

ReportFiles write_report(const std::vector<RunRecord>& runs, const std::filesystem::path& out_dir) {
  require(!runs.empty(), ErrorCode::kConfig, "report needs at least one run");
  std::filesystem::create_directories(out_dir);
  ReportFiles files{out_dir / "table.csv", out_dir / "table.txt", out_dir / "boxplot.csv"};

  const std::vector<std::string> header{"run", "framework", "snr_db", "tracks", "PESQ", "CSIG",
                                        "CBAK", "COVL", "SSNR", "STOI%", "1-WER%"};
  std::vector<std::vector<std::string>> rows;
  auto num = [](double v, int digits) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.*f", digits, v);
    return std::string(buf);
  };
  for (const auto& run : runs) {
    for (const auto& r : run.aggregate) {
      const auto& m = r.mean;
      rows.push_back({run.name(), std::string(to_string(r.framework)), snr_label(r.snr_db), std::to_string(r.tracks),
                      m.pesq ? num(*m.pesq, 3) : "NA", num(m.csig, 3), num(m.cbak, 3), num(m.covl, 3),
                      num(m.ssnr_db, 3), num(100.0 * m.stoi, 2), num(100.0 * m.one_minus_wer, 2)});
    }
  }

  std::ostringstream csv;
  for (std::size_t c = 0; c < header.size(); ++c) csv << (c ? "," : "") << header[c];
  csv << "\n";
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) csv << (c ? "," : "") << row[c];
    csv << "\n";
  }
  write_text(files.table_csv, csv.str());

  std::vector<std::size_t> width(header.size());
  for (std::size_t c = 0; c < header.size(); ++c) {
    width[c] = header[c].size();
    for (const auto& row : rows) width[c] = std::max(width[c], row[c].size());
  }
  std::ostringstream txt;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto pad = std::string(width[c] - cells[c].size(), ' ');
      txt << (c ? "  " : "") << (c < 2 ? cells[c] + pad : pad + cells[c]);
    }
    txt << "\n";
  };
  line(header);
  std::size_t total = 0;
  for (auto w : width) total += w;
  txt << std::string(total + 2 * (width.size() - 1), '-') << "\n";
  for (const auto& row : rows) line(row);
  write_text(files.table_txt, txt.str());

  std::ostringstream box;
  box << "run,framework,snr_db,entry,sentence_id,SSNR,STOI%,1-WER%\n";
  for (const auto& run : runs) {
    for (const auto& t : run.tracks) {
      box << run.name() << "," << to_string(run.config.framework) << "," << snr_label(t.snr_db) << "," << t.entry
          << "," << t.sentence_id << "," << num(t.report.ssnr_db, 4) << "," << num(100.0 * t.report.stoi, 3) << ","
          << num(100.0 * t.report.one_minus_wer, 3) << "\n";
    }
  }
  write_text(files.boxplot_csv, box.str());
  return files;
}

}  // namespace cdse::harness
