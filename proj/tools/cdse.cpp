#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cdse/data/manifest.hpp"
#include "cdse/data/synthetic.hpp"
#include "cdse/error.hpp"
#include "cdse/harness/config.hpp"
#include "cdse/harness/run.hpp"
#include "cdse/harness/train.hpp"
#include "cdse/metrics/asr.hpp"
#include "cdse/metrics/pesq.hpp"

namespace fs = std::filesystem;
using namespace cdse;

namespace {

enum Exit { kOk = 0, kInternal = 1, kConfigError = 2, kDataError = 3, kServiceError = 4 };

int exit_code(const Error& e) {
  switch (e.category()) {
    case ErrorCategory::kConfig: return kConfigError;
    case ErrorCategory::kData: return kDataError;
    case ErrorCategory::kExternalService: return kServiceError;
    case ErrorCategory::kUsage: return kInternal;
  }
  return kInternal;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p);
  require(static_cast<bool>(in), ErrorCode::kConfig, "cannot read " + p.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

struct MixArgs {
  fs::path config;
  fs::path out;
  std::optional<std::uint64_t> seed;
  bool no_cache = false;
};

int run_mix(const MixArgs& a) {
  auto cfg = a.config.empty() ? data::CorpusConfig{} : harness::parse_corpus_config(read_text(a.config));
  if (a.seed) cfg.seed = *a.seed;
  const auto manifest = data::generate_corpus(a.out, cfg);
  manifest.check_split_hygiene();
  if (!a.no_cache) data::write_mixed_cache(manifest);
  std::ofstream(a.out / "corpus.yaml") << harness::to_yaml(cfg);
  std::cout << "manifest " << (a.out / "manifest.jsonl").string() << ": "
            << manifest.indices(data::Split::kTrain).size() << " train, "
            << manifest.indices(data::Split::kTest).size() << " test entries\n";
  return kOk;
}

struct TrainArgs {
  fs::path config;
  fs::path out;
  fs::path manifest;
  std::optional<std::uint64_t> seed;
  std::optional<int> epochs;
};

int run_train(const TrainArgs& a) {
  auto cfg = harness::load_run_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  if (a.epochs) cfg.epochs = *a.epochs;
  if (!a.manifest.empty()) cfg.manifest = fs::absolute(a.manifest);
  require(!cfg.manifest.empty(), ErrorCode::kConfig, "no manifest: set data.manifest or pass --manifest");
  cfg.validate();
  std::cout << "training " << harness::to_string(cfg.framework) << " (seed " << cfg.seed << ") into "
            << a.out.string() << "\n";
  harness::train_run(cfg, a.out, [](const harness::EpochLog& e) {
    std::cout << "epoch " << e.epoch << ": " << e.steps << " steps, generator " << e.generator;
    if (e.discriminator) std::cout << ", discriminator " << *e.discriminator;
    std::cout << "\n" << std::flush;
  });
  return kOk;
}

int run_enhance(const fs::path& run) {
  const auto index = harness::enhance_run(run);
  std::cout << "enhanced " << index.size() << " tracks into " << harness::RunLayout{run}.enhanced().string() << "\n";
  return kOk;
}

struct EvaluateArgs {
  fs::path run;
  std::string asr_url;
  fs::path pesq;
  unsigned workers = 4;
};

int run_evaluate(const EvaluateArgs& a) {
  auto pesq_path = a.pesq;
  if (pesq_path.empty()) {
    if (const char* env = std::getenv("CDSE_PESQ")) pesq_path = env;
  }
  require(!pesq_path.empty(), ErrorCode::kMissingPesq, "no PESQ plug-in: pass --pesq or set CDSE_PESQ");
  const metrics::ExternalPesq pesq(pesq_path);

  harness::EvaluateOptions opts;
  opts.pesq = &pesq;
  opts.workers = a.workers;
  metrics::AsrConfig asr;
  if (!a.asr_url.empty()) asr.url = a.asr_url;
  if (!a.asr_url.empty() || std::getenv("CDSE_ASR_URL")) opts.asr = metrics::AsrConfig::from_env(asr);
  const auto rec = harness::evaluate_run(a.run, opts);
  for (const auto& row : rec.aggregate) {
    std::cout << rec.name() << " @ " << row.snr_db << " dB: SSNR " << row.mean.ssnr_db << ", STOI "
              << 100.0 * row.mean.stoi << "%, 1-WER " << 100.0 * row.mean.one_minus_wer << "% (" << row.tracks
              << " tracks)\n";
  }
  return kOk;
}

int run_report(const std::vector<fs::path>& runs, const fs::path& out) {
  std::vector<harness::RunRecord> records;
  for (const auto& r : runs) records.push_back(harness::load_run(r));
  const auto files = harness::write_report(records, out);
  std::cout << read_text(files.table_txt);
  std::cout << "wrote " << files.table_csv.string() << ", " << files.table_txt.string() << ", "
            << files.boxplot_csv.string() << "\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cross-domain speech enhancement experiments"};
  app.require_subcommand(1);

  MixArgs mix;
  auto* mix_cmd = app.add_subcommand("mix", "Generate the synthetic corpus, manifest and mixture cache");
  mix_cmd->add_option("--config", mix.config, "Corpus YAML")->check(CLI::ExistingFile);
  mix_cmd->add_option("--out", mix.out, "Corpus directory")->required();
  mix_cmd->add_option("--seed", mix.seed, "Corpus seed");
  mix_cmd->add_flag("--no-cache", mix.no_cache, "Skip writing mixed/");

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train one framework into a run directory");
  train_cmd->add_option("--config", train.config, "Run YAML")->required();
  train_cmd->add_option("--out", train.out, "Run directory")->required();
  train_cmd->add_option("--manifest", train.manifest, "Overrides data.manifest");
  train_cmd->add_option("--seed", train.seed, "Overrides seed");
  train_cmd->add_option("--epochs", train.epochs, "Overrides epochs");

  fs::path enhance_run_dir;
  auto* enhance_cmd = app.add_subcommand("enhance", "Enhance the test split with a run's latest checkpoint");
  enhance_cmd->add_option("--run", enhance_run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);

  EvaluateArgs evaluate;
  auto* evaluate_cmd = app.add_subcommand("evaluate", "Score a run's enhanced tracks");
  evaluate_cmd->add_option("--run", evaluate.run, "Run directory")->required()->check(CLI::ExistingDirectory);
  evaluate_cmd->add_option("--asr-url", evaluate.asr_url,
                           "ASR endpoint (default: CDSE_ASR_URL, else a built-in template recognizer)");
  evaluate_cmd->add_option("--pesq", evaluate.pesq, "PESQ plug-in (default: CDSE_PESQ)");
  evaluate_cmd->add_option("--workers", evaluate.workers, "Parallel scoring threads")->check(CLI::PositiveNumber);

  std::vector<fs::path> report_runs;
  fs::path report_out;
  auto* report_cmd = app.add_subcommand("report", "Comparison table and boxplot data for evaluated runs");
  report_cmd->add_option("runs", report_runs, "Run directories")->required()->check(CLI::ExistingDirectory);
  report_cmd->add_option("--out", report_out, "Report directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*mix_cmd) return run_mix(mix);
    if (*train_cmd) return run_train(train);
    if (*enhance_cmd) return run_enhance(enhance_run_dir);
    if (*evaluate_cmd) return run_evaluate(evaluate);
    if (*report_cmd) return run_report(report_runs, report_out);
  } catch (const Error& e) {
    std::cerr << "cdse: " << e.what() << "\n";
    return exit_code(e);
  } catch (const std::exception& e) {
    std::cerr << "cdse: " << e.what() << "\n";
    return kInternal;
  }
  return kInternal;
}
