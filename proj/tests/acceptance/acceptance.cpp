// One PASS/FAIL line per acceptance criterion. `acceptance --criterion N`
// runs a single criterion; without arguments all ten run in order.

#include <CLI11.hpp>

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdse/data/manifest.hpp"
#include "cdse/data/mixing.hpp"
#include "cdse/data/synthetic.hpp"
#include "cdse/error.hpp"
#include "cdse/harness/config.hpp"
#include "cdse/harness/pipeline.hpp"
#include "cdse/harness/run.hpp"
#include "cdse/harness/train.hpp"
#include "cdse/losses/losses.hpp"
#include "cdse/metrics/pesq.hpp"
#include "cdse/metrics/quality.hpp"
#include "cdse/metrics/stoi.hpp"
#include "cdse/metrics/wer.hpp"
#include "cdse/signal/compression.hpp"
#include "cdse/signal/stft.hpp"
#include "cdse/signal/wav_io.hpp"
#include "test_support.hpp"

namespace fs = std::filesystem;
using namespace cdse;
using losses::LossConfig;
using losses::TermKind;
using signal::Waveform;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 3) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

fs::path scratch(const std::string& name) {
  auto p = fs::temp_directory_path() / ("cdse_acceptance_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

Waveform plus(const Waveform& a, const Waveform& b, double gb = 1.0) {
  auto s = a.data();
  for (std::size_t i = 0; i < s.size(); ++i) s[i] += gb * b.data()[i];
  return Waveform(std::move(s));
}

// ------------------------------------------------------------------ 1
Outcome round_trip() {
  const auto t0 = Clock::now();
  std::vector<std::string> failed;
  double worst = 0.0;
  const int count = 20;
  for (int i = 0; i < count; ++i) {
    const double sec = 0.5 + 9.5 * i / (count - 1);
    const auto n = static_cast<std::int64_t>(std::llround(sec * signal::kSampleRate));
    const auto w = testing::random_waveform(n, 100 + static_cast<std::uint64_t>(i), 0.3);
    const auto plan = signal::plan_stft(n);
    const auto back = signal::istft(signal::stft(w, plan));
    double err = 0.0, ref = 0.0;
    for (std::int64_t k = 0; k < n; ++k) {
      err += std::pow(back.data()[k] - w.data()[k], 2);
      ref += std::pow(w.data()[k], 2);
    }
    const double rel = std::sqrt(err / ref);
    worst = std::max(worst, rel);
    if (!(rel < 1e-6)) failed.push_back(fmt(sec, 4) + " s (hop " + std::to_string(plan.hop) + ", rel " + fmt(rel) + ")");
  }
  const double t = seconds_since(t0);
  std::string detail = std::to_string(count - static_cast<int>(failed.size())) + "/" + std::to_string(count) +
                       " durations under 1e-6 in " + fmt(t) + " s";
  if (!failed.empty()) {
    detail += "; failing:";
    for (const auto& f : failed) detail += " " + f;
  }
  return {failed.empty() && t < 30.0, detail};
}

// ------------------------------------------------------------------ 2
Outcome embedding_shape() {
  const auto t0 = Clock::now();
  int bad = 0;
  const int count = 500;
  for (int i = 0; i < count; ++i) {
    const double sec = 0.5 + 9.5 * i / (count - 1);
    const auto n = static_cast<std::int64_t>(std::llround(sec * signal::kSampleRate));
    const auto plan = signal::plan_stft(n);
    const auto tf = signal::stft(testing::random_waveform(n, static_cast<std::uint64_t>(i), 0.2), plan);
    const bool ok = plan.n_frames == 256 && plan.n_bins == 256 &&
                    tf.magnitude.sizes() == torch::IntArrayRef({256, 256}) &&
                    tf.phase.sizes() == torch::IntArrayRef({256, 256});
    bad += ok ? 0 : 1;
  }
  const double t = seconds_since(t0);
  return {bad == 0 && t < 10.0, std::to_string(count - bad) + "/" + std::to_string(count) + " durations gave 256x256 in " +
                                    fmt(t) + " s"};
}

// ------------------------------------------------------------------ 3
struct TfSetup {
  losses::TfTargets targets;
  models::Model discriminator;
};

TfSetup tf_setup(std::int64_t n, std::uint64_t seed) {
  const signal::MagnitudeCompressor comp;
  TfSetup s;
  const auto clean = signal::to_tensor(testing::random_waveform(n, seed, 0.2));
  const auto noisy = clean + signal::to_tensor(testing::random_waveform(n, seed + 1, 0.2));
  const auto plan = signal::plan_stft(n);
  const auto c = signal::stft(clean, plan);
  const auto y = signal::stft(noisy, plan);
  s.targets.clean_magnitude = comp.compress(c.magnitude).unsqueeze(0);
  s.targets.noisy_magnitude = comp.compress(y.magnitude).unsqueeze(0);
  s.targets.noisy_phase = y.phase.unsqueeze(0);
  s.targets.plans = {plan};
  s.targets.clean_time = {clean};
  s.discriminator = models::build_model(models::ModelSpec::disc2d(2, 4), seed);
  s.discriminator.net->to(torch::kFloat64);
  return s;
}

Outcome gradients() {
  const auto t0 = Clock::now();
  torch::manual_seed(3);
  std::vector<std::pair<std::string, double>> errors;
  auto check = [&](const std::string& name, const std::function<torch::Tensor(const torch::Tensor&)>& fn,
                   const torch::Tensor& point, std::int64_t size, double step = 1e-6) {
    const auto r = testing::check_gradient(fn, point, testing::random_indices(size, 10, errors.size() + 1), step);
    errors.emplace_back(name, r.max_relative_error);
  };

  const auto x = torch::randn({1, 8000}, torch::kFloat64) * 0.2;
  check("l1_time", [&](const torch::Tensor& xh) { return losses::l1_time(x, xh); },
        torch::randn({1, 8000}, torch::kFloat64) * 0.2, 8000);

  const auto m = torch::rand({256, 256}, torch::kFloat64);
  check("l1_tf", [&](const torch::Tensor& mh) { return losses::l1_tf(m, mh); }, torch::rand({256, 256}, torch::kFloat64),
        256 * 256);

  auto s = tf_setup(10000, 5);
  const auto lambdas = LossConfig::cd_aegan().lambdas(2);
  check("feature_loss",
        [&](const torch::Tensor& mh) {
          return losses::feature_loss(s.targets.clean_magnitude, mh, s.targets.noisy_magnitude, s.discriminator,
                                      lambdas);
        },
        torch::rand({1, 256, 256}, torch::kFloat64) * 0.5 + 0.1, 256 * 256);

  auto cdw = LossConfig::cd_wavenet();
  cdw.term(TermKind::kL1Tf).weight = 2.5;
  check("compose_cd_wavenet", [&](const torch::Tensor& xh) { return losses::compose_cd_wavenet(x, xh, cdw).total; },
        torch::randn({1, 8000}, torch::kFloat64) * 0.2, 8000);

  // Some pixels carry gradients near 1e-8 through the ISTFT; a 1e-5 step
  // keeps the quotient's round-off below that.
  check("compose_cd_aegan",
        [&](const torch::Tensor& mh) {
          return losses::compose_cd_aegan(s.targets, mh, LossConfig::cd_aegan(), s.discriminator).total;
        },
        torch::rand({1, 256, 256}, torch::kFloat64) * 0.5 + 0.1, 256 * 256, 1e-5);

  const double t = seconds_since(t0);
  bool ok = t < 120.0;
  std::string detail;
  for (const auto& [name, e] : errors) {
    ok = ok && e < 1e-4;
    detail += name + " " + fmt(e, 2) + ", ";
  }
  return {ok, "max relative error: " + detail + "in " + fmt(t) + " s"};
}

// ------------------------------------------------------------------ 4
Outcome reductions() {
  torch::NoGradGuard no_grad;
  torch::manual_seed(4);
  std::mt19937_64 rng(4);
  auto cd_wavenet = LossConfig::cd_wavenet();
  cd_wavenet.term(TermKind::kL1Tf).weight = 0.0;
  auto cd_aegan = LossConfig::cd_aegan();
  cd_aegan.term(TermKind::kL1Time).weight = 0.0;
  const auto aegan = LossConfig::aegan();
  const auto wavenet = LossConfig::wavenet();

  double worst_time = 0.0, worst_tf = 0.0;
  auto rel = [](double a, double b) { return std::abs(a - b) / std::max(std::abs(b), 1e-300); };
  for (int i = 0; i < 100; ++i) {
    const auto n = std::uniform_int_distribution<std::int64_t>(8000, 24000)(rng);
    const auto x = torch::randn({1, n}, torch::kFloat64) * 0.2;
    const auto xh = torch::randn({1, n}, torch::kFloat64) * 0.2;
    const double a = losses::compose_cd_wavenet(x, xh, cd_wavenet).total_value();
    const double b = losses::compose_time(wavenet, losses::TimeTargets{x, x, {}}, xh).total_value();
    worst_time = std::max(worst_time, rel(a, b));
  }
  auto s = tf_setup(12000, 9);
  for (int i = 0; i < 100; ++i) {
    const auto mh = torch::rand({1, 256, 256}, torch::kFloat64);
    const double a = losses::compose_cd_aegan(s.targets, mh, cd_aegan, s.discriminator).total_value();
    const double b = losses::compose_tf(aegan, s.targets, mh, &s.discriminator).total_value();
    worst_tf = std::max(worst_tf, rel(a, b));
  }
  return {worst_time <= 1e-12 && worst_tf <= 1e-12,
          "worst relative gap: cd_wavenet(w_f=0) vs wavenet " + fmt(worst_time, 2) + ", cd_aegan(w_t=0) vs aegan " +
              fmt(worst_tf, 2) + " over 100 inputs each"};
}

// ------------------------------------------------------------------ 5
Outcome mixing() {
  std::mt19937_64 rng(5);
  double worst = 0.0;
  const auto& vocab = data::vocabulary();
  for (int i = 0; i < 1000; ++i) {
    const double target = i % 2 ? 5.0 : 0.0;
    const auto seed = rng();
    Waveform clean;
    if (i % 4 < 2) {
      std::vector<std::string> words{vocab[seed % vocab.size()], vocab[(seed / 7) % vocab.size()]};
      clean = data::synthesize_speech(words, data::random_voice(seed), seed);
    } else {
      clean = testing::random_waveform(std::uniform_int_distribution<std::int64_t>(8000, 40000)(rng), seed, 0.2);
    }
    const auto noise = data::synthesize_noise(static_cast<data::NoiseType>(i % 4), clean.size() + 16000, seed + 1);
    const auto pair = data::mix_at_snr(clean, noise, target, seed + 2);
    worst = std::max(worst, std::abs(data::measured_snr_db(pair.clean, pair.noisy) - target));
  }
  return {worst < 0.01, "max |measured - target| = " + fmt(worst, 3) + " dB over 1000 mixes"};
}

// ------------------------------------------------------------------ 6
double ssnr_oracle(const Waveform& clean, const Waveform& est) {
  const auto& c = clean.data();
  const auto& e = est.data();
  std::vector<double> energy, noise;
  for (std::size_t s = 0; s + 480 <= c.size(); s += 240) {
    double pe = 0.0, pn = 0.0;
    for (std::size_t i = s; i < s + 480; ++i) {
      pe += c[i] * c[i];
      pn += (c[i] - e[i]) * (c[i] - e[i]);
    }
    energy.push_back(pe);
    noise.push_back(pn);
  }
  const double top = *std::max_element(energy.begin(), energy.end());
  double sum = 0.0;
  int kept = 0;
  for (std::size_t k = 0; k < energy.size(); ++k) {
    if (energy[k] <= 0.0 || energy[k] < top * 1e-4) continue;
    const double db = noise[k] == 0.0 ? 35.0 : std::clamp(10.0 * std::log10(energy[k] / noise[k]), -10.0, 35.0);
    sum += db;
    ++kept;
  }
  return sum / kept;
}

std::size_t brute_edit(const std::vector<std::string>& a, std::size_t i, const std::vector<std::string>& b,
                       std::size_t j) {
  if (i == a.size()) return b.size() - j;
  if (j == b.size()) return a.size() - i;
  const auto sub = brute_edit(a, i + 1, b, j + 1) + (a[i] == b[j] ? 0 : 1);
  return std::min({sub, brute_edit(a, i + 1, b, j) + 1, brute_edit(a, i, b, j + 1) + 1});
}

fs::path data_dir() {
  if (const char* d = std::getenv("CDSE_TEST_DATA")) return d;
  return CDSE_SOURCE_TEST_DATA;
}

Outcome metric_oracles() {
  std::vector<std::string> notes;
  bool ok = true;

  std::mt19937_64 rng(6);
  double worst_ssnr = 0.0;
  for (int t = 0; t < 50; ++t) {
    const auto seed = rng();
    const auto clean = data::synthesize_speech({"red", "green", "blue"}, data::random_voice(seed), seed);
    const double snr = std::uniform_real_distribution<double>(-15.0, 40.0)(rng);
    const auto noise = testing::random_waveform(clean.size(), rng(), 0.1);
    const double g = std::sqrt(clean.mean_power() / (noise.mean_power() * std::pow(10.0, snr / 10.0)));
    const auto est = plus(clean, noise, g);
    worst_ssnr = std::max(worst_ssnr, std::abs(metrics::ssnr(clean, est) - ssnr_oracle(clean, est)));
  }
  ok = ok && worst_ssnr < 1e-9;
  notes.push_back("SSNR oracle gap " + fmt(worst_ssnr, 2));

  const std::vector<std::string> vocab{"red", "green", "blue"};
  std::vector<std::vector<std::string>> seqs{{}};
  for (std::size_t start = 0; seqs.back().size() < 5;) {
    const auto end = seqs.size();
    for (auto k = start; k < end; ++k) {
      for (const auto& w : vocab) {
        auto s = seqs[k];
        s.push_back(w);
        seqs.push_back(std::move(s));
      }
    }
    start = end;
  }
  auto join = [](const std::vector<std::string>& s) {
    std::string out;
    for (const auto& w : s) out += (out.empty() ? "" : " ") + w;
    return out;
  };
  std::size_t pairs = 0, wer_bad = 0;
  for (const auto& ref : seqs) {
    if (ref.empty()) continue;
    for (const auto& hyp : seqs) {
      const double want = static_cast<double>(brute_edit(ref, 0, hyp, 0)) / static_cast<double>(ref.size());
      if (metrics::wer(join(ref), join(hyp)) != want) ++wer_bad;
      ++pairs;
    }
  }
  ok = ok && wer_bad == 0 && seqs.size() == 364;
  notes.push_back("WER " + std::to_string(pairs - wer_bad) + "/" + std::to_string(pairs) + " pairs exact");

  std::ifstream in(data_dir() / "metrics" / "reference.json");
  double worst_stoi = 1.0;
  std::size_t fixtures = 0;
  if (in) {
    worst_stoi = 0.0;
    const auto reference = nlohmann::json::parse(in);
    for (const auto& r : reference.at("stoi")) {
      const auto c = signal::read_wav(data_dir() / "metrics" / r.at("clean").get<std::string>());
      const auto e = signal::read_wav(data_dir() / "metrics" / r.at("estimate").get<std::string>());
      worst_stoi = std::max(worst_stoi, std::abs(metrics::stoi(c, e) - r.at("stoi").get<double>()));
      ++fixtures;
    }
  }
  ok = ok && fixtures == 10 && worst_stoi < 0.01;
  notes.push_back("STOI reference gap " + fmt(worst_stoi, 2) + " on " + std::to_string(fixtures) + " fixtures");

  bool monotone = true;
  for (std::uint64_t seed : {61u, 62u, 63u}) {
    const auto clean = data::synthesize_speech({"green", "white", "black"}, data::random_voice(seed), seed);
    const auto noise = data::synthesize_noise(data::NoiseType::kWhite, clean.size() + 16000, seed + 1);
    double prev = -1.0;
    for (double snr : {-5.0, 0.0, 5.0, 10.0}) {
      const auto pair = data::mix_at_snr(clean, noise, snr, seed + 2);
      const double v = metrics::stoi(pair.clean, pair.noisy);
      monotone = monotone && v >= prev;
      prev = v;
    }
  }
  ok = ok && monotone;
  notes.push_back(std::string("STOI ") + (monotone ? "nondecreasing" : "NOT nondecreasing") + " over -5/0/5/10 dB");

  std::string detail;
  for (const auto& n : notes) detail += (detail.empty() ? "" : "; ") + n;
  return {ok, detail};
}

// ------------------------------------------------------------------ 7, 8

// The desk-scale corpus restricted to 0 dB.
struct ZeroDb {
  std::vector<data::TrackPair> train;
  std::vector<data::TrackPair> test;
};

ZeroDb zero_db_corpus(const fs::path& dir) {
  const auto m = data::generate_corpus(dir, data::CorpusConfig{});
  harness::RunConfig cfg;
  cfg.snr_list = {0.0};
  std::vector<std::size_t> train;
  for (auto i : m.indices(data::Split::kTrain)) {
    if (m.entries[i].snr_db == 0.0) train.push_back(i);
  }
  return {data::load_pairs(m, train), data::load_pairs(m, harness::test_entries(cfg, m))};
}

struct Scores {
  double ssnr = 0.0;
  double stoi = 0.0;
};

Scores score(const harness::Enhancer& e, const std::vector<data::TrackPair>& test) {
  Scores s;
  for (const auto& p : test) {
    const auto y = e(p.noisy);
    s.ssnr += metrics::ssnr(p.clean, y);
    s.stoi += metrics::stoi(p.clean, y);
  }
  s.ssnr /= static_cast<double>(test.size());
  s.stoi /= static_cast<double>(test.size());
  return s;
}

Outcome directional() {
  const auto t0 = Clock::now();
  const auto dir = scratch("directional");
  const auto corpus = zero_db_corpus(dir / "corpus");
  std::map<harness::Framework, Scores> mean;
  const std::vector<std::uint64_t> seeds{1, 2, 3};
  for (auto f : {harness::Framework::kWavenet, harness::Framework::kCdWavenet, harness::Framework::kAegan,
                 harness::Framework::kCdAegan}) {
    for (auto seed : seeds) {
      auto cfg = harness::RunConfig::defaults(f);
      cfg.snr_list = {0.0};
      cfg.epochs = 8;
      cfg.optimizer.learning_rate = 1e-3;
      cfg.seed = seed;
      const auto r = harness::train(cfg, corpus.train);
      const auto s = score(harness::Enhancer(f, r.generator), corpus.test);
      std::cout << "  " << harness::to_string(f) << " seed " << seed << ": SSNR " << fmt(s.ssnr, 4) << " dB, STOI "
                << fmt(s.stoi, 4) << "\n" << std::flush;
      mean[f].ssnr += s.ssnr / static_cast<double>(seeds.size());
      mean[f].stoi += s.stoi / static_cast<double>(seeds.size());
    }
  }
  fs::remove_all(dir);
  const double t = seconds_since(t0);
  using harness::Framework;
  const bool a = mean[Framework::kCdWavenet].stoi >= mean[Framework::kWavenet].stoi;
  const bool b = mean[Framework::kCdAegan].ssnr >= mean[Framework::kAegan].ssnr;
  return {a && b && t < 1800.0,
          std::string("(a) STOI cd_wavenet ") + fmt(mean[Framework::kCdWavenet].stoi, 4) + (a ? " >= " : " < ") +
              "wavenet " + fmt(mean[Framework::kWavenet].stoi, 4) + "; (b) SSNR cd_aegan " +
              fmt(mean[Framework::kCdAegan].ssnr, 4) + (b ? " >= " : " < ") + "aegan " +
              fmt(mean[Framework::kAegan].ssnr, 4) + " dB; " + std::to_string(corpus.test.size()) +
              " test tracks x 3 seeds in " + fmt(t / 60.0) + " min"};
}

Outcome wiener_sanity() {
  const auto dir = scratch("wiener");
  const auto corpus = zero_db_corpus(dir / "corpus");
  double noisy = 0.0, enhanced = 0.0;
  for (const auto& p : corpus.test) {
    noisy += metrics::ssnr(p.clean, p.noisy);
    enhanced += metrics::ssnr(p.clean, harness::Enhancer()(p.noisy));
  }
  fs::remove_all(dir);
  const double n = static_cast<double>(corpus.test.size());
  const double gain = (enhanced - noisy) / n;
  return {gain >= 1.0, "mean SSNR " + fmt(noisy / n, 4) + " dB noisy -> " + fmt(enhanced / n, 4) + " dB Wiener (+" +
                           fmt(gain, 3) + " dB) on " + std::to_string(corpus.test.size()) + " tracks"};
}

// ------------------------------------------------------------------ 9

data::CorpusConfig small_corpus() {
  data::CorpusConfig c;
  c.train_speakers = 3;
  c.test_speakers = 2;
  c.train_sentences = 6;
  c.test_sentences = 2;
  c.sentences_per_train_speaker = 2;
  c.sentences_per_test_speaker = 1;
  c.noise_seconds = 6.0;
  return c;
}

std::string file_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

Outcome determinism() {
  const auto dir = scratch("determinism");
  const metrics::ExternalPesq pesq(CDSE_PESQ_PLUGIN);
  std::vector<std::string> manifests, tracks, aggregates;
  std::vector<double> epoch1;
  for (int run = 0; run < 2; ++run) {
    const auto root = dir / ("run" + std::to_string(run));
    data::generate_corpus(root / "corpus", small_corpus());
    manifests.push_back(file_text(root / "corpus" / "manifest.jsonl"));
    auto cfg = harness::RunConfig::defaults(harness::Framework::kCdAegan);
    cfg.manifest = root / "corpus" / "manifest.jsonl";
    cfg.epochs = 2;
    cfg.seed = 11;
    const auto r = harness::train_run(cfg, root / "cd_aegan");
    epoch1.push_back(r.epochs.front().generator);
    harness::enhance_run(root / "cd_aegan");
    harness::EvaluateOptions opts;
    opts.pesq = &pesq;
    harness::evaluate_run(root / "cd_aegan", opts);
    tracks.push_back(file_text(harness::RunLayout{root / "cd_aegan"}.track_metrics()));
    aggregates.push_back(file_text(harness::RunLayout{root / "cd_aegan"}.aggregate()));
  }
  fs::remove_all(dir);
  const bool same_manifest = manifests[0] == manifests[1];
  const double gap = std::abs(epoch1[0] - epoch1[1]) / std::abs(epoch1[0]);
  const bool same_reports = tracks[0] == tracks[1] && aggregates[0] == aggregates[1] && !tracks[0].empty();
  return {same_manifest && gap <= 1e-6 && same_reports,
          std::string("manifests ") + (same_manifest ? "identical" : "DIFFER") + ", epoch-1 loss gap " + fmt(gap, 2) +
              ", reports " + (same_reports ? "identical" : "DIFFER")};
}

// ------------------------------------------------------------------ 10

int run(const std::string& cmd, const fs::path& log) {
  const int status = std::system((cmd + " >> '" + log.string() + "' 2>&1").c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  for (std::string line; std::getline(in, line);) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

bool wait_for_port(int port, double timeout_s) {
  const auto t0 = Clock::now();
  while (seconds_since(t0) < timeout_s) {
    const int fd = ::socket(AF_INET, SOCK_STREAM, 0);
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<std::uint16_t>(port));
    addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
    const bool up = ::connect(fd, reinterpret_cast<sockaddr*>(&addr), sizeof addr) == 0;
    ::close(fd);
    if (up) return true;
    ::usleep(50000);
  }
  return false;
}

Outcome end_to_end() {
  const auto t0 = Clock::now();
  const auto dir = scratch("cli");
  const auto log = dir / "cli.log";
  const std::string cli = CDSE_CLI;

  const int port = 20000 + static_cast<int>(::getpid() % 20000);
  const pid_t stub = ::fork();
  if (stub == 0) {
    ::execl(CDSE_ASR_STUB, CDSE_ASR_STUB, "--port", std::to_string(port).c_str(), static_cast<char*>(nullptr));
    std::_Exit(127);
  }
  const auto url = "http://127.0.0.1:" + std::to_string(port) + "/transcribe";
  if (!wait_for_port(port, 10.0)) {
    ::kill(stub, SIGTERM);
    ::waitpid(stub, nullptr, 0);
    return {false, "ASR stub did not start on port " + std::to_string(port)};
  }

  std::ofstream(dir / "corpus.yaml") << harness::to_yaml(small_corpus());
  std::vector<std::pair<std::string, int>> steps;
  steps.emplace_back("mix", run(cli + " mix --config '" + (dir / "corpus.yaml").string() + "' --out '" +
                                    (dir / "corpus").string() + "' --seed 7",
                                log));
  std::string runs;
  for (auto f : harness::all_frameworks()) {
    const auto name = std::string(harness::to_string(f));
    std::ofstream(dir / (name + ".yaml")) << "framework: " << name << "\nepochs: 2\ndata:\n  manifest: corpus/manifest.jsonl\n";
    const auto run_dir = (dir / "runs" / name).string();
    steps.emplace_back("train " + name,
                       run(cli + " train --config '" + (dir / (name + ".yaml")).string() + "' --out '" + run_dir +
                               "' --seed 3",
                           log));
    steps.emplace_back("enhance " + name, run(cli + " enhance --run '" + run_dir + "'", log));
    steps.emplace_back("evaluate " + name, run(cli + " evaluate --run '" + run_dir + "' --pesq '" +
                                                   CDSE_PESQ_PLUGIN + "' --asr-url " + url,
                                               log));
    runs += " '" + run_dir + "'";
  }
  steps.emplace_back("report", run(cli + " report" + runs + " --out '" + (dir / "report").string() + "'", log));
  ::kill(stub, SIGTERM);
  ::waitpid(stub, nullptr, 0);
  const double t = seconds_since(t0);

  std::string failed;
  for (const auto& [name, code] : steps) {
    if (code != 0) failed += " " + name + "=" + std::to_string(code);
  }
  const auto table = read_csv(dir / "report" / "table.csv");
  const auto box = read_csv(dir / "report" / "boxplot.csv");
  const std::vector<std::string> columns{"PESQ", "CSIG", "CBAK", "COVL", "SSNR", "STOI%", "1-WER%"};
  const bool shaped = !table.empty() && table[0].size() == 11 &&
                      std::equal(columns.begin(), columns.end(), table[0].begin() + 4) &&
                      table.size() == 1 + 2 * harness::all_frameworks().size();
  bool filled = shaped;
  for (std::size_t r = 1; filled && r < table.size(); ++r) {
    for (std::size_t c = 4; c < table[r].size(); ++c) filled = filled && table[r][c] != "NA" && !table[r][c].empty();
  }
  // 2 test speakers x 1 sentence x 2 SNRs per run.
  const bool boxes = box.size() == 1 + 4 * harness::all_frameworks().size();
  const bool ok = failed.empty() && shaped && filled && boxes && t < 1800.0;
  std::string detail = std::to_string(steps.size()) + " commands" + (failed.empty() ? " exited 0" : ", nonzero:" + failed) +
                       "; table " + std::to_string(table.empty() ? 0 : table.size() - 1) + " rows" +
                       (shaped && filled ? " with all 7 metric columns" : " MALFORMED") + "; boxplot " +
                       std::to_string(box.empty() ? 0 : box.size() - 1) + " rows; " + fmt(t / 60.0) + " min";
  if (ok) {
    fs::remove_all(dir);
  } else {
    detail += " (log: " + log.string() + ")";
  }
  return {ok, detail};
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance criteria"};
  std::vector<int> selected;
  app.add_option("--criterion", selected, "Criteria to run (default: all)")->check(CLI::Range(1, 10));
  CLI11_PARSE(app, argc, argv);
  if (selected.empty()) selected = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};

  torch::set_num_threads(1);
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"round-trip reconstruction", round_trip},
      {"256x256 embedding", embedding_shape},
      {"gradient correctness", gradients},
      {"reduction identities", reductions},
      {"SNR mixing accuracy", mixing},
      {"metric oracles", metric_oracles},
      {"directional replication", directional},
      {"Wiener baseline sanity", wiener_sanity},
      {"determinism", determinism},
      {"end-to-end CLI", end_to_end},
  };
  int failures = 0;
  for (int n : selected) {
    const auto& [name, fn] = criteria[static_cast<std::size_t>(n - 1)];
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS" : "FAIL") << " criterion " << n << " (" << name << "): " << o.detail << "\n"
              << std::flush;
    failures += o.pass ? 0 : 1;
  }
  return failures == 0 ? 0 : 1;
}
