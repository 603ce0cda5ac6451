#include <gtest/gtest.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <random>

#include <unistd.h>

#include <json.hpp>

#include "cdse/data/mixing.hpp"
#include "cdse/data/synthetic.hpp"
#include "cdse/error.hpp"
#include "cdse/metrics/asr.hpp"
#include "cdse/metrics/pesq.hpp"
#include "cdse/metrics/quality.hpp"
#include "cdse/metrics/report.hpp"
#include "cdse/metrics/stoi.hpp"
#include "cdse/metrics/wer.hpp"
#include "cdse/metrics/wiener.hpp"
#include "cdse/signal/wav_io.hpp"
#include "test_support.hpp"

namespace cdse {
namespace {

using metrics::MetricsReport;
using signal::Waveform;

std::filesystem::path data_dir() {
  const char* env = std::getenv("CDSE_TEST_DATA");
  return env ? std::filesystem::path(env) : std::filesystem::path("tests/data");
}

nlohmann::json metric_references() {
  std::ifstream in(data_dir() / "metrics" / "reference.json");
  return nlohmann::json::parse(in);
}

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorCode::kMalformed;
}

Waveform scaled(const Waveform& w, double g) {
  auto s = w.data();
  for (auto& v : s) v *= g;
  return Waveform(std::move(s));
}

Waveform plus(const Waveform& a, const Waveform& b) {
  auto s = a.data();
  for (std::size_t i = 0; i < s.size(); ++i) s[i] += b.data()[i];
  return Waveform(std::move(s));
}

Waveform speech(std::uint64_t seed) {
  return data::synthesize_speech({"red", "green", "blue"}, data::random_voice(seed), seed);
}

Waveform white(std::int64_t n, double rms, std::uint64_t seed) {
  return testing::random_waveform(n, seed, rms);
}

Waveform at_snr(const Waveform& clean, const Waveform& noise, double snr_db) {
  const double g = std::sqrt(clean.mean_power() / (noise.mean_power() * std::pow(10.0, snr_db / 10.0)));
  return plus(clean, scaled(noise, g));
}

// ---- SSNR ------------------------------------------------------------------

// Independent restatement: slice each frame out, compute its energies with
// std::inner_product, apply the 40 dB relative silence rule and the clamp.
double ssnr_oracle(const Waveform& clean, const Waveform& est) {
  std::vector<std::vector<double>> cf, ef;
  for (std::size_t s = 0; s + 480 <= clean.data().size(); s += 240) {
    cf.emplace_back(clean.data().begin() + static_cast<long>(s), clean.data().begin() + static_cast<long>(s + 480));
    ef.emplace_back(est.data().begin() + static_cast<long>(s), est.data().begin() + static_cast<long>(s + 480));
  }
  std::vector<double> energy;
  for (const auto& f : cf) energy.push_back(std::inner_product(f.begin(), f.end(), f.begin(), 0.0));
  const double top = *std::max_element(energy.begin(), energy.end());
  double sum = 0.0;
  int count = 0;
  for (std::size_t k = 0; k < cf.size(); ++k) {
    if (energy[k] <= 0.0 || 10.0 * std::log10(top / energy[k]) > 40.0) continue;
    std::vector<double> d(480);
    for (int i = 0; i < 480; ++i) d[static_cast<std::size_t>(i)] = cf[k][static_cast<std::size_t>(i)] - ef[k][static_cast<std::size_t>(i)];
    const double noise = std::inner_product(d.begin(), d.end(), d.begin(), 0.0);
    double db = noise == 0.0 ? 35.0 : 10.0 * std::log10(energy[k] / noise);
    db = std::min(35.0, std::max(-10.0, db));
    sum += db;
    ++count;
  }
  return sum / count;
}

TEST(Ssnr, IdentityHitsClampMaximum) {
  const auto x = speech(1);
  EXPECT_DOUBLE_EQ(metrics::ssnr(x, x), 35.0);
}

TEST(Ssnr, ZeroEstimateIsZeroDb) {
  const auto x = speech(2);
  EXPECT_NEAR(metrics::ssnr(x, Waveform::zeros(x.size())), 0.0, 1e-12);
}

TEST(Ssnr, ThirtyDbErrorEverywhere) {
  const auto x = speech(3);
  // Error = sqrt(1e-3) x in every frame.
  EXPECT_NEAR(metrics::ssnr(x, scaled(x, 1.0 - std::sqrt(1e-3))), 30.0, 1e-9);
}

TEST(Ssnr, MatchesBruteForceOracleOnFiftyFixtures) {
  std::mt19937_64 rng(404);
  for (int t = 0; t < 50; ++t) {
    std::uniform_int_distribution<std::int64_t> len(4000, 40000);
    const auto n = len(rng);
    auto clean = testing::random_waveform(n, rng(), std::uniform_real_distribution<double>(0.01, 0.4)(rng));
    // Carve out silent and near-silent stretches.
    auto s = clean.data();
    std::uniform_int_distribution<std::int64_t> pos(0, n - 1);
    for (int k = 0; k < 3; ++k) {
      const auto a = pos(rng);
      const auto b = std::min<std::int64_t>(n, a + 2000);
      const double g = k == 0 ? 0.0 : std::pow(10.0, -std::uniform_real_distribution<double>(1.0, 4.0)(rng));
      for (auto i = a; i < b; ++i) s[static_cast<std::size_t>(i)] *= g;
    }
    clean = Waveform(std::move(s));
    const double snr = std::uniform_real_distribution<double>(-15.0, 40.0)(rng);
    const auto est = at_snr(clean, testing::random_waveform(n, rng(), 0.1), snr);
    EXPECT_NEAR(metrics::ssnr(clean, est), ssnr_oracle(clean, est), 1e-9) << "fixture " << t;
  }
}

TEST(Ssnr, InvariantUnderJointScaling) {
  const auto x = speech(4);
  const auto y = at_snr(x, white(x.size(), 0.1, 5), 3.0);
  const double base = metrics::ssnr(x, y);
  for (const double g : {1e-3, 0.37, 12.0}) EXPECT_NEAR(metrics::ssnr(scaled(x, g), scaled(y, g)), base, 1e-9);
}

TEST(Ssnr, Errors) {
  const auto x = speech(6);
  EXPECT_EQ(code_of([&] { metrics::ssnr(x, Waveform::zeros(x.size() - 1)); }), ErrorCode::kLengthMismatch);
  EXPECT_EQ(code_of([&] { metrics::ssnr(Waveform::zeros(8000), x); }), ErrorCode::kLengthMismatch);
  EXPECT_EQ(code_of([&] { metrics::ssnr(Waveform::zeros(8000), Waveform::zeros(8000)); }), ErrorCode::kSilentClean);
  EXPECT_EQ(code_of([&] { metrics::ssnr(white(100, 0.1, 1), white(100, 0.1, 2)); }), ErrorCode::kTooShort);
}

TEST(Ssnr, FramesStayWithinClamp) {
  const auto x = speech(7);
  const auto f = metrics::ssnr_frames(x, white(x.size(), 0.3, 8));
  ASSERT_FALSE(f.clamped_db.empty());
  for (const double v : f.clamped_db) {
    EXPECT_GE(v, -10.0);
    EXPECT_LE(v, 35.0);
  }
}

// ---- STOI ------------------------------------------------------------------

TEST(Stoi, MatchesReferenceImplementationOnTenFixtures) {
  const auto refs = metric_references().at("stoi");
  ASSERT_EQ(refs.size(), 10u);
  for (const auto& r : refs) {
    const auto clean = signal::read_wav(data_dir() / "metrics" / r.at("clean").get<std::string>());
    const auto est = signal::read_wav(data_dir() / "metrics" / r.at("estimate").get<std::string>());
    EXPECT_NEAR(metrics::stoi(clean, est), r.at("stoi").get<double>(), 0.01) << r.at("estimate");
  }
}

TEST(Stoi, IdentityIsPerfect) {
  const auto x = speech(11);
  EXPECT_GE(metrics::stoi(x, x), 0.999);
}

TEST(Stoi, NondecreasingInMixingSnr) {
  for (const std::uint64_t seed : {21u, 22u, 23u}) {
    const auto x = speech(seed);
    const auto noise = white(x.size(), 0.1, seed + 100);
    double prev = -1.0;
    for (const double snr : {-5.0, 0.0, 5.0, 10.0}) {
      const double s = metrics::stoi(x, at_snr(x, noise, snr));
      EXPECT_GE(s, prev) << "seed " << seed << " snr " << snr;
      prev = s;
    }
  }
}

TEST(Stoi, DeterministicAndWithinUnitInterval) {
  const auto x = speech(12);
  const auto y = at_snr(x, white(x.size(), 0.1, 13), 0.0);
  const double a = metrics::stoi(x, y);
  EXPECT_EQ(a, metrics::stoi(x, y));
  EXPECT_GE(a, 0.0);
  EXPECT_LE(a, 1.0);
}

TEST(Stoi, Errors) {
  const auto x = speech(14);
  EXPECT_EQ(code_of([&] { metrics::stoi(x, Waveform::zeros(x.size() + 1)); }), ErrorCode::kLengthMismatch);
  EXPECT_EQ(code_of([&] { metrics::stoi(Waveform::zeros(16000), Waveform::zeros(16000)); }), ErrorCode::kAllSilent);
  const auto short_x = white(4000, 0.1, 1);
  EXPECT_EQ(code_of([&] { metrics::stoi(short_x, short_x); }), ErrorCode::kTooShort);
}

TEST(Stoi, ResamplerKeepsInBandTone) {
  const auto x = testing::sine(16000, 1000.0, 0.5);
  const auto y = metrics::resample_poly(x.data(), 10000, 16000);
  ASSERT_EQ(y.size(), 10000u);
  double err = 0.0;
  for (std::size_t i = 2000; i < 8000; ++i) err = std::max(err, std::abs(y[i] - 0.5 * std::sin(2.0 * M_PI * 1000.0 * i / 10000.0)));
  EXPECT_LT(err, 1e-3);
}

// ---- Composite measures ----------------------------------------------------

TEST(Composite, MatchesReferenceOnFiveFixtures) {
  const auto refs = metric_references().at("composite");
  ASSERT_EQ(refs.size(), 5u);
  for (const auto& r : refs) {
    const auto clean = signal::read_wav(data_dir() / "metrics" / r.at("clean").get<std::string>());
    const auto est = signal::read_wav(data_dir() / "metrics" / r.at("estimate").get<std::string>());
    const double llr = metrics::llr(clean, est);
    const double wss = metrics::wss(clean, est);
    EXPECT_NEAR(llr, r.at("llr").get<double>(), 1e-6);
    EXPECT_NEAR(wss, r.at("wss").get<double>(), 1e-5);
    const auto c = metrics::composite_measures(r.at("pesq").get<double>(), llr, wss, r.at("segsnr").get<double>());
    EXPECT_NEAR(c.csig, r.at("csig").get<double>(), 0.01);
    EXPECT_NEAR(c.cbak, r.at("cbak").get<double>(), 0.01);
    EXPECT_NEAR(c.covl, r.at("covl").get<double>(), 0.01);
  }
}

TEST(Composite, IdealComponentsClipToFive) {
  const auto c = metrics::composite_measures(4.5, 0.0, 0.0, 35.0);
  EXPECT_EQ(c.csig, 5.0);
  EXPECT_EQ(c.cbak, 5.0);
  EXPECT_EQ(c.covl, 5.0);
  const auto worst = metrics::composite_measures(1.0, 2.0, 100.0, -10.0);
  EXPECT_EQ(worst.csig, 1.0);
  EXPECT_EQ(worst.cbak, 1.0);
  EXPECT_EQ(worst.covl, 1.0);
}

TEST(Composite, CsigAffineInPesq) {
  auto csig = [](double p) { return metrics::composite_measures(p, 0.8, 30.0, 5.0).csig; };
  const double slope = (csig(3.0) - csig(2.0)) / 1.0;
  EXPECT_NEAR(slope, 0.603, 1e-12);
  EXPECT_NEAR(csig(2.5) - csig(2.0), 0.5 * slope, 1e-12);
}

TEST(Composite, IdentityHasZeroDistortion) {
  const auto x = speech(31);
  EXPECT_NEAR(metrics::llr(x, x), 0.0, 1e-9);
  EXPECT_NEAR(metrics::wss(x, x), 0.0, 1e-9);
}

TEST(Composite, DistortionGrowsWithNoise) {
  const auto x = speech(32);
  const auto noise = white(x.size(), 0.1, 33);
  EXPECT_LT(metrics::wss(x, at_snr(x, noise, 20.0)), metrics::wss(x, at_snr(x, noise, 0.0)));
  EXPECT_LT(metrics::llr(x, at_snr(x, noise, 20.0)), metrics::llr(x, at_snr(x, noise, 0.0)));
}

class FixedPesq final : public metrics::PesqScorer {
 public:
  explicit FixedPesq(double v) : v_(v) {}
  double score(const Waveform&, const Waveform&) const override { return v_; }

 private:
  double v_;
};

TEST(Composite, ScoringWithoutPesqIsAnError) {
  const auto x = speech(34);
  EXPECT_EQ(code_of([&] { metrics::score_track(x, x, "red", "red", nullptr); }), ErrorCode::kMissingPesq);
}

// ---- WER -------------------------------------------------------------------

TEST(Wer, Examples) {
  EXPECT_EQ(metrics::wer("the cat sat", "the cat sat"), 0.0);
  EXPECT_DOUBLE_EQ(metrics::wer("the cat sat", "the cat"), 1.0 / 3.0);
  EXPECT_DOUBLE_EQ(metrics::wer("a", "b c"), 2.0);
  EXPECT_DOUBLE_EQ(1.0 - metrics::wer("a", "b c"), -1.0);
}

TEST(Wer, NormalizesCasePunctuationAndSpacing) {
  EXPECT_EQ(metrics::wer("The  Cat, sat!", "the cat\tsat"), 0.0);
  EXPECT_EQ(metrics::normalize_words("  Hello,   WORLD. "), (std::vector<std::string>{"hello", "world"}));
}

TEST(Wer, EmptyReferenceIsAnError) {
  EXPECT_EQ(code_of([] { metrics::wer("", "a"); }), ErrorCode::kEmptyReference);
  EXPECT_EQ(code_of([] { metrics::wer(" ?! ", "a"); }), ErrorCode::kEmptyReference);
}

// Minimum over every alignment by plain recursion (no memo).
std::size_t brute_force_distance(const std::vector<std::string>& r, std::size_t i, const std::vector<std::string>& h,
                                 std::size_t j) {
  if (i == r.size()) return h.size() - j;
  if (j == h.size()) return r.size() - i;
  const std::size_t sub = brute_force_distance(r, i + 1, h, j + 1) + (r[i] == h[j] ? 0 : 1);
  const std::size_t del = brute_force_distance(r, i + 1, h, j) + 1;
  const std::size_t ins = brute_force_distance(r, i, h, j + 1) + 1;
  return std::min({sub, del, ins});
}

TEST(Wer, MatchesExhaustiveBruteForce) {
  const std::vector<std::string> vocab{"x", "y", "z"};
  std::vector<std::vector<std::string>> seqs{{}};
  for (std::size_t len = 1; len <= 5; ++len) {
    const auto before = seqs.size();
    for (std::size_t k = 0; k < before; ++k) {
      if (seqs[k].size() != len - 1) continue;
      for (const auto& w : vocab) {
        auto s = seqs[k];
        s.push_back(w);
        seqs.push_back(std::move(s));
      }
    }
  }
  ASSERT_EQ(seqs.size(), 364u);
  auto join = [](const std::vector<std::string>& s) {
    std::string out;
    for (const auto& w : s) out += w + " ";
    return out;
  };
  std::size_t mismatches = 0;
  for (const auto& r : seqs) {
    if (r.empty()) continue;
    const auto rs = join(r);
    for (const auto& h : seqs) {
      const double expected = static_cast<double>(brute_force_distance(r, 0, h, 0)) / static_cast<double>(r.size());
      if (metrics::wer(rs, join(h)) != expected) ++mismatches;
    }
  }
  EXPECT_EQ(mismatches, 0u);
}

// ---- ASR client and stub ---------------------------------------------------

TEST(Asr, TableStubReturnsMappedTranscript) {
  const auto a = white(8000, 0.1, 41), b = white(8000, 0.1, 42);
  metrics::AsrStubServer server(metrics::AsrStubServer::Mode::kTable,
                                {{metrics::audio_key(a), "red green"}, {metrics::audio_key(b), "blue"}});
  server.start();
  metrics::AsrConfig cfg;
  cfg.url = server.url();
  metrics::AsrClient client(cfg);
  EXPECT_EQ(client.transcribe(a), "red green");
  EXPECT_EQ(client.transcribe(b), "blue");
  EXPECT_EQ(client.transcribe(white(8000, 0.1, 43)), "");
}

TEST(Asr, BatchPreservesInputOrder) {
  std::vector<Waveform> audio;
  std::map<std::string, std::string> table;
  for (int i = 0; i < 12; ++i) {
    audio.push_back(white(4000 + 37 * i, 0.1, 500 + static_cast<std::uint64_t>(i)));
    table[metrics::audio_key(audio.back())] = "track " + std::to_string(i);
  }
  metrics::AsrStubServer server(metrics::AsrStubServer::Mode::kTable, table, 5);
  server.start();
  metrics::AsrConfig cfg;
  cfg.url = server.url();
  cfg.max_concurrency = 4;
  const auto out = metrics::AsrClient(cfg).transcribe_batch(audio);
  ASSERT_EQ(out.size(), audio.size());
  for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i], "track " + std::to_string(i));
  EXPECT_EQ(server.requests(), 12);
}

TEST(Asr, UnreachableEndpointStopsAfterConfiguredRetries) {
  int port = 0;
  {
    metrics::AsrStubServer probe(metrics::AsrStubServer::Mode::kTable);
    port = probe.start();
  }
  metrics::AsrConfig cfg;
  cfg.url = "http://127.0.0.1:" + std::to_string(port) + "/transcribe";
  cfg.retries = 2;
  cfg.timeout_s = 1.0;
  metrics::AsrClient client(cfg);
  try {
    client.transcribe(white(1000, 0.1, 1));
    FAIL() << "expected an error";
  } catch (const ExternalServiceError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kEndpointUnreachable);
    EXPECT_EQ(e.attempts(), 3);
    EXPECT_EQ(e.category(), ErrorCategory::kExternalService);
  }
}

TEST(Asr, SlowEndpointTimesOut) {
  metrics::AsrStubServer server(metrics::AsrStubServer::Mode::kTable, {}, 1500);
  server.start();
  metrics::AsrConfig cfg;
  cfg.url = server.url();
  cfg.timeout_s = 0.2;
  cfg.retries = 1;
  try {
    metrics::AsrClient(cfg).transcribe(white(1000, 0.1, 1));
    FAIL() << "expected a timeout";
  } catch (const ExternalServiceError& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTimeout);
    EXPECT_EQ(e.attempts(), 2);
  }
  server.stop();
  EXPECT_EQ(server.requests(), 2);
}

TEST(Asr, TemplateStubTranscribesCleanSpeech) {
  metrics::AsrStubServer server(metrics::AsrStubServer::Mode::kTemplates);
  server.start();
  metrics::AsrConfig cfg;
  cfg.url = server.url();
  const auto x = data::synthesize_speech({"yellow", "black", "white"}, data::random_voice(77), 77);
  EXPECT_EQ(metrics::AsrClient(cfg).transcribe(x), "yellow black white");
}

TEST(Asr, ConfigFromEnvironment) {
  ::setenv("CDSE_ASR_URL", "http://example.invalid:9/asr", 1);
  ::setenv("CDSE_ASR_RETRIES", "5", 1);
  ::setenv("CDSE_ASR_TIMEOUT", "2.5", 1);
  const auto cfg = metrics::AsrConfig::from_env({});
  ::unsetenv("CDSE_ASR_URL");
  ::unsetenv("CDSE_ASR_RETRIES");
  ::unsetenv("CDSE_ASR_TIMEOUT");
  EXPECT_EQ(cfg.url, "http://example.invalid:9/asr");
  EXPECT_EQ(cfg.retries, 5);
  EXPECT_DOUBLE_EQ(cfg.timeout_s, 2.5);
  ::setenv("CDSE_ASR_RETRIES", "many", 1);
  EXPECT_EQ(code_of([] { metrics::AsrConfig::from_env({}); }), ErrorCode::kConfig);
  ::unsetenv("CDSE_ASR_RETRIES");
}

// ---- PESQ plug-in ----------------------------------------------------------

std::filesystem::path write_script(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / ("cdse_test_" + std::to_string(::getpid()) + "_" + name);
  std::ofstream(path) << "#!/bin/sh\n" << body << "\n";
  std::filesystem::permissions(path, std::filesystem::perms::owner_all);
  return path;
}

TEST(Pesq, ExternalScorerReadsLastLine) {
  // Echoes a score only when both WAV arguments exist.
  const auto script = write_script("pesq_ok", "test -f \"$1\" && test -f \"$2\" || exit 1\necho loading\necho 3.25");
  const auto x = speech(51);
  EXPECT_DOUBLE_EQ(metrics::ExternalPesq(script).score(x, x), 3.25);
  std::filesystem::remove(script);
}

TEST(Pesq, FailuresAreExternalToolErrors) {
  const auto x = speech(52);
  const auto crash = write_script("pesq_crash", "exit 3");
  const auto garbage = write_script("pesq_garbage", "echo not-a-number");
  EXPECT_EQ(code_of([&] { metrics::ExternalPesq(crash).score(x, x); }), ErrorCode::kExternalTool);
  EXPECT_EQ(code_of([&] { metrics::ExternalPesq(garbage).score(x, x); }), ErrorCode::kExternalTool);
  EXPECT_EQ(code_of([] { metrics::ExternalPesq("/nonexistent/pesq"); }), ErrorCode::kConfig);
  std::filesystem::remove(crash);
  std::filesystem::remove(garbage);
}

// ---- Wiener baseline -------------------------------------------------------

TEST(Wiener, PassesCleanInputThrough) {
  auto s = std::vector<double>(3200, 0.0);
  const auto tone = testing::sine(24000, 440.0, 0.3);
  s.insert(s.end(), tone.data().begin(), tone.data().end());
  const Waveform x(std::move(s));
  const auto y = metrics::wiener_baseline(x);
  ASSERT_EQ(y.size(), x.size());
  EXPECT_GE(metrics::ssnr(x, y), 35.0 - 0.1);
}

TEST(Wiener, SuppressesStationaryNoiseByTenDb) {
  const auto n = white(48000, 0.1, 61);
  const auto y = metrics::wiener_baseline(n);
  double in = 0.0, out = 0.0;
  for (std::size_t i = 8000; i < n.data().size(); ++i) {
    in += n.data()[i] * n.data()[i];
    out += y.data()[i] * y.data()[i];
  }
  EXPECT_GE(10.0 * std::log10(in / out), 10.0);
}

TEST(Wiener, ImprovesSsnrOfNoisySinusoid) {
  auto s = std::vector<double>(3200, 0.0);
  const auto tone = testing::sine(32000, 500.0, 0.3);
  s.insert(s.end(), tone.data().begin(), tone.data().end());
  const Waveform clean(std::move(s));
  const auto noisy = at_snr(clean, white(clean.size(), 0.1, 62), 0.0);
  EXPECT_GT(metrics::ssnr(clean, metrics::wiener_baseline(noisy)), metrics::ssnr(clean, noisy));
}

TEST(Wiener, PreservesOddLengthsAndRejectsShortInput) {
  for (const std::int64_t n : {2433, 16001, 40000}) EXPECT_EQ(metrics::wiener_baseline(white(n, 0.1, 63)).size(), n);
  EXPECT_EQ(code_of([] { metrics::wiener_baseline(Waveform::zeros(2000)); }), ErrorCode::kTooShort);
}

// ---- Reports ---------------------------------------------------------------

TEST(Report, AggregateIsColumnMean) {
  std::mt19937_64 rng(71);
  std::uniform_real_distribution<double> u(1.0, 5.0);
  std::vector<MetricsReport> rows;
  for (int i = 0; i < 9; ++i) {
    MetricsReport r;
    r.pesq = u(rng);
    r.csig = u(rng);
    r.cbak = u(rng);
    r.covl = u(rng);
    r.ssnr_db = u(rng) * 5.0;
    r.stoi = u(rng) / 5.0;
    r.one_minus_wer = 1.0 - u(rng) / 2.0;
    rows.push_back(r);
  }
  const auto m = metrics::aggregate(rows);
  auto mean = [&](auto field) {
    double s = 0.0;
    for (const auto& r : rows) s += field(r);
    return s / static_cast<double>(rows.size());
  };
  EXPECT_NEAR(*m.pesq, mean([](const MetricsReport& r) { return *r.pesq; }), 1e-12);
  EXPECT_NEAR(m.csig, mean([](const MetricsReport& r) { return r.csig; }), 1e-12);
  EXPECT_NEAR(m.cbak, mean([](const MetricsReport& r) { return r.cbak; }), 1e-12);
  EXPECT_NEAR(m.covl, mean([](const MetricsReport& r) { return r.covl; }), 1e-12);
  EXPECT_NEAR(m.ssnr_db, mean([](const MetricsReport& r) { return r.ssnr_db; }), 1e-12);
  EXPECT_NEAR(m.stoi, mean([](const MetricsReport& r) { return r.stoi; }), 1e-12);
  EXPECT_NEAR(m.one_minus_wer, mean([](const MetricsReport& r) { return r.one_minus_wer; }), 1e-12);

  rows[3].pesq.reset();
  EXPECT_FALSE(metrics::aggregate(rows).pesq.has_value());
}

TEST(Report, JsonRoundTripAndValidation) {
  MetricsReport r{2.5, 3.0, 2.0, 2.7, 4.2, 0.83, -0.5};
  EXPECT_EQ(nlohmann::json(r).get<MetricsReport>(), r);
  r.pesq.reset();
  EXPECT_EQ(nlohmann::json(r).get<MetricsReport>(), r);
  EXPECT_NO_THROW(r.validate());
  auto bad = r;
  bad.stoi = 1.2;
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::kMalformed);
  bad = r;
  bad.ssnr_db = 40.0;
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::kMalformed);
  bad = r;
  bad.one_minus_wer = 1.5;
  EXPECT_EQ(code_of([&] { bad.validate(); }), ErrorCode::kMalformed);
}

TEST(Report, IdentityTrackScoresAtCeiling) {
  const auto x = speech(81);
  const FixedPesq pesq(4.5);
  const auto r = metrics::score_track(x, x, "red green blue", "red green blue", &pesq);
  EXPECT_EQ(r.ssnr_db, 35.0);
  EXPECT_GE(r.stoi, 0.999);
  EXPECT_EQ(r.one_minus_wer, 1.0);
  EXPECT_EQ(r.csig, 5.0);
  EXPECT_NO_THROW(r.validate());
}

}  // namespace
}  // namespace cdse
