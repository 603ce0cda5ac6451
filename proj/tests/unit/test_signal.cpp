#include <gtest/gtest.h>

#include <complex>
#include <filesystem>

#include "cdse/error.hpp"
#include "cdse/signal/compression.hpp"
#include "cdse/signal/stft.hpp"
#include "cdse/signal/tf_cache.hpp"
#include "cdse/signal/wav_io.hpp"
#include "test_support.hpp"

namespace cdse::signal {
namespace {

using cdse::testing::check_gradient;
using cdse::testing::random_indices;
using cdse::testing::random_waveform;
using cdse::testing::relative_l2;

std::int64_t frames_covering(const StftPlan& p) {
  return (p.padded_length() - p.window_length) / p.hop + 1;
}

TEST(PlanStft, OneSecondTrack) {
  const auto plan = plan_stft(16000);
  EXPECT_EQ(plan.hop, 61);
  EXPECT_EQ(frames_covering(plan), 256);
  EXPECT_EQ(plan.n_bins, 256);
  EXPECT_GE(plan.pad_left, 32);
  EXPECT_GE(plan.pad_right, 32);
  EXPECT_TRUE(plan.invertible());
}

TEST(PlanStft, TenSecondTrack) {
  const auto plan = plan_stft(160000);
  EXPECT_EQ(plan.hop, 626);
  EXPECT_EQ(frames_covering(plan), 256);
  // 256 frames of 510 samples cannot overlap across ten seconds.
  EXPECT_FALSE(plan.invertible());
}

TEST(PlanStft, MinimalTrackHasUnitHop) {
  StftConfig cfg;
  cfg.min_length = 1;
  const std::int64_t minimal = kWindowLength + 255 - 2 * cfg.edge_margin;
  EXPECT_EQ(plan_stft(minimal, cfg).hop, 1);
  EXPECT_EQ(plan_stft(minimal + 1, cfg).hop, 2);
}

TEST(PlanStft, RejectsOutOfRangeLengths) {
  for (std::int64_t n : {std::int64_t{7999}, std::int64_t{160001}, std::int64_t{0}}) {
    try {
      plan_stft(n);
      FAIL() << "expected length-out-of-range for n=" << n;
    } catch (const Error& e) {
      EXPECT_EQ(e.code(), ErrorCode::kLengthOutOfRange);
    }
  }
}

TEST(PlanStft, EveryLengthOnDenseGridYields256Frames) {
  for (std::int64_t n = 8000; n <= 160000; n += 97) {
    const auto p = plan_stft(n);
    ASSERT_EQ(frames_covering(p), 256) << n;
    ASSERT_EQ((p.padded_length() - p.window_length) % p.hop, 0) << n;
    ASSERT_GE(p.pad_left, 32) << n;
    ASSERT_GE(p.pad_right, 32) << n;
    ASSERT_EQ(plan_stft(n), p);  // pure function of n
  }
}

TEST(Stft, ZeroWaveformGivesZeroMagnitudeAndPhase) {
  const auto plan = plan_stft(16000);
  const auto tf = stft(Waveform::zeros(16000), plan);
  EXPECT_EQ(tf.magnitude.sizes(), (std::vector<std::int64_t>{256, 256}));
  EXPECT_EQ(tf.magnitude.abs().max().item<double>(), 0.0);
  EXPECT_EQ(tf.phase.abs().max().item<double>(), 0.0);
}

TEST(Stft, BinCenteredSinusoidMatchesDirectDft) {
  const int bin = 40;
  const double freq = bin * 16000.0 / kFftSize;
  const auto wave = cdse::testing::sine(16000, freq, 0.5, 0.3);
  const auto plan = plan_stft(16000);
  const auto tf = stft(wave, plan);

  // Energy sits in one frequency row for interior frames.
  auto row_energy = tf.magnitude.slice(1, 8, 248).square().sum(1);
  EXPECT_EQ(row_energy.argmax().item<std::int64_t>(), bin);
  EXPECT_GT(row_energy[bin].item<double>() / row_energy.sum().item<double>(), 0.6);

  // Direct DFT of one frame.
  const std::int64_t frame = 100;
  std::vector<double> padded(static_cast<std::size_t>(plan.padded_length()), 0.0);
  for (std::int64_t i = 0; i < 16000; ++i) padded[static_cast<std::size_t>(i + plan.pad_left)] = wave.samples()[i];
  for (int b : {0, 1, bin - 1, bin, bin + 1, 200, 255}) {
    std::complex<double> acc{0.0, 0.0};
    for (int k = 0; k < kWindowLength; ++k) {
      const double w = 0.5 - 0.5 * std::cos(2.0 * M_PI * k / kWindowLength);
      const double x = padded[static_cast<std::size_t>(frame * plan.hop + k)] * w;
      acc += x * std::polar(1.0, -2.0 * M_PI * b * k / kFftSize);
    }
    EXPECT_NEAR(tf.magnitude[b][frame].item<double>(), std::abs(acc), 1e-9);
    if (std::abs(acc) > 1e-6) {
      const double dphi = std::remainder(tf.phase[b][frame].item<double>() - std::arg(acc), 2.0 * M_PI);
      EXPECT_NEAR(dphi, 0.0, 1e-6);
    }
  }
}

TEST(Stft, MagnitudeIsHomogeneousAndPhaseInvariant) {
  const auto w = random_waveform(20000, 3);
  const auto plan = plan_stft(20000);
  const auto a = stft(w, plan);
  std::vector<double> scaled(w.data());
  for (auto& s : scaled) s *= 2.5;
  const auto b = stft(Waveform(scaled), plan);
  EXPECT_LT(relative_l2(b.magnitude, a.magnitude * 2.5), 1e-12);
  auto mask = a.magnitude > 1e-9;
  EXPECT_LT((b.phase - a.phase).masked_select(mask).abs().max().item<double>(), 1e-9);
}

TEST(Stft, ComplexSpectrumIsLinear) {
  const auto plan = plan_stft(12000);
  auto x = to_tensor(random_waveform(12000, 4));
  auto y = to_tensor(random_waveform(12000, 5));
  auto complex_of = [&](const torch::Tensor& s) {
    auto tf = stft(s, plan);
    return torch::polar(tf.magnitude, tf.phase);
  };
  auto lhs = complex_of(0.7 * x - 1.3 * y);
  auto rhs = 0.7 * complex_of(x) - 1.3 * complex_of(y);
  EXPECT_LT((lhs - rhs).abs().max().item<double>(), 1e-10);
}

TEST(Stft, PhaseLiesInHalfOpenInterval) {
  const auto tf = stft(random_waveform(30000, 6), plan_stft(30000));
  EXPECT_GT(tf.phase.min().item<double>(), -M_PI);
  EXPECT_LE(tf.phase.max().item<double>(), M_PI);
}

TEST(Stft, RejectsPlanMismatch) {
  const auto plan = plan_stft(16000);
  try {
    stft(Waveform::zeros(15000), plan);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kPlanMismatch);
  }
}

TEST(Istft, RoundTripAcrossInvertibleLengths) {
  for (int i = 0; i < 24; ++i) {
    const std::int64_t n = 8000 + i * 5173;  // up to ~127k samples
    const auto plan = plan_stft(n);
    ASSERT_TRUE(plan.invertible());
    auto w = to_tensor(random_waveform(n, 100 + i));
    auto tf = stft(w, plan);
    auto back = istft(tf.magnitude, tf.phase, plan);
    ASSERT_EQ(back.size(0), n);
    EXPECT_LT(relative_l2(back, w), 1e-6) << "n=" << n;
  }
}

TEST(Istft, BatchedRoundTrip) {
  const auto plan = plan_stft(9000);
  auto w = torch::randn({3, 9000}, torch::kFloat64) * 0.2;
  auto tf = stft(w, plan);
  EXPECT_EQ(tf.magnitude.sizes(), (std::vector<std::int64_t>{3, 256, 256}));
  EXPECT_LT(relative_l2(istft(tf.magnitude, tf.phase, plan), w), 1e-6);
}

TEST(Istft, ZeroMagnitudeGivesSilence) {
  const auto plan = plan_stft(16000);
  auto mag = torch::zeros({256, 256}, torch::kFloat64);
  auto phase = (torch::rand({256, 256}, torch::kFloat64) * 2 - 1) * M_PI;
  EXPECT_EQ(istft(mag, phase, plan).abs().max().item<double>(), 0.0);
}

TEST(Istft, RejectsMalformedShapes) {
  const auto plan = plan_stft(16000);
  auto mag = torch::zeros({256, 128}, torch::kFloat64);
  EXPECT_THROW(istft(mag, mag, plan), Error);
}

TEST(Differentiability, IstftL1NormMatchesFiniteDifferences) {
  const auto plan = plan_stft(10000);
  auto tf = stft(to_tensor(random_waveform(10000, 7)), plan);
  const auto phase = tf.phase;
  auto fn = [&](const torch::Tensor& mag) { return istft(mag, phase, plan).abs().sum(); };
  const auto check = check_gradient(fn, tf.magnitude, random_indices(256 * 256, 12, 8));
  EXPECT_LT(check.max_relative_error, 1e-4);
}

TEST(Differentiability, StftMagnitudeL1NormMatchesFiniteDifferences) {
  const auto plan = plan_stft(10000);
  auto w = to_tensor(random_waveform(10000, 9));
  auto fn = [&](const torch::Tensor& x) { return stft(x, plan).magnitude.abs().sum(); };
  const auto check = check_gradient(fn, w, random_indices(10000, 12, 10));
  EXPECT_LT(check.max_relative_error, 1e-4);
}

TEST(Compression, ZeroMapsToZero) {
  MagnitudeCompressor c;
  EXPECT_EQ(c.compress(torch::zeros({4}, torch::kFloat64)).abs().max().item<double>(), 0.0);
}

TEST(Compression, RoundTripAndMonotone) {
  MagnitudeCompressor c(255.0);
  auto m = torch::rand({256, 256}, torch::kFloat64) * 300.0;
  auto back = c.decompress(c.compress(m));
  EXPECT_LT(((back - m).abs() / m.clamp_min(1e-12)).max().item<double>(), 1e-6);

  auto m2 = m + torch::rand({256, 256}, torch::kFloat64);
  EXPECT_TRUE((c.compress(m) <= c.compress(m2)).all().item<bool>());
  EXPECT_NEAR(c.compress(torch::full({1}, 255.0, torch::kFloat64)).item<double>(), 1.0, 1e-12);
}

TEST(Compression, RejectsNegativeInput) {
  MagnitudeCompressor c;
  try {
    c.compress(torch::tensor({0.5, -0.1}, torch::kFloat64));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNegativeInput);
  }
}

TEST(TfRecord, RoundTripsThroughDisk) {
  const auto plan = plan_stft(17000);
  const auto tf = stft(random_waveform(17000, 11), plan);
  const auto path = std::filesystem::temp_directory_path() / "cdse_tf_record_test.tf";
  write_tf_record(path, tf);
  const auto back = read_tf_record(path);
  EXPECT_EQ(back.plan, plan);
  EXPECT_TRUE(torch::equal(back.magnitude, tf.magnitude));
  EXPECT_TRUE(torch::equal(back.phase, tf.phase));
  std::filesystem::remove(path);
}

TEST(WavIo, RoundTripWithinQuantisation) {
  const auto w = random_waveform(4000, 12);
  const auto back = decode_wav(encode_wav(w));
  ASSERT_EQ(back.size(), w.size());
  for (std::int64_t i = 0; i < w.size(); ++i) EXPECT_NEAR(back.samples()[i], w.samples()[i], 0.5 / 32768.0 + 1e-12);
}

TEST(WavIo, RejectsGarbage) {
  std::vector<std::uint8_t> junk(64, 7);
  try {
    decode_wav(junk);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kFormat);
  }
}

TEST(Waveform, RejectsOtherSampleRatesAndNonFinite) {
  EXPECT_THROW(Waveform({0.0}, 8000), Error);
  EXPECT_THROW(Waveform({std::nan("")}), Error);
}

}  // namespace
}  // namespace cdse::signal
