#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cdse/data/manifest.hpp"
#include "cdse/signal/waveform.hpp"

namespace cdse::data {

// Hermetic stand-in for a read-speech corpus: formant-synthesised colour
// words spoken by seeded "speakers", plus seeded noise recordings.

const std::vector<std::string>& vocabulary();

struct Voice {
  double f0_hz = 120.0;
  double formant_scale = 1.0;
  double rate = 1.0;  // > 1 speaks faster
};

Voice random_voice(std::uint64_t seed);

struct SpeechOptions {
  double lead_silence_s = 0.2;
  double tail_silence_s = 0.15;
  double word_gap_s = 0.15;
  double rms = 0.05;
  // Constant-level background so no frame of a clean track is exactly zero.
  double floor_rms = 1e-4;
};

// Words must come from vocabulary(); kMalformed otherwise.
signal::Waveform synthesize_speech(const std::vector<std::string>& words, const Voice& voice, std::uint64_t seed,
                                   const SpeechOptions& opts = {});

enum class NoiseType { kWhite, kPink, kBabble, kHum };
std::string_view to_string(NoiseType t);
NoiseType noise_type_from_string(std::string_view s);

// Unit-RMS-scaled (0.1) noise recording of n samples.
signal::Waveform synthesize_noise(NoiseType type, std::int64_t n, std::uint64_t seed);

struct CorpusConfig {
  std::uint64_t seed = 2024;
  int train_speakers = 12;
  int test_speakers = 6;
  int train_sentences = 40;  // distinct sentence texts in the train pool
  int test_sentences = 16;
  int sentences_per_train_speaker = 10;
  int sentences_per_test_speaker = 4;
  int min_words = 3;
  int max_words = 4;
  std::vector<double> snr_db{0.0, 5.0};
  std::vector<NoiseType> noise_types{NoiseType::kWhite, NoiseType::kPink, NoiseType::kBabble, NoiseType::kHum};
  double noise_seconds = 10.0;
  // Train tracks are mixed once, cycling through snr_db; test tracks are
  // mixed at every SNR.
  bool train_all_snrs = false;
};

// Writes clean/, noise/ and manifest.jsonl under `dir`; returns the manifest.
Manifest generate_corpus(const std::filesystem::path& dir, const CorpusConfig& cfg);

}  // namespace cdse::data
