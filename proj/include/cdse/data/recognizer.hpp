#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "cdse/signal/waveform.hpp"

namespace cdse::data {

// Isolated-word template matcher for the synthetic vocabulary: energy-based
// word segmentation, log mel-band features, DTW against words rendered by a
// set of reference voices. Backs the bundled ASR stub.
class TemplateRecognizer {
 public:
  struct Options {
    int reference_voices = 6;
    std::uint64_t seed = 97;
  };

  TemplateRecognizer();
  explicit TemplateRecognizer(Options opts);

  std::string transcribe(const signal::Waveform& wave) const;

  using Features = std::vector<std::vector<double>>;  // [frame][band]
  static Features features(const signal::Waveform& wave);
  // Word spans as [first_frame, last_frame) over features(wave).
  static std::vector<std::pair<int, int>> segment(const signal::Waveform& wave);

 private:
  std::vector<std::pair<std::string, Features>> templates_;
};

}  // namespace cdse::data
