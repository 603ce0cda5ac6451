#include "cdse/signal/waveform.hpp"

#include <cmath>
#include <string>

#include "cdse/error.hpp"

namespace cdse::signal {

Waveform::Waveform(std::vector<double> samples, int sample_rate)
    : samples_(std::move(samples)), sample_rate_(sample_rate) {
  require(sample_rate_ == kSampleRate, ErrorCode::kUnsupportedSampleRate,
          "only 16 kHz audio is supported, got " + std::to_string(sample_rate_));
  for (double s : samples_) {
    require(std::isfinite(s), ErrorCode::kNonFinite, "waveform contains a non-finite sample");
  }
}

double Waveform::mean_power() const noexcept {
  if (samples_.empty()) return 0.0;
  double acc = 0.0;
  for (double s : samples_) acc += s * s;
  return acc / static_cast<double>(samples_.size());
}

}  // namespace cdse::signal
