#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace cdse::signal {

inline constexpr int kSampleRate = 16000;

// Mono track at 16 kHz. Samples are nominally in [-1, 1] and always finite.
class Waveform {
 public:
  Waveform() = default;
  explicit Waveform(std::vector<double> samples, int sample_rate = kSampleRate);

  static Waveform zeros(std::int64_t n) { return Waveform(std::vector<double>(static_cast<std::size_t>(n), 0.0)); }

  std::span<const double> samples() const noexcept { return samples_; }
  const std::vector<double>& data() const noexcept { return samples_; }
  std::vector<double>& mutable_data() noexcept { return samples_; }

  std::int64_t size() const noexcept { return static_cast<std::int64_t>(samples_.size()); }
  bool empty() const noexcept { return samples_.empty(); }
  int sample_rate() const noexcept { return sample_rate_; }
  double duration_seconds() const noexcept { return static_cast<double>(samples_.size()) / sample_rate_; }

  double mean_power() const noexcept;

  bool operator==(const Waveform&) const = default;

 private:
  std::vector<double> samples_;
  int sample_rate_ = kSampleRate;
};

}  // namespace cdse::signal
