#include "cdse/metrics/wiener.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "cdse/dsp/fft.hpp"
#include "cdse/error.hpp"

namespace cdse::metrics {

signal::Waveform wiener_baseline(const signal::Waveform& noisy, const WienerOptions& opts) {
  const auto init = static_cast<std::int64_t>(std::lround(opts.noise_init_seconds * noisy.sample_rate()));
  require(noisy.size() >= init + opts.frame, ErrorCode::kTooShort,
          "Wiener filter needs at least " + std::to_string(init + opts.frame) + " samples");
  const auto& x = noisy.data();
  const auto n = static_cast<std::size_t>(noisy.size());
  const auto frame = static_cast<std::size_t>(opts.frame);
  const auto hop = static_cast<std::size_t>(opts.hop);
  const dsp::RealFft fft(opts.frame);
  auto window = dsp::hann_window(opts.frame, true);
  for (auto& w : window) w = std::sqrt(w);
  const auto bins = static_cast<std::size_t>(fft.bins());

  std::vector<double> buf(frame);
  std::vector<std::complex<double>> spec;

  std::vector<double> noise(bins, 0.0);
  int noise_frames = 0;
  for (std::size_t s = 0; s + frame <= static_cast<std::size_t>(init); s += hop, ++noise_frames) {
    for (std::size_t i = 0; i < frame; ++i) buf[i] = window[i] * x[s + i];
    fft.forward(buf, spec);
    for (std::size_t k = 0; k < bins; ++k) noise[k] += std::norm(spec[k]);
  }
  for (auto& v : noise) v = std::max(v / std::max(noise_frames, 1), 1e-20);

  // Pad so every sample is covered by two overlapping frames.
  const std::size_t lead = frame - hop;
  const std::size_t frames = (n + lead + hop - 1) / hop;
  std::vector<double> padded(frames * hop + frame, 0.0);
  std::copy(x.begin(), x.end(), padded.begin() + static_cast<std::ptrdiff_t>(lead));
  std::vector<double> out(padded.size(), 0.0);

  std::vector<double> prev_clean(bins, 0.0);  // |S_hat|^2 of the previous frame
  std::vector<double> time;
  for (std::size_t f = 0; f < frames; ++f) {
    const std::size_t s = f * hop;
    for (std::size_t i = 0; i < frame; ++i) buf[i] = window[i] * padded[s + i];
    fft.forward(buf, spec);
    for (std::size_t k = 0; k < bins; ++k) {
      const double power = std::norm(spec[k]);
      const double gamma = power / noise[k];
      const double xi = opts.smoothing * prev_clean[k] / noise[k] + (1.0 - opts.smoothing) * std::max(gamma - 1.0, 0.0);
      const double gain = std::max(xi / (1.0 + xi), opts.gain_floor);
      spec[k] *= gain;
      prev_clean[k] = gain * gain * power;
    }
    fft.inverse(spec, time);
    for (std::size_t i = 0; i < frame; ++i) out[s + i] += window[i] * time[i];
  }
  return signal::Waveform(std::vector<double>(out.begin() + static_cast<std::ptrdiff_t>(lead),
                                              out.begin() + static_cast<std::ptrdiff_t>(lead + n)),
                          noisy.sample_rate());
}

}  // namespace cdse::metrics
