#pragma once

#include "cdse/signal/waveform.hpp"

namespace cdse::metrics {

struct WienerOptions {
  int frame = 512;  // 32 ms, square-root Hann analysis and synthesis
  int hop = 256;
  double noise_init_seconds = 0.12;
  double smoothing = 0.98;  // decision-directed alpha
  double gain_floor = 0.1;
};

// Spectral Wiener gain with decision-directed a-priori SNR. The noise PSD is
// the mean periodogram of the leading noise-only segment. Output length
// equals input length. Throws kTooShort below noise segment + one frame.
signal::Waveform wiener_baseline(const signal::Waveform& noisy, const WienerOptions& opts = {});

}  // namespace cdse::metrics
