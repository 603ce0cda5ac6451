#pragma once

#include <vector>

#include "cdse/signal/waveform.hpp"

namespace cdse::metrics {

// Short-time objective intelligibility: both signals are resampled to
// 10 kHz, frames more than 40 dB below the loudest clean frame are dropped,
// and one-third-octave envelopes are correlated over 384 ms segments.
// Throws kTooShort when fewer than 30 frames remain, kAllSilent when the
// clean track has no energy.
double stoi(const signal::Waveform& clean, const signal::Waveform& estimate);

// Polyphase resampling by up/down with a Kaiser-windowed sinc (60 dB
// stopband), output aligned to the input's first sample.
std::vector<double> resample_poly(const std::vector<double>& x, int up, int down);

}  // namespace cdse::metrics
