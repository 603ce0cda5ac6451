#pragma once

#include <vector>

#include "cdse/signal/waveform.hpp"

namespace cdse::metrics {

struct SsnrOptions {
  int frame = 480;  // 30 ms
  int hop = 240;
  double min_db = -10.0;
  double max_db = 35.0;
  // Frames whose clean energy is more than this many dB below the loudest
  // clean frame count as silent and are skipped.
  double silence_range_db = 40.0;
};

struct SsnrFrames {
  std::vector<double> clamped_db;  // one per kept frame
  std::vector<int> kept;           // frame indices
};

// Mean over non-silent frames of clamp(10 log10(|x_f|^2 / |x_f - x_hat_f|^2)).
double ssnr(const signal::Waveform& clean, const signal::Waveform& estimate, const SsnrOptions& opts = {});
SsnrFrames ssnr_frames(const signal::Waveform& clean, const signal::Waveform& estimate, const SsnrOptions& opts = {});

// Frame-level distortions on 30 ms Hann frames with a 7.5 ms skip, as used
// by the composite measures.
std::vector<double> llr_frames(const signal::Waveform& clean, const signal::Waveform& estimate);
std::vector<double> wss_frames(const signal::Waveform& clean, const signal::Waveform& estimate);

// Mean of the lowest 95 % of frame values.
double trimmed_mean(std::vector<double> values, double keep = 0.95);
double llr(const signal::Waveform& clean, const signal::Waveform& estimate);
double wss(const signal::Waveform& clean, const signal::Waveform& estimate);

struct Composite {
  double csig = 0.0;
  double cbak = 0.0;
  double covl = 0.0;
};

// CSIG = 3.093 - 1.029 LLR + 0.603 PESQ - 0.009 WSS
// CBAK = 1.634 + 0.478 PESQ - 0.007 WSS + 0.063 SSNR
// COVL = 1.594 + 0.805 PESQ - 0.512 LLR - 0.007 WSS, each clipped to [1, 5].
Composite composite_measures(double pesq, double llr, double wss, double ssnr_db);

}  // namespace cdse::metrics
