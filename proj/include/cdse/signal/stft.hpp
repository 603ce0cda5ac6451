#pragma once

#include <torch/torch.h>

#include <cstdint>

#include "cdse/signal/waveform.hpp"

namespace cdse::signal {

// Fixed TF embedding geometry: every supported track maps to 256 frames of
// 256 one-sided bins from a 510-point transform.
inline constexpr int kEmbeddingSize = 256;
inline constexpr int kWindowLength = 510;
inline constexpr int kFftSize = 510;

enum class WindowKind { kHann };

struct StftConfig {
  // Minimum zero padding on each side of the track, in samples. Keeps the
  // first and last real samples away from the near-zero window tails.
  std::int64_t edge_margin = 32;
  std::int64_t min_length = 8000;
  std::int64_t max_length = 160000;
  // Largest linear magnitude the compressor maps into [0, 1]. A full-scale
  // sinusoid under the 510-point Hann window peaks at 127.5; 255 bounds any
  // input with |x| <= 1.
  double magnitude_ceiling = 255.0;

  bool operator==(const StftConfig&) const = default;
};

struct StftPlan {
  int fft_size = kFftSize;
  int window_length = kWindowLength;
  std::int64_t hop = 1;
  WindowKind window = WindowKind::kHann;
  int n_frames = kEmbeddingSize;
  int n_bins = kEmbeddingSize;
  std::int64_t original_length = 0;
  std::int64_t pad_left = 0;
  std::int64_t pad_right = 0;

  std::int64_t padded_length() const noexcept { return original_length + pad_left + pad_right; }
  // Overlap-add inversion is well posed only when consecutive frames overlap.
  bool invertible() const noexcept { return hop < window_length; }

  bool operator==(const StftPlan&) const = default;
};

// Dynamic time resolution: the hop is chosen per track so that exactly 256
// frames cover the zero-padded track.
//   hop = ceil((n + 2 * edge_margin - 510) / 255), padded = 510 + 255 * hop.
StftPlan plan_stft(std::int64_t n, const StftConfig& cfg = {});

// Magnitude and phase are laid out [..., bins, frames] (frequency rows).
struct TfRepresentation {
  torch::Tensor magnitude;
  torch::Tensor phase;
  StftPlan plan;
};

// Periodic Hann window of the plan's length.
torch::Tensor analysis_window(const StftPlan& plan, torch::Dtype dtype = torch::kFloat64);

// Differentiable with respect to `samples` (shape [..., n]).
TfRepresentation stft(const torch::Tensor& samples, const StftPlan& plan);
TfRepresentation stft(const Waveform& wave, const StftPlan& plan);

// Least-squares overlap-add inversion. Differentiable with respect to
// `magnitude`; phase is taken as given. Output shape [..., original_length].
torch::Tensor istft(const torch::Tensor& magnitude, const torch::Tensor& phase, const StftPlan& plan);
Waveform istft(const TfRepresentation& tf);

// Summed squared analysis windows over the padded track (the LS normaliser).
torch::Tensor window_envelope(const StftPlan& plan, torch::Dtype dtype = torch::kFloat64);

torch::Tensor to_tensor(const Waveform& wave, torch::Dtype dtype = torch::kFloat64);
Waveform to_waveform(const torch::Tensor& samples);

}  // namespace cdse::signal
