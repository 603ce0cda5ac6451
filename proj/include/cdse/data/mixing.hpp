#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <string>
#include <vector>

#include "cdse/signal/waveform.hpp"

namespace cdse::data {

struct TrackPair {
  signal::Waveform clean;
  signal::Waveform noisy;
  double snr_db = 0.0;
  std::string noise_id;
  std::string speaker_id;
  std::string sentence_id;
  std::string transcript;

  bool operator==(const TrackPair&) const = default;
};

// 10 log10(P_clean / P_(noisy - clean)).
double measured_snr_db(const signal::Waveform& clean, const signal::Waveform& noisy);

// Gain applied to noise of power p_noise so the mixture sits at snr_db.
double mix_gain(double p_clean, double p_noise, double snr_db);

// Picks a clean.n-sample noise segment at a uniform offset drawn from
// mt19937_64(seed), scales it to the target SNR against the clean power and
// the power of that segment, and adds it.
TrackPair mix_at_snr(const signal::Waveform& clean, const signal::Waveform& noise, double snr_db, std::uint64_t seed);

enum class RemainderPolicy { kPad, kDrop };

std::vector<TrackPair> segment_fixed(const TrackPair& pair, std::int64_t length = 16000,
                                     RemainderPolicy policy = RemainderPolicy::kPad);

struct VariableBatch {
  torch::Tensor clean;  // [B, n_max], zero padded
  torch::Tensor noisy;
  torch::Tensor mask;   // [B, n_max] bool, true on real samples
  std::vector<std::int64_t> lengths;
  std::vector<std::size_t> indices;  // positions in the input list
};

// Consecutive groups of at most max_batch pairs, in input order.
std::vector<VariableBatch> batch_variable(const std::vector<TrackPair>& pairs, std::size_t max_batch,
                                          torch::Dtype dtype = torch::kFloat32);

}  // namespace cdse::data
