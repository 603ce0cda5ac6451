#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <functional>
#include <optional>
#include <vector>

#include "cdse/harness/config.hpp"
#include "cdse/models/model.hpp"
#include "cdse/signal/waveform.hpp"

namespace cdse::harness {

// Maps compressed noisy magnitudes [B, 256, 256] to compressed estimates.
using TfMap = std::function<torch::Tensor(const torch::Tensor&)>;

// compress |STFT y| -> generator -> decompress -> ISTFT with the noisy phase.
signal::Waveform enhance_tf(const TfMap& generator, const signal::Waveform& noisy);
// Whole-track generation; fixed-length generators run on zero-padded
// segments of their training length and the result is trimmed.
signal::Waveform enhance_time(const models::Model& generator, const signal::Waveform& noisy);

class Enhancer {
 public:
  // Wiener baseline.
  Enhancer();
  Enhancer(Framework framework, models::Model generator);

  Framework framework() const noexcept { return framework_; }
  signal::Waveform operator()(const signal::Waveform& noisy) const;
  // Output order follows input order.
  std::vector<signal::Waveform> operator()(const std::vector<signal::Waveform>& noisy) const;

 private:
  Framework framework_;
  std::optional<models::Model> generator_;
};

// kCheckpointMismatch when the checkpoint was written by another framework
// or its spec differs from cfg.generator.
Enhancer load_enhancer(const RunConfig& cfg, const std::filesystem::path& checkpoint);

}  // namespace cdse::harness
