#pragma once

#include <filesystem>

#include "cdse/signal/waveform.hpp"

namespace cdse::metrics {

class PesqScorer {
 public:
  virtual ~PesqScorer() = default;
  virtual double score(const signal::Waveform& reference, const signal::Waveform& degraded) const = 0;
};

// Runs `<program> <reference.wav> <degraded.wav>` and reads the score from
// the last non-empty line of its stdout. `.py` programs run under python3.
// Failures raise ExternalServiceError(kExternalTool).
class ExternalPesq final : public PesqScorer {
 public:
  explicit ExternalPesq(std::filesystem::path program);
  double score(const signal::Waveform& reference, const signal::Waveform& degraded) const override;
  const std::filesystem::path& program() const noexcept { return program_; }

 private:
  std::filesystem::path program_;
};

}  // namespace cdse::metrics
