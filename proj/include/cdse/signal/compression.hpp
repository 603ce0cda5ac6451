#pragma once

#include <torch/torch.h>

namespace cdse::signal {

// log1p compression scaled so that 0 -> 0 and `ceiling` -> 1. Monotone and
// exactly invertible on [0, inf).
class MagnitudeCompressor {
 public:
  explicit MagnitudeCompressor(double ceiling = 255.0);

  torch::Tensor compress(const torch::Tensor& linear) const;
  torch::Tensor decompress(const torch::Tensor& compressed) const;

  double ceiling() const noexcept { return ceiling_; }

 private:
  double ceiling_;
  double scale_;  // log1p(ceiling)
};

}  // namespace cdse::signal
