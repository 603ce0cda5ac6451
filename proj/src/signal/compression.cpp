#include "cdse/signal/compression.hpp"

#include <cmath>

#include "cdse/error.hpp"

namespace cdse::signal {

MagnitudeCompressor::MagnitudeCompressor(double ceiling) : ceiling_(ceiling), scale_(std::log1p(ceiling)) {
  require(std::isfinite(ceiling) && ceiling > 0.0, ErrorCode::kConfig, "magnitude ceiling must be positive");
}

torch::Tensor MagnitudeCompressor::compress(const torch::Tensor& linear) const {
  {
    torch::NoGradGuard no_grad;
    require(linear.numel() == 0 || linear.min().item<double>() >= 0.0, ErrorCode::kNegativeInput,
            "magnitude compression requires nonnegative input");
  }
  return torch::log1p(linear) / scale_;
}

torch::Tensor MagnitudeCompressor::decompress(const torch::Tensor& compressed) const {
  return torch::expm1(compressed * scale_);
}

}  // namespace cdse::signal
