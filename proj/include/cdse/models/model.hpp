#pragma once

#include <torch/torch.h>

#include <cstdint>
#include <memory>

#include "cdse/models/model_spec.hpp"
#include "cdse/models/networks.hpp"
#include "cdse/signal/waveform.hpp"

namespace cdse::models {

// A built network together with the ModelSpec and seed that produced it.
struct Model {
  ModelSpec spec;
  std::uint64_t seed = 0;
  std::shared_ptr<Network> net;

  std::int64_t parameter_count() const;
  torch::Dtype dtype() const;

  TimeGenerator& time_generator() const;
  TfGenerator& tf_generator() const;
  Discriminator& discriminator() const;
};

// Deterministic: the same (spec, seed) yields bitwise-identical parameters.
Model build_model(const ModelSpec& spec, std::uint64_t seed);

// Strong domain tags for discriminator inputs.
struct TimeBatch {
  torch::Tensor samples;  // [B, n] or [n]
};
struct TfBatch {
  torch::Tensor magnitude;  // [B, 256, 256] or [256, 256], compressed
};

// y: [n] or [B, n]; output has the same shape.
torch::Tensor generate_time(const Model& model, const torch::Tensor& noisy);
signal::Waveform generate_time(const Model& model, const signal::Waveform& noisy);

// y_m: [256, 256] or [B, 256, 256]; output has the same shape.
torch::Tensor generate_tf(const Model& model, const torch::Tensor& noisy_magnitude);

DiscriminatorOutput discriminate(const Model& model, const TimeBatch& candidate, const TimeBatch& condition);
DiscriminatorOutput discriminate(const Model& model, const TfBatch& candidate, const TfBatch& condition);

}  // namespace cdse::models
