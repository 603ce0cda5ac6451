#pragma once

#include <torch/torch.h>

#include <memory>
#include <optional>
#include <vector>

#include "cdse/models/model_spec.hpp"

namespace cdse::models {

class Network : public torch::nn::Module {
 public:
  ~Network() override = default;
};

// Time-domain generator: [B, n] -> [B, n].
class TimeGenerator : public Network {
 public:
  virtual torch::Tensor forward(const torch::Tensor& noisy) = 0;
  virtual std::optional<std::int64_t> fixed_length() const { return std::nullopt; }
};

// TF generator on compressed magnitudes: [B, 256, 256] -> [B, 256, 256].
class TfGenerator : public Network {
 public:
  virtual torch::Tensor forward(const torch::Tensor& noisy_magnitude) = 0;
};

struct DiscriminatorOutput {
  torch::Tensor logit;        // [B]
  torch::Tensor probability;  // [B], logistic(logit)
  std::vector<torch::Tensor> features;  // D_k, k = 1..K
};

// Conditional discriminator on (candidate, condition) pairs.
class Discriminator : public Network {
 public:
  virtual DiscriminatorOutput forward(const torch::Tensor& candidate, const torch::Tensor& condition) = 0;
  virtual Domain domain() const = 0;
  virtual int feature_depth() const = 0;
};

// Strided-conv encoder / transposed-conv decoder with channel-concatenated
// skips; tanh output. Accepts only its fixed training length.
class UNet1d : public TimeGenerator {
 public:
  explicit UNet1d(const ModelSpec& spec);
  torch::Tensor forward(const torch::Tensor& noisy) override;
  std::optional<std::int64_t> fixed_length() const override { return fixed_length_; }

 private:
  std::int64_t fixed_length_;
  std::vector<torch::nn::Conv1d> down_;
  std::vector<torch::nn::PReLU> down_act_;
  std::vector<torch::nn::ConvTranspose1d> up_;
  std::vector<torch::nn::PReLU> up_act_;
};

// Non-causal stack of residual blocks with dilated convolutions and gated
// activations tanh(a) * sigmoid(b); skip outputs are summed into a 1x1 head.
class GatedStack : public TimeGenerator {
 public:
  explicit GatedStack(const ModelSpec& spec);
  torch::Tensor forward(const torch::Tensor& noisy) override;

  // Test mode: every nonlinearity becomes the identity so the network is
  // affine and its receptive field can be measured by perturbation.
  void set_linearized(bool on) { linearized_ = on; }
  bool linearized() const { return linearized_; }

  // Gated activations of the last forward pass (only recorded on request).
  void record_activations(bool on) { record_ = on; }
  const std::vector<torch::Tensor>& recorded_activations() const { return recorded_; }

 private:
  int channels_;
  bool linearized_ = false;
  bool record_ = false;
  std::vector<torch::Tensor> recorded_;
  torch::nn::Conv1d input_{nullptr};
  std::vector<torch::nn::Conv1d> dilated_;
  std::vector<torch::nn::Conv1d> residual_;
  std::vector<torch::nn::Conv1d> skip_;
  torch::nn::Conv1d head1_{nullptr};
  torch::nn::Conv1d head2_{nullptr};
};

// 4x4 stride-2 encoder / decoder with concatenated skips; sigmoid output so
// the result is a valid compressed magnitude.
class UNet2d : public TfGenerator {
 public:
  explicit UNet2d(const ModelSpec& spec);
  torch::Tensor forward(const torch::Tensor& noisy_magnitude) override;

 private:
  std::vector<torch::nn::Conv2d> down_;
  std::vector<torch::nn::ConvTranspose2d> up_;
};

class CasNet : public TfGenerator {
 public:
  explicit CasNet(const ModelSpec& spec);
  torch::Tensor forward(const torch::Tensor& noisy_magnitude) override;
  UNet2d& stage(std::size_t i) { return *stages_.at(i); }

 private:
  std::vector<std::shared_ptr<UNet2d>> stages_;
};

class Discriminator1d : public Discriminator {
 public:
  explicit Discriminator1d(const ModelSpec& spec);
  DiscriminatorOutput forward(const torch::Tensor& candidate, const torch::Tensor& condition) override;
  Domain domain() const override { return Domain::kTime; }
  int feature_depth() const override { return static_cast<int>(layers_.size()); }

 private:
  std::vector<torch::nn::Conv1d> layers_;
  torch::nn::Conv1d head_{nullptr};
};

class Discriminator2d : public Discriminator {
 public:
  explicit Discriminator2d(const ModelSpec& spec);
  DiscriminatorOutput forward(const torch::Tensor& candidate, const torch::Tensor& condition) override;
  Domain domain() const override { return Domain::kTf; }
  int feature_depth() const override { return static_cast<int>(layers_.size()); }

 private:
  std::vector<torch::nn::Conv2d> layers_;
  torch::nn::Conv2d head_{nullptr};
};

}  // namespace cdse::models
