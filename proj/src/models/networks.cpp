#include "cdse/models/networks.hpp"

#include <string>

#include "cdse/error.hpp"

namespace cdse::models {
namespace {

namespace nn = torch::nn;

int channels_at(const ModelSpec& spec, int level) {
  const int mult = std::min(1 << std::min(level, 30), spec.max_channel_multiplier);
  return spec.base_channels * mult;
}

torch::Tensor leaky(const torch::Tensor& x) { return torch::leaky_relu(x, 0.2); }

}  // namespace

// ---------------------------------------------------------------- UNet1d

UNet1d::UNet1d(const ModelSpec& spec) : fixed_length_(spec.fixed_length) {
  const int levels = spec.depth / 2;
  const int k = spec.kernel_size;
  for (int i = 0; i < levels; ++i) {
    const int in = i == 0 ? 1 : channels_at(spec, i - 1);
    down_.push_back(register_module("down" + std::to_string(i),
                                    nn::Conv1d(nn::Conv1dOptions(in, channels_at(spec, i), k).stride(2).padding(k / 2))));
    down_act_.push_back(register_module("down_act" + std::to_string(i), nn::PReLU()));
  }
  // up_[j] produces the resolution of encoder level j - 1 (j = levels-1 .. 0).
  const int k_up = k + 1;
  up_.resize(static_cast<std::size_t>(levels), nullptr);
  up_act_.resize(static_cast<std::size_t>(levels), nullptr);
  for (int j = levels - 1; j >= 0; --j) {
    const int in = j == levels - 1 ? channels_at(spec, j) : 2 * channels_at(spec, j);
    const int out = j == 0 ? 1 : channels_at(spec, j - 1);
    up_[static_cast<std::size_t>(j)] = register_module(
        "up" + std::to_string(j),
        nn::ConvTranspose1d(nn::ConvTranspose1dOptions(in, out, k_up).stride(2).padding((k_up - 2) / 2)));
    if (j > 0) up_act_[static_cast<std::size_t>(j)] = register_module("up_act" + std::to_string(j), nn::PReLU());
  }
}

torch::Tensor UNet1d::forward(const torch::Tensor& noisy) {
  require(noisy.dim() == 2, ErrorCode::kShapeMismatch, "unet1d expects [batch, samples]");
  require(noisy.size(1) == fixed_length_, ErrorCode::kFixedLengthViolation,
          "unet1d accepts only " + std::to_string(fixed_length_) + "-sample inputs, got " +
              std::to_string(noisy.size(1)));
  std::vector<torch::Tensor> skips;
  auto x = noisy.unsqueeze(1);
  for (std::size_t i = 0; i < down_.size(); ++i) {
    x = down_act_[i](down_[i](x));
    skips.push_back(x);
  }
  for (std::size_t j = up_.size(); j-- > 0;) {
    x = up_[j](x);
    if (j > 0) x = torch::cat({up_act_[j](x), skips[j - 1]}, 1);
  }
  return torch::tanh(x).squeeze(1);
}

// ------------------------------------------------------------ GatedStack

GatedStack::GatedStack(const ModelSpec& spec) : channels_(spec.base_channels) {
  const int c = channels_;
  const int k = spec.kernel_size;
  input_ = register_module("input", nn::Conv1d(nn::Conv1dOptions(1, c, 1)));
  int b = 0;
  for (int cycle = 0; cycle < spec.dilation_cycles; ++cycle) {
    for (int d : spec.dilation_schedule) {
      const auto id = std::to_string(b++);
      dilated_.push_back(register_module(
          "dilated" + id, nn::Conv1d(nn::Conv1dOptions(c, 2 * c, k).dilation(d).padding(d * (k - 1) / 2))));
      residual_.push_back(register_module("residual" + id, nn::Conv1d(nn::Conv1dOptions(c, c, 1))));
      skip_.push_back(register_module("skip" + id, nn::Conv1d(nn::Conv1dOptions(c, c, 1))));
    }
  }
  head1_ = register_module("head1", nn::Conv1d(nn::Conv1dOptions(c, c, 1)));
  head2_ = register_module("head2", nn::Conv1d(nn::Conv1dOptions(c, 1, 1)));
}

torch::Tensor GatedStack::forward(const torch::Tensor& noisy) {
  require(noisy.dim() == 2, ErrorCode::kShapeMismatch, "gated stack expects [batch, samples]");
  if (record_) recorded_.clear();
  auto x = input_(noisy.unsqueeze(1));
  torch::Tensor skip_sum;
  for (std::size_t b = 0; b < dilated_.size(); ++b) {
    auto pre = dilated_[b](x);
    auto parts = pre.chunk(2, 1);
    auto z = linearized_ ? parts[0] : torch::tanh(parts[0]) * torch::sigmoid(parts[1]);
    if (record_) recorded_.push_back(z.detach());
    x = x + residual_[b](z);
    auto s = skip_[b](z);
    skip_sum = skip_sum.defined() ? skip_sum + s : s;
  }
  auto h = linearized_ ? skip_sum : torch::relu(skip_sum);
  h = head1_(h);
  h = linearized_ ? h : torch::relu(h);
  return head2_(h).squeeze(1);
}

// ---------------------------------------------------------------- UNet2d

UNet2d::UNet2d(const ModelSpec& spec) {
  const int levels = spec.depth / 2;
  for (int i = 0; i < levels; ++i) {
    const int in = i == 0 ? 1 : channels_at(spec, i - 1);
    down_.push_back(register_module("down" + std::to_string(i),
                                    nn::Conv2d(nn::Conv2dOptions(in, channels_at(spec, i), 4).stride(2).padding(1))));
  }
  up_.resize(static_cast<std::size_t>(levels), nullptr);
  for (int j = levels - 1; j >= 0; --j) {
    const int in = j == levels - 1 ? channels_at(spec, j) : 2 * channels_at(spec, j);
    const int out = j == 0 ? 1 : channels_at(spec, j - 1);
    up_[static_cast<std::size_t>(j)] = register_module(
        "up" + std::to_string(j), nn::ConvTranspose2d(nn::ConvTranspose2dOptions(in, out, 4).stride(2).padding(1)));
  }
}

torch::Tensor UNet2d::forward(const torch::Tensor& noisy_magnitude) {
  require(noisy_magnitude.dim() == 3, ErrorCode::kShapeMismatch, "unet2d expects [batch, bins, frames]");
  const auto scale = std::int64_t{1} << down_.size();
  require(noisy_magnitude.size(1) % scale == 0 && noisy_magnitude.size(2) % scale == 0, ErrorCode::kShapeMismatch,
          "unet2d input sides must be divisible by 2^(depth/2)");
  std::vector<torch::Tensor> skips;
  auto x = noisy_magnitude.unsqueeze(1);
  for (std::size_t i = 0; i < down_.size(); ++i) {
    x = leaky(down_[i](x));
    skips.push_back(x);
  }
  for (std::size_t j = up_.size(); j-- > 0;) {
    x = up_[j](x);
    if (j > 0) x = torch::cat({torch::relu(x), skips[j - 1]}, 1);
  }
  // The decoder output is a soft mask on the input magnitude.
  return noisy_magnitude * torch::sigmoid(x).squeeze(1);
}

// ---------------------------------------------------------------- CasNet

CasNet::CasNet(const ModelSpec& spec) {
  for (std::size_t i = 0; i < spec.stages.size(); ++i) {
    stages_.push_back(register_module("stage" + std::to_string(i), std::make_shared<UNet2d>(spec.stages[i])));
  }
}

torch::Tensor CasNet::forward(const torch::Tensor& noisy_magnitude) {
  auto x = noisy_magnitude;
  for (auto& s : stages_) x = s->forward(x);
  return x;
}

// -------------------------------------------------------- Discriminators

Discriminator1d::Discriminator1d(const ModelSpec& spec) {
  const int k = spec.kernel_size;
  for (int i = 0; i < spec.depth; ++i) {
    const int in = i == 0 ? 2 : channels_at(spec, i - 1);
    layers_.push_back(register_module("layer" + std::to_string(i),
                                      nn::Conv1d(nn::Conv1dOptions(in, channels_at(spec, i), k).stride(2).padding(k / 2))));
  }
  head_ = register_module("head", nn::Conv1d(nn::Conv1dOptions(channels_at(spec, spec.depth - 1), 1, 1)));
}

DiscriminatorOutput Discriminator1d::forward(const torch::Tensor& candidate, const torch::Tensor& condition) {
  require(candidate.dim() == 2 && condition.sizes() == candidate.sizes(), ErrorCode::kShapeMismatch,
          "disc1d expects matching [batch, samples] inputs");
  DiscriminatorOutput out;
  auto x = torch::stack({candidate, condition}, 1);
  for (auto& layer : layers_) {
    x = leaky(layer(x));
    out.features.push_back(x);
  }
  out.logit = head_(x).mean({1, 2});
  out.probability = torch::sigmoid(out.logit);
  return out;
}

Discriminator2d::Discriminator2d(const ModelSpec& spec) {
  for (int i = 0; i < spec.depth; ++i) {
    const int in = i == 0 ? 2 : channels_at(spec, i - 1);
    layers_.push_back(register_module("layer" + std::to_string(i),
                                      nn::Conv2d(nn::Conv2dOptions(in, channels_at(spec, i), 4).stride(2).padding(1))));
  }
  head_ = register_module("head",
                          nn::Conv2d(nn::Conv2dOptions(channels_at(spec, spec.depth - 1), 1, 3).padding(1)));
}

DiscriminatorOutput Discriminator2d::forward(const torch::Tensor& candidate, const torch::Tensor& condition) {
  require(candidate.dim() == 3 && condition.sizes() == candidate.sizes(), ErrorCode::kShapeMismatch,
          "disc2d expects matching [batch, bins, frames] inputs");
  DiscriminatorOutput out;
  auto x = torch::stack({candidate, condition}, 1);
  for (auto& layer : layers_) {
    x = leaky(layer(x));
    out.features.push_back(x);
  }
  out.logit = head_(x).mean({1, 2, 3});
  out.probability = torch::sigmoid(out.logit);
  return out;
}

}  // namespace cdse::models
