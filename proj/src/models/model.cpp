#include "cdse/models/model.hpp"

#include <mutex>

#include "cdse/error.hpp"
#include "cdse/signal/stft.hpp"

namespace cdse::models {
namespace {

// Parameter initialisation draws from torch's global generator.
std::mutex& build_mutex() {
  static std::mutex m;
  return m;
}

std::shared_ptr<Network> instantiate(const ModelSpec& spec) {
  switch (spec.family) {
    case Family::kUnet1d: return std::make_shared<UNet1d>(spec);
    case Family::kGatedStack: return std::make_shared<GatedStack>(spec);
    case Family::kUnet2d: return std::make_shared<UNet2d>(spec);
    case Family::kCasnet: return std::make_shared<CasNet>(spec);
    case Family::kDisc1d: return std::make_shared<Discriminator1d>(spec);
    case Family::kDisc2d: return std::make_shared<Discriminator2d>(spec);
  }
  fail(ErrorCode::kInvalidSpec, "unknown family");
}

torch::Tensor as_batch(const torch::Tensor& t, std::int64_t item_dims) {
  return t.dim() == item_dims ? t.unsqueeze(0) : t;
}

}  // namespace

std::int64_t Model::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& p : net->parameters()) n += p.numel();
  return n;
}

torch::Dtype Model::dtype() const {
  auto params = net->parameters();
  return params.empty() ? torch::kFloat32 : params.front().scalar_type();
}

TimeGenerator& Model::time_generator() const {
  auto* g = dynamic_cast<TimeGenerator*>(net.get());
  require(g != nullptr, ErrorCode::kDomainMismatch,
          std::string(to_string(spec.family)) + " is not a time-domain generator");
  return *g;
}

TfGenerator& Model::tf_generator() const {
  auto* g = dynamic_cast<TfGenerator*>(net.get());
  require(g != nullptr, ErrorCode::kDomainMismatch, std::string(to_string(spec.family)) + " is not a TF generator");
  return *g;
}

Discriminator& Model::discriminator() const {
  auto* d = dynamic_cast<Discriminator*>(net.get());
  require(d != nullptr, ErrorCode::kDomainMismatch, std::string(to_string(spec.family)) + " is not a discriminator");
  return *d;
}

Model build_model(const ModelSpec& spec, std::uint64_t seed) {
  spec.validate();
  std::lock_guard lock(build_mutex());
  torch::manual_seed(seed);
  Model m{spec, seed, instantiate(spec)};
  return m;
}

torch::Tensor generate_time(const Model& model, const torch::Tensor& noisy) {
  auto& g = model.time_generator();
  require(noisy.dim() == 1 || noisy.dim() == 2, ErrorCode::kShapeMismatch, "time generator expects [n] or [B, n]");
  auto out = g.forward(as_batch(noisy, 1).to(model.dtype()));
  return noisy.dim() == 1 ? out.squeeze(0) : out;
}

signal::Waveform generate_time(const Model& model, const signal::Waveform& noisy) {
  torch::NoGradGuard no_grad;
  return signal::to_waveform(generate_time(model, signal::to_tensor(noisy, model.dtype())));
}

torch::Tensor generate_tf(const Model& model, const torch::Tensor& noisy_magnitude) {
  auto& g = model.tf_generator();
  require(noisy_magnitude.dim() >= 2 && noisy_magnitude.dim() <= 3 &&
              noisy_magnitude.size(-1) == signal::kEmbeddingSize && noisy_magnitude.size(-2) == signal::kEmbeddingSize,
          ErrorCode::kShapeMismatch, "TF generator expects [256, 256] or [B, 256, 256]");
  auto out = g.forward(as_batch(noisy_magnitude, 2).to(model.dtype()));
  return noisy_magnitude.dim() == 2 ? out.squeeze(0) : out;
}

DiscriminatorOutput discriminate(const Model& model, const TimeBatch& candidate, const TimeBatch& condition) {
  auto& d = model.discriminator();
  require(d.domain() == Domain::kTime, ErrorCode::kDomainMismatch, "disc2d cannot score time-domain pairs");
  require(candidate.samples.sizes() == condition.samples.sizes(), ErrorCode::kShapeMismatch,
          "candidate and condition shapes differ");
  return d.forward(as_batch(candidate.samples, 1).to(model.dtype()), as_batch(condition.samples, 1).to(model.dtype()));
}

DiscriminatorOutput discriminate(const Model& model, const TfBatch& candidate, const TfBatch& condition) {
  auto& d = model.discriminator();
  require(d.domain() == Domain::kTf, ErrorCode::kDomainMismatch, "disc1d cannot score TF pairs");
  require(candidate.magnitude.sizes() == condition.magnitude.sizes(), ErrorCode::kShapeMismatch,
          "candidate and condition shapes differ");
  return d.forward(as_batch(candidate.magnitude, 2).to(model.dtype()),
                   as_batch(condition.magnitude, 2).to(model.dtype()));
}

}  // namespace cdse::models
