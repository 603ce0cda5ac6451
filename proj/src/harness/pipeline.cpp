#include "cdse/harness/pipeline.hpp"

#include "cdse/error.hpp"
#include "cdse/metrics/wiener.hpp"
#include "cdse/models/checkpoint.hpp"
#include "cdse/signal/compression.hpp"
#include "cdse/signal/stft.hpp"

namespace cdse::harness {

signal::Waveform enhance_tf(const TfMap& generator, const signal::Waveform& noisy) {
  torch::NoGradGuard no_grad;
  const signal::MagnitudeCompressor compressor;
  const auto plan = signal::plan_stft(noisy.size());
  const auto tf = signal::stft(noisy, plan);
  auto estimate = generator(compressor.compress(tf.magnitude).unsqueeze(0)).squeeze(0).to(torch::kFloat64);
  require(estimate.sizes() == tf.magnitude.sizes(), ErrorCode::kShapeMismatch, "TF generator changed the shape");
  return signal::to_waveform(signal::istft(compressor.decompress(estimate), tf.phase, plan));
}

signal::Waveform enhance_time(const models::Model& generator, const signal::Waveform& noisy) {
  const auto fixed = generator.time_generator().fixed_length();
  if (!fixed) return models::generate_time(generator, noisy);
  torch::NoGradGuard no_grad;
  const auto n = noisy.size();
  const auto segments = (n + *fixed - 1) / *fixed;
  auto padded = torch::zeros({segments * *fixed}, torch::kFloat64);
  padded.narrow(0, 0, n).copy_(signal::to_tensor(noisy));
  auto out = models::generate_time(generator, padded.reshape({segments, *fixed}));
  return signal::to_waveform(out.reshape({-1}).narrow(0, 0, n).to(torch::kFloat64));
}

Enhancer::Enhancer() : framework_(Framework::kWiener) {}

Enhancer::Enhancer(Framework framework, models::Model generator)
    : framework_(framework), generator_(std::move(generator)) {
  require(framework_ != Framework::kWiener, ErrorCode::kConfig, "the Wiener baseline has no generator");
  generator_->net->eval();
}

signal::Waveform Enhancer::operator()(const signal::Waveform& noisy) const {
  if (framework_ == Framework::kWiener) return metrics::wiener_baseline(noisy);
  if (generator_->spec.domain() == models::Domain::kTime) return enhance_time(*generator_, noisy);
  const auto& model = *generator_;
  return enhance_tf([&model](const torch::Tensor& m) { return models::generate_tf(model, m); }, noisy);
}

std::vector<signal::Waveform> Enhancer::operator()(const std::vector<signal::Waveform>& noisy) const {
  std::vector<signal::Waveform> out;
  out.reserve(noisy.size());
  for (const auto& y : noisy) out.push_back((*this)(y));
  return out;
}

Enhancer load_enhancer(const RunConfig& cfg, const std::filesystem::path& checkpoint) {
  if (cfg.framework == Framework::kWiener) return Enhancer();
  auto ckpt = models::load_checkpoint(checkpoint);
  const auto written_by = ckpt.meta.value("framework", std::string());
  require(written_by == to_string(cfg.framework), ErrorCode::kCheckpointMismatch,
          checkpoint.string() + " was trained for '" + written_by + "', not '" + std::string(to_string(cfg.framework)) + "'");
  require(cfg.generator && ckpt.spec == *cfg.generator, ErrorCode::kCheckpointMismatch,
          checkpoint.string() + " holds a different generator spec");
  auto model = models::build_model(ckpt.spec, ckpt.seed);
  models::restore(model, ckpt);
  return Enhancer(cfg.framework, std::move(model));
}

}  // namespace cdse::harness
