#include "cdse/signal/stft.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "cdse/error.hpp"

namespace cdse::signal {
namespace {

namespace F = torch::nn::functional;

constexpr double kEnvelopeFloor = 1e-12;

void check_plan(const StftPlan& plan) {
  require(plan.n_frames == kEmbeddingSize && plan.n_bins == kEmbeddingSize && plan.fft_size == kFftSize &&
              plan.window_length == kWindowLength && plan.hop >= 1 &&
              plan.padded_length() == plan.window_length + (plan.n_frames - 1) * plan.hop,
          ErrorCode::kMalformed, "inconsistent STFT plan");
}

// Flattens leading dimensions so the core routines see [batch, ...].
torch::Tensor flatten_batch(const torch::Tensor& t, std::int64_t trailing_dims) {
  std::vector<std::int64_t> shape{-1};
  for (std::int64_t d = t.dim() - trailing_dims; d < t.dim(); ++d) shape.push_back(t.size(d));
  return t.reshape(shape);
}

std::vector<std::int64_t> leading_shape(const torch::Tensor& t, std::int64_t trailing_dims) {
  std::vector<std::int64_t> shape;
  for (std::int64_t d = 0; d < t.dim() - trailing_dims; ++d) shape.push_back(t.size(d));
  return shape;
}

torch::Tensor overlap_add(const torch::Tensor& frames, const StftPlan& plan) {
  // frames: [B, n_frames, window_length] -> [B, padded_length]
  const auto batch = frames.size(0);
  auto columns = frames.transpose(1, 2).contiguous();
  auto summed = F::fold(columns, F::FoldFuncOptions({1, plan.padded_length()}, {1, plan.window_length})
                                     .stride({1, plan.hop}));
  return summed.reshape({batch, plan.padded_length()});
}

}  // namespace

StftPlan plan_stft(std::int64_t n, const StftConfig& cfg) {
  require(n >= cfg.min_length && n <= cfg.max_length, ErrorCode::kLengthOutOfRange,
          "track length " + std::to_string(n) + " outside [" + std::to_string(cfg.min_length) + ", " +
              std::to_string(cfg.max_length) + "]");
  require(cfg.edge_margin >= 0, ErrorCode::kConfig, "edge_margin must be nonnegative");
  const std::int64_t span = n + 2 * cfg.edge_margin - kWindowLength;
  const std::int64_t steps = kEmbeddingSize - 1;
  const std::int64_t hop = span <= 0 ? 1 : std::max<std::int64_t>(1, (span + steps - 1) / steps);

  StftPlan plan;
  plan.hop = hop;
  plan.original_length = n;
  const std::int64_t padded = kWindowLength + steps * hop;
  const std::int64_t total_pad = padded - n;
  plan.pad_left = total_pad / 2;
  plan.pad_right = total_pad - plan.pad_left;
  return plan;
}

torch::Tensor analysis_window(const StftPlan& plan, torch::Dtype dtype) {
  return torch::hann_window(plan.window_length, torch::TensorOptions().dtype(dtype));
}

torch::Tensor window_envelope(const StftPlan& plan, torch::Dtype dtype) {
  check_plan(plan);
  auto w2 = analysis_window(plan, dtype).square();
  auto frames = w2.expand({1, plan.n_frames, plan.window_length});
  return overlap_add(frames, plan).reshape({plan.padded_length()});
}

TfRepresentation stft(const torch::Tensor& samples, const StftPlan& plan) {
  check_plan(plan);
  require(samples.dim() >= 1 && samples.size(-1) == plan.original_length, ErrorCode::kPlanMismatch,
          "waveform length " + std::to_string(samples.dim() ? samples.size(-1) : 0) +
              " does not match plan length " + std::to_string(plan.original_length));
  require(samples.is_floating_point(), ErrorCode::kMalformed, "stft expects a real floating-point tensor");

  const auto lead = leading_shape(samples, 1);
  auto x = flatten_batch(samples, 1);
  x = torch::constant_pad_nd(x, {plan.pad_left, plan.pad_right});
  auto frames = x.unfold(1, plan.window_length, plan.hop);  // [B, frames, window]
  require(frames.size(1) == plan.n_frames, ErrorCode::kMalformed, "plan produced the wrong frame count");
  frames = frames * analysis_window(plan, samples.scalar_type());

  auto spec = torch::fft::rfft(frames, plan.fft_size, -1).transpose(1, 2);  // [B, bins, frames]
  auto magnitude = spec.abs();

  torch::Tensor phase;
  {
    torch::NoGradGuard no_grad;
    phase = torch::angle(spec);
    const double pi = std::numbers::pi;
    phase = torch::where(phase <= -pi, torch::full_like(phase, pi), phase);
    phase = torch::where(magnitude == 0, torch::zeros_like(phase), phase);
  }

  auto out_shape = lead;
  out_shape.push_back(plan.n_bins);
  out_shape.push_back(plan.n_frames);
  return {magnitude.reshape(out_shape), phase.reshape(out_shape), plan};
}

TfRepresentation stft(const Waveform& wave, const StftPlan& plan) { return stft(to_tensor(wave), plan); }

torch::Tensor istft(const torch::Tensor& magnitude, const torch::Tensor& phase, const StftPlan& plan) {
  check_plan(plan);
  require(magnitude.dim() >= 2 && magnitude.size(-2) == plan.n_bins && magnitude.size(-1) == plan.n_frames,
          ErrorCode::kShapeMismatch, "magnitude must end in [256, 256]");
  require(phase.sizes() == magnitude.sizes(), ErrorCode::kShapeMismatch, "phase and magnitude shapes differ");

  const auto lead = leading_shape(magnitude, 2);
  auto mag = flatten_batch(magnitude, 2);
  auto ph = flatten_batch(phase, 2).to(mag.scalar_type()).detach();
  auto spec = torch::polar(mag, ph).transpose(1, 2);  // [B, frames, bins]
  auto frames = torch::fft::irfft(spec, plan.fft_size, -1);
  frames = frames * analysis_window(plan, mag.scalar_type());

  auto summed = overlap_add(frames, plan);
  auto envelope = window_envelope(plan, mag.scalar_type());
  auto covered = envelope > kEnvelopeFloor;
  auto out = torch::where(covered, summed / envelope.clamp_min(kEnvelopeFloor), torch::zeros_like(summed));
  out = out.narrow(1, plan.pad_left, plan.original_length);

  auto out_shape = lead;
  out_shape.push_back(plan.original_length);
  return out.reshape(out_shape);
}

Waveform istft(const TfRepresentation& tf) {
  require(tf.magnitude.dim() == 2, ErrorCode::kShapeMismatch, "expected a single [256, 256] representation");
  return to_waveform(istft(tf.magnitude, tf.phase, tf.plan));
}

torch::Tensor to_tensor(const Waveform& wave, torch::Dtype dtype) {
  auto t = torch::from_blob(const_cast<double*>(wave.data().data()), {wave.size()}, torch::kFloat64).clone();
  return t.to(dtype);
}

Waveform to_waveform(const torch::Tensor& samples) {
  require(samples.dim() == 1, ErrorCode::kShapeMismatch, "expected a 1-D tensor");
  auto t = samples.detach().to(torch::kFloat64).contiguous();
  const double* p = t.data_ptr<double>();
  return Waveform(std::vector<double>(p, p + t.numel()));
}

}  // namespace cdse::signal
