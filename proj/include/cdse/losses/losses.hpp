#pragma once

#include <torch/torch.h>

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cdse/models/model.hpp"
#include "cdse/signal/stft.hpp"
#include "cdse/signal/waveform.hpp"

namespace cdse::losses {

enum class TermKind { kAdv, kL1Time, kL1Tf, kFeature };
enum class Bridge { kNone, kStft, kIstftNoisyPhase };
enum class AdvVariant { kLogLoss, kLeastSquares };

std::string_view to_string(TermKind k);
std::string_view to_string(Bridge b);
std::string_view to_string(AdvVariant v);
TermKind term_kind_from_string(std::string_view s);
Bridge bridge_from_string(std::string_view s);
AdvVariant adv_variant_from_string(std::string_view s);

struct LossTerm {
  TermKind kind = TermKind::kL1Time;
  double weight = 1.0;
  Bridge bridge = Bridge::kNone;

  bool operator==(const LossTerm&) const = default;
};

struct LossConfig {
  std::vector<LossTerm> terms;
  // lambda_k for the feature term; empty means uniform 1/K.
  std::vector<double> feature_layer_weights;
  AdvVariant adversarial = AdvVariant::kLogLoss;
  // TF L1 terms compare log-compressed magnitudes (the generator's domain).
  bool compress_tf = true;

  // Throws kInvalidLossConfig. `discriminator_depth` < 0 skips the lambda
  // length check.
  void validate(models::Domain generator_output, int discriminator_depth = -1, bool noisy_phase_available = true) const;
  bool has(TermKind k) const;
  const LossTerm& term(TermKind k) const;
  LossTerm& term(TermKind k);
  double weight(TermKind k) const;  // 0 when absent
  std::vector<double> lambdas(int k) const;

  bool operator==(const LossConfig&) const = default;

  static LossConfig segan();
  static LossConfig wavenet();
  static LossConfig cd_wavenet();
  static LossConfig fsegan();
  static LossConfig aegan();
  static LossConfig cd_aegan();
};

void to_json(nlohmann::json& j, const LossConfig& c);
void from_json(const nlohmann::json& j, LossConfig& c);

struct TermValue {
  torch::Tensor raw;
  torch::Tensor weighted;
};

struct CompositeLossValue {
  torch::Tensor total;
  std::map<TermKind, TermValue> per_term;

  double total_value() const;
  double raw(TermKind k) const;
  nlohmann::json to_json() const;
};

struct AdversarialObjectives {
  // To be maximised by the discriminator: log D(x, y) + log(1 - D(x_hat, y)).
  torch::Tensor discriminator;
  // To be minimised by the generator: -log D(x_hat, y) (non-saturating).
  torch::Tensor generator;

  torch::Tensor discriminator_loss() const { return -discriminator; }
};

// d_real, d_fake are probabilities; kProbabilityDomain outside [0, 1].
// Means over the batch.
AdversarialObjectives adv_loss(const torch::Tensor& d_real, const torch::Tensor& d_fake,
                               AdvVariant variant = AdvVariant::kLogLoss);
// Same objectives from logits, without the log(sigmoid) round trip.
AdversarialObjectives adv_loss_from_logits(const torch::Tensor& logit_real, const torch::Tensor& logit_fake,
                                           AdvVariant variant = AdvVariant::kLogLoss);

torch::Tensor l1_time(const torch::Tensor& x, const torch::Tensor& x_hat);
double l1_time(const signal::Waveform& x, const signal::Waveform& x_hat);
// Mean |x - x_hat| over entries where mask is true.
torch::Tensor masked_l1_time(const torch::Tensor& x, const torch::Tensor& x_hat, const torch::Tensor& mask);

// Both [..., 256, 256].
torch::Tensor l1_tf(const torch::Tensor& x_m, const torch::Tensor& x_hat_m);

// sum_k lambda_k * mean|f_k - g_k|.
torch::Tensor feature_loss(const std::vector<torch::Tensor>& target_features,
                           const std::vector<torch::Tensor>& output_features, const std::vector<double>& lambdas);
// Runs the discriminator on (x_m, condition) and (x_hat_m, condition).
torch::Tensor feature_loss(const torch::Tensor& x_m, const torch::Tensor& x_hat_m, const torch::Tensor& condition,
                           const models::Model& discriminator, const std::vector<double>& lambdas);

// Time-domain generator targets. `lengths` (optional) marks the real extent
// of each row of a zero-padded batch; each item then gets its own STFT plan.
struct TimeTargets {
  torch::Tensor clean;  // [B, n]
  torch::Tensor noisy;  // [B, n], discriminator condition
  std::vector<std::int64_t> lengths;
};

// TF generator targets, all compressed magnitudes [B, 256, 256].
struct TfTargets {
  torch::Tensor clean_magnitude;
  torch::Tensor noisy_magnitude;
  std::optional<torch::Tensor> noisy_phase;  // y_p
  std::vector<signal::StftPlan> plans;       // one per item
  std::vector<torch::Tensor> clean_time;     // one per item, for the ISTFT bridge
};

// Every term in cfg applied to a time-domain generator output. The adv term
// requires `discriminator`.
CompositeLossValue compose_time(const LossConfig& cfg, const TimeTargets& targets, const torch::Tensor& x_hat,
                                const models::Model* discriminator = nullptr);
// Every term in cfg applied to a TF generator output (compressed magnitude).
CompositeLossValue compose_tf(const LossConfig& cfg, const TfTargets& targets, const torch::Tensor& x_hat_m,
                              const models::Model* discriminator = nullptr);

// w_t * l1_time(x, x_hat) + w_f * l1_tf(|stft x|, |stft x_hat|).
CompositeLossValue compose_cd_wavenet(const torch::Tensor& x, const torch::Tensor& x_hat, const LossConfig& cfg,
                                      const std::vector<std::int64_t>& lengths = {});
// adv + feature + l1_tf + w_t * l1_time(x_time, istft(decompress(x_hat_m), y_p)).
CompositeLossValue compose_cd_aegan(const TfTargets& targets, const torch::Tensor& x_hat_m, const LossConfig& cfg,
                                    const models::Model& discriminator);

// Sets weight_k = target / raw_means[k] for each k in `kinds`. Without an
// anchor the target is 1; with one it is the anchor's current weighted mean,
// so the calibrated terms match the anchor term's magnitude.
LossConfig calibrate_equal_importance(LossConfig cfg, const std::map<TermKind, double>& raw_means,
                                      const std::vector<TermKind>& kinds,
                                      std::optional<TermKind> anchor = std::nullopt);

}  // namespace cdse::losses
