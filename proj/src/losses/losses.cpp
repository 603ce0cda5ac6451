#include "cdse/losses/losses.hpp"

#include <array>
#include <cmath>
#include <set>
#include <utility>

#include "cdse/error.hpp"
#include "cdse/signal/compression.hpp"

namespace cdse::losses {
namespace {

constexpr std::array<std::pair<TermKind, std::string_view>, 4> kKindNames{{
    {TermKind::kAdv, "adv"},
    {TermKind::kL1Time, "l1_time"},
    {TermKind::kL1Tf, "l1_tf"},
    {TermKind::kFeature, "feature"},
}};
constexpr std::array<std::pair<Bridge, std::string_view>, 3> kBridgeNames{{
    {Bridge::kNone, "none"},
    {Bridge::kStft, "stft"},
    {Bridge::kIstftNoisyPhase, "istft_with_noisy_phase"},
}};
constexpr std::array<std::pair<AdvVariant, std::string_view>, 2> kVariantNames{{
    {AdvVariant::kLogLoss, "log_loss"},
    {AdvVariant::kLeastSquares, "least_squares"},
}};

template <typename Table, typename E>
std::string_view name_of(const Table& table, E value) {
  for (const auto& [v, n] : table) {
    if (v == value) return n;
  }
  return "unknown";
}

template <typename Table>
auto value_of(const Table& table, std::string_view name, const char* what) {
  for (const auto& [v, n] : table) {
    if (n == name) return v;
  }
  fail(ErrorCode::kInvalidLossConfig, std::string("unknown ") + what + " '" + std::string(name) + "'");
}

[[noreturn]] void invalid(const std::string& msg) { fail(ErrorCode::kInvalidLossConfig, msg); }

torch::Tensor generator_objective(const torch::Tensor& logit_fake, AdvVariant variant) {
  if (variant == AdvVariant::kLeastSquares) return (torch::sigmoid(logit_fake) - 1.0).pow(2).mean();
  return -torch::log_sigmoid(logit_fake).mean();
}

const signal::MagnitudeCompressor& compressor() {
  static const signal::MagnitudeCompressor c;
  return c;
}

torch::Tensor stft_magnitude(const torch::Tensor& samples, const signal::StftPlan& plan, bool compress) {
  auto m = signal::stft(samples, plan).magnitude;
  return compress ? compressor().compress(m) : m;
}

// l1_tf through the STFT bridge, one plan per item when lengths are given.
torch::Tensor bridged_l1_tf(const torch::Tensor& x, const torch::Tensor& x_hat, const std::vector<std::int64_t>& lengths,
                            bool compress) {
  if (lengths.empty()) {
    const auto plan = signal::plan_stft(x.size(-1));
    return l1_tf(stft_magnitude(x, plan, compress), stft_magnitude(x_hat, plan, compress));
  }
  torch::Tensor sum;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    const auto b = static_cast<std::int64_t>(i);
    const auto plan = signal::plan_stft(lengths[i]);
    auto term = l1_tf(stft_magnitude(x[b].narrow(0, 0, lengths[i]), plan, compress),
                      stft_magnitude(x_hat[b].narrow(0, 0, lengths[i]), plan, compress));
    sum = sum.defined() ? sum + term : term;
  }
  return sum / static_cast<double>(lengths.size());
}

torch::Tensor length_mask(const std::vector<std::int64_t>& lengths, std::int64_t n) {
  auto idx = torch::arange(n, torch::kInt64).unsqueeze(0);
  auto len = torch::tensor(lengths, torch::kInt64).unsqueeze(1);
  return idx < len;
}

void add_term(CompositeLossValue& out, TermKind kind, double weight, torch::Tensor raw) {
  auto weighted = raw * weight;
  out.total = out.total.defined() ? out.total + weighted : weighted;
  out.per_term[kind] = TermValue{std::move(raw), std::move(weighted)};
}

const models::Model& need_discriminator(const models::Model* d, TermKind kind) {
  if (d == nullptr) invalid(std::string(to_string(kind)) + " term needs a discriminator");
  return *d;
}

}  // namespace

std::string_view to_string(TermKind k) { return name_of(kKindNames, k); }
std::string_view to_string(Bridge b) { return name_of(kBridgeNames, b); }
std::string_view to_string(AdvVariant v) { return name_of(kVariantNames, v); }
TermKind term_kind_from_string(std::string_view s) { return value_of(kKindNames, s, "loss term"); }
Bridge bridge_from_string(std::string_view s) { return value_of(kBridgeNames, s, "domain bridge"); }
AdvVariant adv_variant_from_string(std::string_view s) { return value_of(kVariantNames, s, "adversarial variant"); }

// ------------------------------------------------------------- LossConfig

void LossConfig::validate(models::Domain generator_output, int discriminator_depth, bool noisy_phase_available) const {
  if (terms.empty()) invalid("loss config needs at least one term");
  std::set<TermKind> seen;
  for (const auto& t : terms) {
    const auto name = std::string(to_string(t.kind));
    if (!seen.insert(t.kind).second) invalid("duplicate loss term " + name);
    if (!std::isfinite(t.weight) || t.weight < 0.0) invalid(name + " weight must be finite and >= 0");
    const bool time = generator_output == models::Domain::kTime;
    switch (t.kind) {
      case TermKind::kAdv:
      case TermKind::kFeature:
        if (t.bridge != Bridge::kNone) invalid(name + " takes no domain bridge");
        break;
      case TermKind::kL1Time: {
        const auto need = time ? Bridge::kNone : Bridge::kIstftNoisyPhase;
        if (t.bridge != need) {
          invalid("l1_time on a " + std::string(time ? "time" : "TF") + "-domain output needs bridge '" +
                  std::string(to_string(need)) + "'");
        }
        if (!time && !noisy_phase_available) fail(ErrorCode::kMissingPhase, "istft bridge needs the noisy phase");
        break;
      }
      case TermKind::kL1Tf: {
        const auto need = time ? Bridge::kStft : Bridge::kNone;
        if (t.bridge != need) {
          invalid("l1_tf on a " + std::string(time ? "time" : "TF") + "-domain output needs bridge '" +
                  std::string(to_string(need)) + "'");
        }
        break;
      }
    }
  }
  for (double l : feature_layer_weights) {
    if (!std::isfinite(l) || l < 0.0) invalid("feature layer weights must be >= 0");
  }
  if (has(TermKind::kFeature) && discriminator_depth >= 0 && !feature_layer_weights.empty() &&
      static_cast<int>(feature_layer_weights.size()) != discriminator_depth) {
    fail(ErrorCode::kLambdaMismatch, "feature_layer_weights has " + std::to_string(feature_layer_weights.size()) +
                                         " entries, discriminator depth is " + std::to_string(discriminator_depth));
  }
}

bool LossConfig::has(TermKind k) const {
  for (const auto& t : terms) {
    if (t.kind == k) return true;
  }
  return false;
}

const LossTerm& LossConfig::term(TermKind k) const {
  for (const auto& t : terms) {
    if (t.kind == k) return t;
  }
  invalid("loss config has no " + std::string(to_string(k)) + " term");
}

LossTerm& LossConfig::term(TermKind k) { return const_cast<LossTerm&>(std::as_const(*this).term(k)); }

double LossConfig::weight(TermKind k) const { return has(k) ? term(k).weight : 0.0; }

std::vector<double> LossConfig::lambdas(int k) const {
  if (feature_layer_weights.empty()) return std::vector<double>(static_cast<std::size_t>(k), 1.0 / k);
  return feature_layer_weights;
}

static LossConfig with_terms(std::vector<LossTerm> terms) {
  LossConfig c;
  c.terms = std::move(terms);
  return c;
}

LossConfig LossConfig::segan() { return with_terms({{TermKind::kAdv, 1.0}, {TermKind::kL1Time, 100.0}}); }
LossConfig LossConfig::wavenet() { return with_terms({{TermKind::kL1Time, 1.0}}); }
LossConfig LossConfig::cd_wavenet() {
  return with_terms({{TermKind::kL1Time, 1.0}, {TermKind::kL1Tf, 1.0, Bridge::kStft}});
}
LossConfig LossConfig::fsegan() { return with_terms({{TermKind::kAdv, 1.0}, {TermKind::kL1Tf, 100.0}}); }
LossConfig LossConfig::aegan() {
  return with_terms({{TermKind::kAdv, 1.0}, {TermKind::kFeature, 1.0}, {TermKind::kL1Tf, 100.0}});
}
LossConfig LossConfig::cd_aegan() {
  auto c = aegan();
  c.terms.push_back({TermKind::kL1Time, 1.0, Bridge::kIstftNoisyPhase});
  return c;
}

void to_json(nlohmann::json& j, const LossConfig& c) {
  auto terms = nlohmann::json::array();
  for (const auto& t : c.terms) {
    terms.push_back({{"kind", to_string(t.kind)}, {"weight", t.weight}, {"domain_bridge", to_string(t.bridge)}});
  }
  j = {{"terms", terms},
       {"feature_layer_weights", c.feature_layer_weights},
       {"adversarial", to_string(c.adversarial)},
       {"compress_tf", c.compress_tf}};
}

void from_json(const nlohmann::json& j, LossConfig& c) {
  c = LossConfig{};
  for (const auto& t : j.at("terms")) {
    c.terms.push_back({term_kind_from_string(t.at("kind").get<std::string>()), t.value("weight", 1.0),
                       bridge_from_string(t.value("domain_bridge", std::string("none")))});
  }
  c.feature_layer_weights = j.value("feature_layer_weights", std::vector<double>{});
  c.adversarial = adv_variant_from_string(j.value("adversarial", std::string("log_loss")));
  c.compress_tf = j.value("compress_tf", true);
}

// ------------------------------------------------------ CompositeLossValue

double CompositeLossValue::total_value() const { return total.item<double>(); }

double CompositeLossValue::raw(TermKind k) const { return per_term.at(k).raw.item<double>(); }

nlohmann::json CompositeLossValue::to_json() const {
  nlohmann::json terms = nlohmann::json::object();
  for (const auto& [k, v] : per_term) {
    terms[std::string(losses::to_string(k))] = {{"raw", v.raw.item<double>()}, {"weighted", v.weighted.item<double>()}};
  }
  return {{"total", total_value()}, {"terms", terms}};
}

// ------------------------------------------------------------ Primitives

AdversarialObjectives adv_loss(const torch::Tensor& d_real, const torch::Tensor& d_fake, AdvVariant variant) {
  for (const auto* d : {&d_real, &d_fake}) {
    require(d->numel() > 0 && torch::isfinite(*d).all().item<bool>() && d->min().item<double>() >= 0.0 &&
                d->max().item<double>() <= 1.0,
            ErrorCode::kProbabilityDomain, "discriminator outputs must be probabilities in [0, 1]");
  }
  if (variant == AdvVariant::kLeastSquares) {
    return {-((d_real - 1.0).pow(2).mean() + d_fake.pow(2).mean()), (d_fake - 1.0).pow(2).mean()};
  }
  return {torch::log(d_real).mean() + torch::log1p(-d_fake).mean(), -torch::log(d_fake).mean()};
}

AdversarialObjectives adv_loss_from_logits(const torch::Tensor& logit_real, const torch::Tensor& logit_fake,
                                           AdvVariant variant) {
  if (variant == AdvVariant::kLeastSquares) return adv_loss(torch::sigmoid(logit_real), torch::sigmoid(logit_fake), variant);
  return {torch::log_sigmoid(logit_real).mean() + torch::log_sigmoid(-logit_fake).mean(),
          generator_objective(logit_fake, variant)};
}

torch::Tensor l1_time(const torch::Tensor& x, const torch::Tensor& x_hat) {
  require(x.sizes() == x_hat.sizes(), ErrorCode::kLengthMismatch, "l1_time needs equal-length inputs");
  return (x - x_hat).abs().mean();
}

double l1_time(const signal::Waveform& x, const signal::Waveform& x_hat) {
  require(x.size() == x_hat.size(), ErrorCode::kLengthMismatch, "l1_time needs equal-length inputs");
  double s = 0.0;
  for (std::size_t i = 0; i < static_cast<std::size_t>(x.size()); ++i) s += std::abs(x.data()[i] - x_hat.data()[i]);
  return x.empty() ? 0.0 : s / static_cast<double>(x.size());
}

torch::Tensor masked_l1_time(const torch::Tensor& x, const torch::Tensor& x_hat, const torch::Tensor& mask) {
  require(x.sizes() == x_hat.sizes() && x.sizes() == mask.sizes(), ErrorCode::kLengthMismatch,
          "masked l1_time needs equal shapes");
  auto m = mask.to(x.scalar_type());
  return ((x - x_hat).abs() * m).sum() / m.sum().clamp_min(1.0);
}

torch::Tensor l1_tf(const torch::Tensor& x_m, const torch::Tensor& x_hat_m) {
  require(x_m.dim() >= 2 && x_m.size(-1) == signal::kEmbeddingSize && x_m.size(-2) == signal::kEmbeddingSize &&
              x_m.sizes() == x_hat_m.sizes(),
          ErrorCode::kShapeMismatch, "l1_tf needs two [..., 256, 256] magnitudes of equal shape");
  return (x_m - x_hat_m).abs().mean();
}

torch::Tensor feature_loss(const std::vector<torch::Tensor>& target_features,
                           const std::vector<torch::Tensor>& output_features, const std::vector<double>& lambdas) {
  require(target_features.size() == output_features.size(), ErrorCode::kShapeMismatch,
          "feature lists differ in length");
  require(lambdas.size() == target_features.size(), ErrorCode::kLambdaMismatch,
          "expected " + std::to_string(target_features.size()) + " feature weights, got " +
              std::to_string(lambdas.size()));
  torch::Tensor total;
  for (std::size_t k = 0; k < lambdas.size(); ++k) {
    auto term = (target_features[k] - output_features[k]).abs().mean() * lambdas[k];
    total = total.defined() ? total + term : term;
  }
  return total.defined() ? total : torch::zeros({}, torch::kFloat64);
}

torch::Tensor feature_loss(const torch::Tensor& x_m, const torch::Tensor& x_hat_m, const torch::Tensor& condition,
                           const models::Model& discriminator, const std::vector<double>& lambdas) {
  const auto& d = discriminator.discriminator();
  require(static_cast<int>(lambdas.size()) == d.feature_depth(), ErrorCode::kLambdaMismatch,
          "feature weights must match discriminator depth " + std::to_string(d.feature_depth()));
  auto run = [&](const torch::Tensor& candidate) {
    if (d.domain() == models::Domain::kTime) {
      return models::discriminate(discriminator, models::TimeBatch{candidate}, models::TimeBatch{condition});
    }
    return models::discriminate(discriminator, models::TfBatch{candidate}, models::TfBatch{condition});
  };
  return feature_loss(run(x_m).features, run(x_hat_m).features, lambdas);
}

// ------------------------------------------------------------ Composites

CompositeLossValue compose_time(const LossConfig& cfg, const TimeTargets& targets, const torch::Tensor& x_hat,
                                const models::Model* discriminator) {
  require(x_hat.sizes() == targets.clean.sizes(), ErrorCode::kLengthMismatch, "output and clean target differ in shape");
  require(targets.lengths.empty() || (x_hat.dim() == 2 && targets.lengths.size() == static_cast<std::size_t>(x_hat.size(0))),
          ErrorCode::kShapeMismatch, "one length per batch row expected");
  CompositeLossValue out;
  for (const auto& t : cfg.terms) {
    switch (t.kind) {
      case TermKind::kL1Time: {
        auto raw = targets.lengths.empty()
                       ? l1_time(targets.clean, x_hat)
                       : masked_l1_time(targets.clean, x_hat, length_mask(targets.lengths, x_hat.size(-1)));
        add_term(out, t.kind, t.weight, raw);
        break;
      }
      case TermKind::kL1Tf:
        add_term(out, t.kind, t.weight, bridged_l1_tf(targets.clean, x_hat, targets.lengths, cfg.compress_tf));
        break;
      case TermKind::kAdv: {
        const auto& d = need_discriminator(discriminator, t.kind);
        auto o = models::discriminate(d, models::TimeBatch{x_hat}, models::TimeBatch{targets.noisy});
        add_term(out, t.kind, t.weight, generator_objective(o.logit, cfg.adversarial));
        break;
      }
      case TermKind::kFeature: {
        const auto& d = need_discriminator(discriminator, t.kind);
        auto raw = feature_loss(targets.clean, x_hat, targets.noisy, d, cfg.lambdas(d.discriminator().feature_depth()));
        add_term(out, t.kind, t.weight, raw);
        break;
      }
    }
  }
  return out;
}

CompositeLossValue compose_tf(const LossConfig& cfg, const TfTargets& targets, const torch::Tensor& x_hat_m,
                              const models::Model* discriminator) {
  require(x_hat_m.sizes() == targets.clean_magnitude.sizes(), ErrorCode::kShapeMismatch,
          "output and clean magnitude differ in shape");
  CompositeLossValue out;
  for (const auto& t : cfg.terms) {
    switch (t.kind) {
      case TermKind::kL1Tf: {
        auto raw = cfg.compress_tf ? l1_tf(targets.clean_magnitude, x_hat_m)
                                   : l1_tf(compressor().decompress(targets.clean_magnitude),
                                           compressor().decompress(x_hat_m));
        add_term(out, t.kind, t.weight, raw);
        break;
      }
      case TermKind::kL1Time: {
        require(targets.noisy_phase.has_value() && targets.noisy_phase->defined(), ErrorCode::kMissingPhase,
                "the istft bridge needs the noisy phase y_p");
        const auto batch = x_hat_m.dim() == 3 ? x_hat_m.size(0) : 1;
        auto mags = x_hat_m.dim() == 3 ? x_hat_m : x_hat_m.unsqueeze(0);
        auto phases = targets.noisy_phase->dim() == 3 ? *targets.noisy_phase : targets.noisy_phase->unsqueeze(0);
        require(targets.plans.size() == static_cast<std::size_t>(batch) &&
                    targets.clean_time.size() == static_cast<std::size_t>(batch),
                ErrorCode::kShapeMismatch, "one plan and one clean track per item expected");
        torch::Tensor sum;
        std::int64_t count = 0;
        for (std::int64_t b = 0; b < batch; ++b) {
          const auto& plan = targets.plans[static_cast<std::size_t>(b)];
          auto wave = signal::istft(compressor().decompress(mags[b]), phases[b], plan);
          const auto& clean = targets.clean_time[static_cast<std::size_t>(b)];
          require(clean.size(-1) == wave.size(-1), ErrorCode::kLengthMismatch, "clean track length differs from plan");
          auto s = (clean.to(wave.scalar_type()) - wave).abs().sum();
          sum = sum.defined() ? sum + s : s;
          count += wave.size(-1);
        }
        add_term(out, t.kind, t.weight, sum / static_cast<double>(count));
        break;
      }
      case TermKind::kAdv: {
        const auto& d = need_discriminator(discriminator, t.kind);
        auto o = models::discriminate(d, models::TfBatch{x_hat_m}, models::TfBatch{targets.noisy_magnitude});
        add_term(out, t.kind, t.weight, generator_objective(o.logit, cfg.adversarial));
        break;
      }
      case TermKind::kFeature: {
        const auto& d = need_discriminator(discriminator, t.kind);
        auto raw = feature_loss(targets.clean_magnitude, x_hat_m, targets.noisy_magnitude, d,
                                cfg.lambdas(d.discriminator().feature_depth()));
        add_term(out, t.kind, t.weight, raw);
        break;
      }
    }
  }
  return out;
}

CompositeLossValue compose_cd_wavenet(const torch::Tensor& x, const torch::Tensor& x_hat, const LossConfig& cfg,
                                      const std::vector<std::int64_t>& lengths) {
  if (!cfg.has(TermKind::kL1Time) || !cfg.has(TermKind::kL1Tf) || cfg.term(TermKind::kL1Tf).bridge != Bridge::kStft) {
    invalid("cd_wavenet needs l1_time and an stft-bridged l1_tf");
  }
  cfg.validate(models::Domain::kTime);
  return compose_time(cfg, TimeTargets{x, torch::Tensor(), lengths}, x_hat, nullptr);
}

CompositeLossValue compose_cd_aegan(const TfTargets& targets, const torch::Tensor& x_hat_m, const LossConfig& cfg,
                                    const models::Model& discriminator) {
  if (!cfg.has(TermKind::kL1Time) || cfg.term(TermKind::kL1Time).bridge != Bridge::kIstftNoisyPhase ||
      !cfg.has(TermKind::kL1Tf)) {
    invalid("cd_aegan needs l1_tf and an istft-bridged l1_time");
  }
  require(targets.noisy_phase.has_value() && targets.noisy_phase->defined(), ErrorCode::kMissingPhase,
          "cd_aegan needs the noisy phase y_p");
  cfg.validate(models::Domain::kTf, discriminator.discriminator().feature_depth());
  return compose_tf(cfg, targets, x_hat_m, &discriminator);
}

LossConfig calibrate_equal_importance(LossConfig cfg, const std::map<TermKind, double>& raw_means,
                                      const std::vector<TermKind>& kinds, std::optional<TermKind> anchor) {
  auto mean_of = [&](TermKind k) {
    auto it = raw_means.find(k);
    if (it == raw_means.end()) invalid("no calibration mean for " + std::string(to_string(k)));
    if (!std::isfinite(it->second) || it->second <= 0.0) {
      fail(ErrorCode::kZeroValuedTerm,
           std::string(to_string(k)) + " has mean " + std::to_string(it->second) + " on the calibration batch");
    }
    return it->second;
  };
  const double target = anchor ? cfg.term(*anchor).weight * mean_of(*anchor) : 1.0;
  for (auto k : kinds) cfg.term(k).weight = target / mean_of(k);
  return cfg;
}

}  // namespace cdse::losses
