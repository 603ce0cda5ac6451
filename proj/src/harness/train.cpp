#include "cdse/harness/train.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "cdse/data/manifest.hpp"
#include "cdse/error.hpp"
#include "cdse/harness/run.hpp"
#include "cdse/models/checkpoint.hpp"
#include "cdse/signal/compression.hpp"
#include "cdse/signal/stft.hpp"

namespace cdse::harness {

namespace {

using losses::TermKind;

std::optional<std::int64_t> fixed_length(const models::ModelSpec& spec) {
  if (spec.family == models::Family::kUnet1d) return spec.fixed_length;
  return std::nullopt;
}

torch::Tensor stack_rows(const std::vector<const signal::Waveform*>& waves) {
  std::int64_t n = 0;
  for (const auto* w : waves) n = std::max(n, w->size());
  auto out = torch::zeros({static_cast<std::int64_t>(waves.size()), n}, torch::kFloat32);
  for (std::size_t i = 0; i < waves.size(); ++i) {
    out[static_cast<std::int64_t>(i)].narrow(0, 0, waves[i]->size()).copy_(signal::to_tensor(*waves[i], torch::kFloat32));
  }
  return out;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

void to_json(nlohmann::json& j, const EpochLog& e) {
  j = {{"epoch", e.epoch}, {"steps", e.steps}, {"generator", e.generator}, {"terms", e.terms}};
  j["discriminator"] = e.discriminator ? nlohmann::json(*e.discriminator) : nlohmann::json(nullptr);
}

void from_json(const nlohmann::json& j, EpochLog& e) {
  e.epoch = j.at("epoch").get<int>();
  e.steps = j.at("steps").get<int>();
  e.generator = j.at("generator").get<double>();
  e.terms = j.at("terms").get<std::map<std::string, double>>();
  const auto& d = j.at("discriminator");
  e.discriminator = d.is_null() ? std::nullopt : std::optional<double>(d.get<double>());
}

Trainer::Trainer(RunConfig cfg) : cfg_(std::move(cfg)) {
  cfg_.validate();
  require(cfg_.framework != Framework::kWiener, ErrorCode::kConfig, "the Wiener baseline is not trained");
  torch::manual_seed(cfg_.seed);
  generator_ = models::build_model(*cfg_.generator, cfg_.seed);
  const auto adam = torch::optim::AdamOptions(cfg_.optimizer.learning_rate).betas({cfg_.optimizer.beta1, cfg_.optimizer.beta2});
  g_opt_ = std::make_unique<torch::optim::Adam>(generator_.net->parameters(), adam);
  if (cfg_.discriminator) {
    discriminator_ = models::build_model(*cfg_.discriminator, data::splitmix64(cfg_.seed));
    d_opt_ = std::make_unique<torch::optim::Adam>(discriminator_->net->parameters(), adam);
  }
}

Trainer::~Trainer() = default;

std::size_t Trainer::example_count(const std::vector<data::TrackPair>& pairs) const {
  const auto fixed = fixed_length(generator_.spec);
  if (!fixed) return pairs.size();
  std::size_t n = 0;
  for (const auto& p : pairs) n += static_cast<std::size_t>((p.clean.size() + *fixed - 1) / *fixed);
  return n;
}

std::vector<Batch> Trainer::make_batches(const std::vector<data::TrackPair>& pairs,
                                         const std::vector<std::size_t>& order) const {
  std::vector<data::TrackPair> segments;
  const auto fixed = fixed_length(generator_.spec);
  if (fixed) {
    for (const auto& p : pairs) {
      auto s = data::segment_fixed(p, *fixed, data::RemainderPolicy::kPad);
      segments.insert(segments.end(), std::make_move_iterator(s.begin()), std::make_move_iterator(s.end()));
    }
  }
  const auto& examples = fixed ? segments : pairs;
  const bool tf = generator_.spec.domain() == models::Domain::kTf;
  const signal::MagnitudeCompressor compressor;
  const auto batch_size = static_cast<std::size_t>(cfg_.batch_size);

  std::vector<Batch> batches;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const auto end = std::min(order.size(), start + batch_size);
    std::vector<const signal::Waveform*> clean, noisy;
    Batch b;
    for (auto k = start; k < end; ++k) {
      const auto i = order[k];
      require(i < examples.size(), ErrorCode::kConfig, "batch order index out of range");
      clean.push_back(&examples[i].clean);
      noisy.push_back(&examples[i].noisy);
      b.lengths.push_back(examples[i].clean.size());
    }
    b.clean = stack_rows(clean);
    b.noisy = stack_rows(noisy);
    const bool ragged = std::any_of(b.lengths.begin(), b.lengths.end(), [&](auto n) { return n != b.clean.size(1); });
    if (!ragged) b.lengths.clear();
    if (tf) {
      std::vector<torch::Tensor> cm, nm, np;
      for (std::size_t k = 0; k < clean.size(); ++k) {
        const auto plan = signal::plan_stft(clean[k]->size());
        const auto c = signal::stft(*clean[k], plan);
        const auto y = signal::stft(*noisy[k], plan);
        cm.push_back(compressor.compress(c.magnitude).to(torch::kFloat32));
        nm.push_back(compressor.compress(y.magnitude).to(torch::kFloat32));
        np.push_back(y.phase.to(torch::kFloat32));
        b.tf.plans.push_back(plan);
        b.tf.clean_time.push_back(signal::to_tensor(*clean[k], torch::kFloat32));
      }
      b.tf.clean_magnitude = torch::stack(cm);
      b.tf.noisy_magnitude = torch::stack(nm);
      b.tf.noisy_phase = torch::stack(np);
    }
    batches.push_back(std::move(b));
  }
  return batches;
}

torch::Tensor Trainer::run_generator(const Batch& batch) const {
  if (generator_.spec.domain() == models::Domain::kTf) return models::generate_tf(generator_, batch.tf.noisy_magnitude);
  return models::generate_time(generator_, batch.noisy);
}

losses::CompositeLossValue Trainer::generator_loss(const Batch& batch, const torch::Tensor& output) const {
  const models::Model* d = discriminator_ ? &*discriminator_ : nullptr;
  if (generator_.spec.domain() == models::Domain::kTf) return losses::compose_tf(cfg_.loss, batch.tf, output, d);
  return losses::compose_time(cfg_.loss, losses::TimeTargets{batch.clean, batch.noisy, batch.lengths}, output, d);
}

std::map<TermKind, double> Trainer::calibrate(const Batch& batch) {
  std::map<TermKind, double> raw;
  {
    torch::NoGradGuard no_grad;
    const auto value = generator_loss(batch, run_generator(batch));
    for (const auto& [k, v] : value.per_term) raw[k] = v.raw.item<double>();
  }
  if (!cfg_.equal_importance) return raw;
  if (cfg_.framework == Framework::kCdWavenet) {
    cfg_.loss = losses::calibrate_equal_importance(cfg_.loss, raw, {TermKind::kL1Tf}, TermKind::kL1Time);
  } else if (cfg_.framework == Framework::kCdAegan) {
    cfg_.loss = losses::calibrate_equal_importance(cfg_.loss, raw, {TermKind::kL1Time}, TermKind::kL1Tf);
  }
  return raw;
}

StepLosses Trainer::step(const Batch& batch) {
  generator_.net->train();
  StepLosses out;
  if (discriminator_) {
    discriminator_->net->train();
    const bool tf = generator_.spec.domain() == models::Domain::kTf;
    const auto& real = tf ? batch.tf.clean_magnitude : batch.clean;
    const auto& condition = tf ? batch.tf.noisy_magnitude : batch.noisy;
    std::vector<double> d_losses;
    for (int s = 0; s < cfg_.optimizer.d_steps_per_g_step; ++s) {
      torch::Tensor fake;
      {
        torch::NoGradGuard no_grad;
        fake = run_generator(batch);
      }
      models::DiscriminatorOutput r, f;
      if (tf) {
        r = models::discriminate(*discriminator_, models::TfBatch{real}, models::TfBatch{condition});
        f = models::discriminate(*discriminator_, models::TfBatch{fake}, models::TfBatch{condition});
      } else {
        r = models::discriminate(*discriminator_, models::TimeBatch{real}, models::TimeBatch{condition});
        f = models::discriminate(*discriminator_, models::TimeBatch{fake}, models::TimeBatch{condition});
      }
      auto loss = losses::adv_loss_from_logits(r.logit, f.logit, cfg_.loss.adversarial).discriminator_loss();
      d_opt_->zero_grad();
      loss.backward();
      d_opt_->step();
      d_losses.push_back(loss.item<double>());
    }
    out.discriminator = mean_of(d_losses);
  }
  g_opt_->zero_grad();
  const auto value = generator_loss(batch, run_generator(batch));
  value.total.backward();
  g_opt_->step();
  out.generator = value.total_value();
  for (const auto& [k, v] : value.per_term) out.raw[k] = v.raw.item<double>();
  return out;
}

StepLosses Trainer::evaluate(const Batch& batch) {
  torch::NoGradGuard no_grad;
  generator_.net->eval();
  const auto value = generator_loss(batch, run_generator(batch));
  generator_.net->train();
  StepLosses out;
  out.generator = value.total_value();
  for (const auto& [k, v] : value.per_term) out.raw[k] = v.raw.item<double>();
  return out;
}

namespace {

nlohmann::json checkpoint_meta(const RunConfig& cfg, int epoch) {
  return {{"framework", to_string(cfg.framework)}, {"epoch", epoch}, {"loss", cfg.loss}};
}

void save_models(const RunLayout& layout, const Trainer& t, int epoch, std::int64_t steps) {
  const auto meta = checkpoint_meta(t.config(), epoch);
  models::save_checkpoint(layout.epoch_checkpoint("generator", epoch), t.generator(), steps, meta);
  models::save_checkpoint(layout.generator_checkpoint(), t.generator(), steps, meta);
  if (t.discriminator()) {
    models::save_checkpoint(layout.epoch_checkpoint("discriminator", epoch), *t.discriminator(), steps, meta);
    models::save_checkpoint(layout.discriminator_checkpoint(), *t.discriminator(), steps, meta);
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  out << text;
}

}  // namespace

TrainResult train(const RunConfig& cfg, const std::vector<data::TrackPair>& pairs, const std::filesystem::path& run_dir,
                  const std::function<void(const EpochLog&)>& on_epoch) {
  require(!pairs.empty(), ErrorCode::kEmptyDataset, "no training pairs");
  torch::set_num_threads(1);
  Trainer trainer(cfg);
  const auto n = trainer.example_count(pairs);
  std::vector<std::size_t> identity(n);
  std::iota(identity.begin(), identity.end(), std::size_t{0});

  TrainResult result;
  const auto first = std::vector<std::size_t>(identity.begin(),
                                              identity.begin() + std::min<std::size_t>(n, cfg.batch_size));
  for (const auto& [k, v] : trainer.calibrate(trainer.make_batches(pairs, first).front())) {
    result.calibration[std::string(losses::to_string(k))] = v;
  }

  const RunLayout layout{run_dir};
  const bool persist = !run_dir.empty();
  std::ofstream loss_log;
  if (persist) {
    std::filesystem::create_directories(layout.checkpoints());
    write_text(layout.config(), to_yaml(cfg));
    write_text(layout.calibration(),
               nlohmann::json{{"raw_means", result.calibration}, {"loss", trainer.config().loss}}.dump(2) + "\n");
    loss_log.open(layout.loss_log(), std::ios::trunc);
    require(static_cast<bool>(loss_log), ErrorCode::kIo, "cannot write " + layout.loss_log().string());
  }

  std::int64_t steps = 0;
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    auto order = identity;
    std::mt19937_64 rng(data::splitmix64(cfg.seed ^ static_cast<std::uint64_t>(epoch)));
    std::shuffle(order.begin(), order.end(), rng);
    EpochLog log;
    log.epoch = epoch;
    std::vector<double> g, d;
    std::map<std::string, std::vector<double>> terms;
    for (const auto& batch : trainer.make_batches(pairs, order)) {
      const auto s = trainer.step(batch);
      g.push_back(s.generator);
      if (s.discriminator) d.push_back(*s.discriminator);
      for (const auto& [k, v] : s.raw) terms[std::string(losses::to_string(k))].push_back(v);
      ++steps;
      ++log.steps;
    }
    log.generator = mean_of(g);
    for (const auto& [k, v] : terms) log.terms[k] = mean_of(v);
    if (!d.empty()) log.discriminator = mean_of(d);
    require(std::isfinite(log.generator), ErrorCode::kNonFinite,
            "generator loss diverged in epoch " + std::to_string(epoch));
    if (persist) {
      loss_log << nlohmann::json(log).dump() << "\n" << std::flush;
      save_models(layout, trainer, epoch, steps);
    }
    if (on_epoch) on_epoch(log);
    result.epochs.push_back(std::move(log));
  }
  if (persist && cfg.epochs == 0) save_models(layout, trainer, 0, 0);

  result.config = trainer.config();
  result.generator = trainer.generator();
  result.discriminator = trainer.discriminator();
  return result;
}

TrainResult train_run(const RunConfig& cfg, const std::filesystem::path& run_dir,
                      const std::function<void(const EpochLog&)>& on_epoch) {
  cfg.validate();
  if (cfg.framework == Framework::kWiener) {
    std::filesystem::create_directories(run_dir);
    write_text(RunLayout{run_dir}.config(), to_yaml(cfg));
    TrainResult r;
    r.config = cfg;
    return r;
  }
  const auto manifest = data::read_manifest(cfg.manifest);
  std::vector<std::size_t> picked;
  for (auto i : manifest.indices(data::Split::kTrain)) {
    const auto snr = manifest.entries[i].snr_db;
    if (std::any_of(cfg.snr_list.begin(), cfg.snr_list.end(), [&](double s) { return std::abs(s - snr) < 1e-9; })) {
      picked.push_back(i);
    }
  }
  if (cfg.max_train_tracks > 0 && picked.size() > static_cast<std::size_t>(cfg.max_train_tracks)) {
    picked.resize(static_cast<std::size_t>(cfg.max_train_tracks));
  }
  require(!picked.empty(), ErrorCode::kEmptyDataset, "no training entries at the requested SNRs");
  return train(cfg, data::load_pairs(manifest, picked), run_dir, on_epoch);
}

}  // namespace cdse::harness
