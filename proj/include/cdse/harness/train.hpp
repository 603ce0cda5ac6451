#pragma once

#include <torch/torch.h>

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cdse/data/mixing.hpp"
#include "cdse/harness/config.hpp"
#include "cdse/losses/losses.hpp"
#include "cdse/models/model.hpp"

namespace cdse::harness {

// One training example set, already in the generator's domain.
struct Batch {
  // Time domain, [B, n] float32, zero padded when lengths is non-empty.
  torch::Tensor clean;
  torch::Tensor noisy;
  std::vector<std::int64_t> lengths;
  // TF domain (TF frameworks only).
  losses::TfTargets tf;
};

struct StepLosses {
  double generator = 0.0;
  std::map<losses::TermKind, double> raw;
  std::optional<double> discriminator;
};

struct EpochLog {
  int epoch = 0;
  int steps = 0;
  double generator = 0.0;                // mean total generator loss
  std::map<std::string, double> terms;   // mean raw value per term
  std::optional<double> discriminator;   // mean discriminator loss
};

void to_json(nlohmann::json& j, const EpochLog& e);
void from_json(const nlohmann::json& j, EpochLog& e);

// Builds the generator (and discriminator) from the config seed and steps
// them with Adam; adversarial frameworks take d_steps_per_g_step
// discriminator steps before each generator step.
class Trainer {
 public:
  explicit Trainer(RunConfig cfg);
  ~Trainer();

  // Training examples for the framework: one-second segments for
  // fixed-length generators, whole tracks otherwise.
  std::vector<Batch> make_batches(const std::vector<data::TrackPair>& pairs, const std::vector<std::size_t>& order) const;
  // Example count make_batches works over (segments or tracks).
  std::size_t example_count(const std::vector<data::TrackPair>& pairs) const;

  // Equal-importance weights for the cross-domain frameworks, measured on
  // `batch` with the untrained generator. Returns the raw term means.
  std::map<losses::TermKind, double> calibrate(const Batch& batch);
  StepLosses step(const Batch& batch);
  // Loss of the current generator without updating anything.
  StepLosses evaluate(const Batch& batch);

  const RunConfig& config() const noexcept { return cfg_; }
  const models::Model& generator() const noexcept { return generator_; }
  const std::optional<models::Model>& discriminator() const noexcept { return discriminator_; }

 private:
  losses::CompositeLossValue generator_loss(const Batch& batch, const torch::Tensor& output) const;
  torch::Tensor run_generator(const Batch& batch) const;

  RunConfig cfg_;
  models::Model generator_;
  std::optional<models::Model> discriminator_;
  std::unique_ptr<torch::optim::Adam> g_opt_;
  std::unique_ptr<torch::optim::Adam> d_opt_;
};

struct TrainResult {
  RunConfig config;  // with calibrated loss weights
  std::vector<EpochLog> epochs;
  std::map<std::string, double> calibration;  // raw term means on the calibration batch
  models::Model generator;
  std::optional<models::Model> discriminator;
};

// Full run over `pairs`. With a non-empty run_dir: writes config.yaml, the
// loss log, calibration.json and per-epoch checkpoints. `on_epoch` sees each
// epoch as it finishes.
TrainResult train(const RunConfig& cfg, const std::vector<data::TrackPair>& pairs,
                  const std::filesystem::path& run_dir = {},
                  const std::function<void(const EpochLog&)>& on_epoch = nullptr);

// Loads the training split of cfg.manifest (filtered to cfg.snr_list) and
// trains. Wiener runs only write their config.
TrainResult train_run(const RunConfig& cfg, const std::filesystem::path& run_dir,
                      const std::function<void(const EpochLog&)>& on_epoch = nullptr);

}  // namespace cdse::harness
