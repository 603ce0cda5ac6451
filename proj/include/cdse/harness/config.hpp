#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "cdse/data/synthetic.hpp"
#include "cdse/losses/losses.hpp"
#include "cdse/models/model_spec.hpp"

namespace cdse::harness {

enum class Framework { kWiener, kSegan, kWavenet, kCdWavenet, kFsegan, kAegan, kCdAegan };

std::string_view to_string(Framework f);
Framework framework_from_string(std::string_view s);
const std::vector<Framework>& all_frameworks();

// The wiring each framework allows: generator family, discriminator family
// (if adversarial) and the exact set of loss terms with their bridges.
struct Wiring {
  std::optional<models::Family> generator;
  std::optional<models::Family> discriminator;
  std::vector<losses::LossTerm> terms;  // weights are defaults
};
const Wiring& wiring(Framework f);

struct OptimizerConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  int d_steps_per_g_step = 1;

  bool operator==(const OptimizerConfig&) const = default;
};

struct RunConfig {
  Framework framework = Framework::kCdWavenet;
  std::optional<models::ModelSpec> generator;
  std::optional<models::ModelSpec> discriminator;
  losses::LossConfig loss;
  std::filesystem::path manifest;
  std::vector<double> snr_list{0.0, 5.0};
  int epochs = 5;
  int batch_size = 4;
  OptimizerConfig optimizer;
  std::uint64_t seed = 1;
  // Cross-domain frameworks rescale their secondary term on the first batch
  // so both domains start at equal magnitude.
  bool equal_importance = true;
  // 0 keeps every training track.
  int max_train_tracks = 0;

  // kIllegalCombination for wiring outside the framework's matrix, kConfig
  // for bad scalar settings.
  void validate() const;
  bool adversarial() const { return discriminator.has_value(); }
  bool operator==(const RunConfig&) const = default;

  // Desk-scale defaults: toy model specs, the framework's loss wiring.
  static RunConfig defaults(Framework f);
};

void to_json(nlohmann::json& j, const RunConfig& c);
// Missing keys fall back to RunConfig::defaults(framework).
void from_json(const nlohmann::json& j, RunConfig& c);

// YAML (or JSON, which is YAML) key-value file. Relative manifest paths are
// resolved against the file's directory. Throws kConfig on syntax errors.
RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir = {});
std::string to_yaml(const RunConfig& c);

// Synthetic corpus settings for `mix`; keys mirror data::CorpusConfig.
// Missing keys keep their defaults, unknown keys are kConfig.
data::CorpusConfig parse_corpus_config(const std::string& text);
std::string to_yaml(const data::CorpusConfig& c);

// Generic YAML <-> JSON conversion used by the config files.
nlohmann::json yaml_to_json(const std::string& text);
std::string json_to_yaml(const nlohmann::json& j);

}  // namespace cdse::harness
