#include "cdse/harness/config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "cdse/error.hpp"

namespace cdse::harness {
namespace {

using losses::Bridge;
using losses::LossConfig;
using losses::TermKind;
using models::Family;
using models::ModelSpec;

[[noreturn]] void illegal(Framework f, const std::string& what) {
  fail(ErrorCode::kIllegalCombination, std::string(to_string(f)) + ": " + what);
}

nlohmann::json scalar_to_json(const YAML::Node& n) {
  const auto& s = n.Scalar();
  if (n.Tag() == "!") return s;  // quoted
  if (s == "null" || s == "~" || s.empty()) return nullptr;
  if (s == "true" || s == "True") return true;
  if (s == "false" || s == "False") return false;
  try {
    std::size_t used = 0;
    const long long i = std::stoll(s, &used);
    if (used == s.size()) return i;
  } catch (const std::exception&) {
  }
  try {
    std::size_t used = 0;
    const double d = std::stod(s, &used);
    if (used == s.size()) return d;
  } catch (const std::exception&) {
  }
  return s;
}

nlohmann::json node_to_json(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Scalar:
      return scalar_to_json(n);
    case YAML::NodeType::Sequence: {
      auto arr = nlohmann::json::array();
      for (const auto& item : n) arr.push_back(node_to_json(item));
      return arr;
    }
    case YAML::NodeType::Map: {
      auto obj = nlohmann::json::object();
      for (const auto& kv : n) obj[kv.first.as<std::string>()] = node_to_json(kv.second);
      return obj;
    }
  }
  return nullptr;
}

void emit(YAML::Emitter& out, const nlohmann::json& j) {
  if (j.is_object()) {
    out << YAML::BeginMap;
    for (const auto& [k, v] : j.items()) {
      out << YAML::Key << k << YAML::Value;
      emit(out, v);
    }
    out << YAML::EndMap;
  } else if (j.is_array()) {
    const bool flat = std::all_of(j.begin(), j.end(), [](const auto& v) { return v.is_primitive(); });
    out << (flat ? YAML::Flow : YAML::Block) << YAML::BeginSeq;
    for (const auto& v : j) emit(out, v);
    out << YAML::EndSeq;
  } else if (j.is_null()) {
    out << YAML::Null;
  } else if (j.is_boolean()) {
    out << j.get<bool>();
  } else if (j.is_number_integer()) {
    out << j.get<long long>();
  } else if (j.is_number()) {
    std::ostringstream s;
    s.precision(17);
    s << j.get<double>();
    auto text = s.str();
    if (text.find_first_of(".eEn") == std::string::npos) text += ".0";
    out << text;
  } else {
    const auto s = j.get<std::string>();
    // Keep strings that would read back as numbers or booleans quoted.
    const auto back = scalar_to_json(YAML::Load(s.empty() ? "''" : s));
    if (back.is_string() && back.get<std::string>() == s) {
      out << s;
    } else {
      out << YAML::DoubleQuoted << s;
    }
  }
}

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  return j.at(key).get<T>();
}

}  // namespace

std::string_view to_string(Framework f) {
  switch (f) {
    case Framework::kWiener: return "wiener";
    case Framework::kSegan: return "segan";
    case Framework::kWavenet: return "wavenet";
    case Framework::kCdWavenet: return "cd_wavenet";
    case Framework::kFsegan: return "fsegan";
    case Framework::kAegan: return "aegan";
    case Framework::kCdAegan: return "cd_aegan";
  }
  return "?";
}

const std::vector<Framework>& all_frameworks() {
  static const std::vector<Framework> all{Framework::kWiener, Framework::kSegan,  Framework::kWavenet,
                                          Framework::kCdWavenet, Framework::kFsegan, Framework::kAegan,
                                          Framework::kCdAegan};
  return all;
}

Framework framework_from_string(std::string_view s) {
  for (const auto f : all_frameworks()) {
    if (to_string(f) == s) return f;
  }
  fail(ErrorCode::kConfig, "unknown framework '" + std::string(s) + "'");
}

const Wiring& wiring(Framework f) {
  static const std::map<Framework, Wiring> table{
      {Framework::kWiener, {std::nullopt, std::nullopt, {}}},
      {Framework::kSegan, {Family::kUnet1d, Family::kDisc1d, LossConfig::segan().terms}},
      {Framework::kWavenet, {Family::kGatedStack, std::nullopt, LossConfig::wavenet().terms}},
      {Framework::kCdWavenet, {Family::kGatedStack, std::nullopt, LossConfig::cd_wavenet().terms}},
      {Framework::kFsegan, {Family::kUnet2d, Family::kDisc2d, LossConfig::fsegan().terms}},
      {Framework::kAegan, {Family::kCasnet, Family::kDisc2d, LossConfig::aegan().terms}},
      {Framework::kCdAegan, {Family::kCasnet, Family::kDisc2d, LossConfig::cd_aegan().terms}},
  };
  return table.at(f);
}

void RunConfig::validate() const {
  const auto& w = wiring(framework);
  if (framework == Framework::kWiener) {
    if (generator || discriminator || !loss.terms.empty()) illegal(framework, "takes no model and no loss");
  } else {
    if (!generator) illegal(framework, "needs a generator spec");
    if (generator->family != *w.generator) {
      illegal(framework, "generator must be " + std::string(models::to_string(*w.generator)) + ", got " +
                             std::string(models::to_string(generator->family)));
    }
    if (w.discriminator.has_value() != discriminator.has_value()) {
      illegal(framework, w.discriminator ? "needs a discriminator" : "is not adversarial; remove the discriminator");
    }
    if (discriminator && discriminator->family != *w.discriminator) {
      illegal(framework, "discriminator must be " + std::string(models::to_string(*w.discriminator)));
    }
    std::set<std::pair<TermKind, Bridge>> want, have;
    for (const auto& t : w.terms) want.emplace(t.kind, t.bridge);
    for (const auto& t : loss.terms) have.emplace(t.kind, t.bridge);
    if (want != have || loss.terms.size() != w.terms.size()) {
      std::string expected;
      for (const auto& t : w.terms) {
        expected += (expected.empty() ? "" : ", ") + std::string(losses::to_string(t.kind));
        if (t.bridge != Bridge::kNone) expected += "(" + std::string(losses::to_string(t.bridge)) + ")";
      }
      illegal(framework, "loss terms must be exactly {" + expected + "}");
    }
    generator->validate();
    if (discriminator) discriminator->validate();
    loss.validate(generator->domain(), discriminator ? discriminator->depth : -1);
  }
  auto check = [](bool ok, const std::string& what) { require(ok, ErrorCode::kConfig, what); };
  check(epochs >= 0, "epochs must be >= 0");
  check(batch_size >= 1, "batch_size must be >= 1");
  check(optimizer.learning_rate > 0.0, "learning_rate must be positive");
  check(optimizer.beta1 >= 0.0 && optimizer.beta1 < 1.0 && optimizer.beta2 >= 0.0 && optimizer.beta2 < 1.0,
        "Adam betas must lie in [0, 1)");
  check(optimizer.d_steps_per_g_step >= 1, "d_steps_per_g_step must be >= 1");
  check(!snr_list.empty(), "snr_list must not be empty");
  check(max_train_tracks >= 0, "max_train_tracks must be >= 0");
}

RunConfig RunConfig::defaults(Framework f) {
  RunConfig c;
  c.framework = f;
  switch (f) {
    case Framework::kWiener:
      c.epochs = 0;
      break;
    case Framework::kSegan:
      c.generator = ModelSpec::unet1d(6, 8);
      c.discriminator = ModelSpec::disc1d(4, 8);
      c.loss = LossConfig::segan();
      break;
    case Framework::kWavenet:
    case Framework::kCdWavenet:
      c.generator = ModelSpec::gated_stack({1, 2, 4, 8, 16, 32, 64}, 1, 12);
      c.loss = f == Framework::kWavenet ? LossConfig::wavenet() : LossConfig::cd_wavenet();
      break;
    case Framework::kFsegan:
      c.generator = ModelSpec::unet2d(6, 8);
      c.discriminator = ModelSpec::disc2d(3, 8);
      c.loss = LossConfig::fsegan();
      break;
    case Framework::kAegan:
    case Framework::kCdAegan:
      c.generator = ModelSpec::casnet(4, 6);
      c.discriminator = ModelSpec::disc2d(3, 8);
      c.loss = f == Framework::kAegan ? LossConfig::aegan() : LossConfig::cd_aegan();
      break;
  }
  return c;
}

void to_json(nlohmann::json& j, const RunConfig& c) {
  j = nlohmann::json::object();
  j["framework"] = std::string(to_string(c.framework));
  j["seed"] = c.seed;
  j["epochs"] = c.epochs;
  j["batch_size"] = c.batch_size;
  j["data"] = {{"manifest", c.manifest.string()}, {"snr_list", c.snr_list}, {"max_train_tracks", c.max_train_tracks}};
  j["optimizer"] = {{"learning_rate", c.optimizer.learning_rate},
                    {"beta1", c.optimizer.beta1},
                    {"beta2", c.optimizer.beta2},
                    {"d_steps_per_g_step", c.optimizer.d_steps_per_g_step}};
  j["equal_importance"] = c.equal_importance;
  j["generator"] = c.generator ? nlohmann::json(*c.generator) : nlohmann::json(nullptr);
  j["discriminator"] = c.discriminator ? nlohmann::json(*c.discriminator) : nlohmann::json(nullptr);
  j["loss"] = c.loss.terms.empty() ? nlohmann::json(nullptr) : nlohmann::json(c.loss);
}

void from_json(const nlohmann::json& j, RunConfig& c) {
  try {
    require(j.is_object(), ErrorCode::kConfig, "run config must be a key-value mapping");
    static const std::set<std::string> known{"framework", "seed", "epochs", "batch_size", "data", "optimizer",
                                             "equal_importance", "generator", "discriminator", "loss"};
    for (const auto& [k, v] : j.items()) require(known.count(k) == 1, ErrorCode::kConfig, "unknown config key '" + k + "'");
    require(j.contains("framework"), ErrorCode::kConfig, "config needs 'framework'");
    c = RunConfig::defaults(framework_from_string(j.at("framework").get<std::string>()));
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    c.epochs = get_or<int>(j, "epochs", c.epochs);
    c.batch_size = get_or<int>(j, "batch_size", c.batch_size);
    c.equal_importance = get_or<bool>(j, "equal_importance", c.equal_importance);
    if (j.contains("data") && !j.at("data").is_null()) {
      const auto& d = j.at("data");
      c.manifest = get_or<std::string>(d, "manifest", c.manifest.string());
      c.snr_list = get_or<std::vector<double>>(d, "snr_list", c.snr_list);
      c.max_train_tracks = get_or<int>(d, "max_train_tracks", c.max_train_tracks);
    }
    if (j.contains("optimizer") && !j.at("optimizer").is_null()) {
      const auto& o = j.at("optimizer");
      c.optimizer.learning_rate = get_or<double>(o, "learning_rate", c.optimizer.learning_rate);
      c.optimizer.beta1 = get_or<double>(o, "beta1", c.optimizer.beta1);
      c.optimizer.beta2 = get_or<double>(o, "beta2", c.optimizer.beta2);
      c.optimizer.d_steps_per_g_step = get_or<int>(o, "d_steps_per_g_step", c.optimizer.d_steps_per_g_step);
    }
    // An explicit null removes the default part (e.g. a discriminator), which
    // validate() then judges against the framework's wiring.
    if (j.contains("generator")) {
      c.generator = j.at("generator").is_null() ? std::nullopt : std::optional(j.at("generator").get<ModelSpec>());
    }
    if (j.contains("discriminator")) {
      c.discriminator =
          j.at("discriminator").is_null() ? std::nullopt : std::optional(j.at("discriminator").get<ModelSpec>());
    }
    if (j.contains("loss")) c.loss = j.at("loss").is_null() ? LossConfig{} : j.at("loss").get<LossConfig>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfig, std::string("bad run config: ") + e.what());
  }
}

nlohmann::json yaml_to_json(const std::string& text) {
  try {
    return node_to_json(YAML::Load(text));
  } catch (const YAML::Exception& e) {
    fail(ErrorCode::kConfig, std::string("config is not valid YAML: ") + e.what());
  }
}

std::string json_to_yaml(const nlohmann::json& j) {
  YAML::Emitter out;
  emit(out, j);
  return std::string(out.c_str()) + "\n";
}

RunConfig parse_run_config(const std::string& text, const std::filesystem::path& base_dir) {
  auto c = yaml_to_json(text).get<RunConfig>();
  if (!c.manifest.empty() && c.manifest.is_relative() && !base_dir.empty()) c.manifest = base_dir / c.manifest;
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCode::kConfig, "cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), std::filesystem::absolute(path).parent_path());
}

std::string to_yaml(const RunConfig& c) { return json_to_yaml(nlohmann::json(c)); }

data::CorpusConfig parse_corpus_config(const std::string& text) {
  const auto j = yaml_to_json(text);
  data::CorpusConfig c;
  if (j.is_null()) return c;
  try {
    require(j.is_object(), ErrorCode::kConfig, "corpus config must be a key-value mapping");
    static const std::set<std::string> known{"seed",          "train_speakers",
                                             "test_speakers", "train_sentences",
                                             "test_sentences", "sentences_per_train_speaker",
                                             "sentences_per_test_speaker", "min_words",
                                             "max_words",     "snr_db",
                                             "noise_types",   "noise_seconds",
                                             "train_all_snrs"};
    for (const auto& [k, v] : j.items()) require(known.count(k) == 1, ErrorCode::kConfig, "unknown corpus key '" + k + "'");
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    c.train_speakers = get_or<int>(j, "train_speakers", c.train_speakers);
    c.test_speakers = get_or<int>(j, "test_speakers", c.test_speakers);
    c.train_sentences = get_or<int>(j, "train_sentences", c.train_sentences);
    c.test_sentences = get_or<int>(j, "test_sentences", c.test_sentences);
    c.sentences_per_train_speaker = get_or<int>(j, "sentences_per_train_speaker", c.sentences_per_train_speaker);
    c.sentences_per_test_speaker = get_or<int>(j, "sentences_per_test_speaker", c.sentences_per_test_speaker);
    c.min_words = get_or<int>(j, "min_words", c.min_words);
    c.max_words = get_or<int>(j, "max_words", c.max_words);
    c.snr_db = get_or<std::vector<double>>(j, "snr_db", c.snr_db);
    c.noise_seconds = get_or<double>(j, "noise_seconds", c.noise_seconds);
    c.train_all_snrs = get_or<bool>(j, "train_all_snrs", c.train_all_snrs);
    if (j.contains("noise_types")) {
      c.noise_types.clear();
      for (const auto& n : j.at("noise_types")) c.noise_types.push_back(data::noise_type_from_string(n.get<std::string>()));
    }
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kConfig, std::string("bad corpus config: ") + e.what());
  }
  return c;
}

std::string to_yaml(const data::CorpusConfig& c) {
  nlohmann::json j{{"seed", c.seed},
                   {"train_speakers", c.train_speakers},
                   {"test_speakers", c.test_speakers},
                   {"train_sentences", c.train_sentences},
                   {"test_sentences", c.test_sentences},
                   {"sentences_per_train_speaker", c.sentences_per_train_speaker},
                   {"sentences_per_test_speaker", c.sentences_per_test_speaker},
                   {"min_words", c.min_words},
                   {"max_words", c.max_words},
                   {"snr_db", c.snr_db},
                   {"noise_seconds", c.noise_seconds},
                   {"train_all_snrs", c.train_all_snrs}};
  j["noise_types"] = nlohmann::json::array();
  for (auto t : c.noise_types) j["noise_types"].push_back(data::to_string(t));
  return json_to_yaml(j);
}

}  // namespace cdse::harness
