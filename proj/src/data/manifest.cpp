#include "cdse/data/manifest.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <future>
#include <map>
#include <set>
#include <sstream>

#include <json.hpp>

#include "cdse/error.hpp"
#include "cdse/signal/wav_io.hpp"

namespace cdse::data {
namespace {

constexpr int kManifestVersion = 1;

}  // namespace

std::string_view to_string(Split s) { return s == Split::kTrain ? "train" : "test"; }

Split split_from_string(std::string_view s) {
  if (s == "train") return Split::kTrain;
  if (s == "test") return Split::kTest;
  fail(ErrorCode::kFormat, "unknown split '" + std::string(s) + "'");
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::vector<std::size_t> Manifest::indices(Split split) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].split == split) out.push_back(i);
  }
  return out;
}

void Manifest::check_split_hygiene() const {
  std::set<std::string> train_spk, train_sent;
  for (const auto& e : entries) {
    if (e.split == Split::kTrain) {
      train_spk.insert(e.speaker_id);
      train_sent.insert(e.sentence_id);
    }
  }
  for (const auto& e : entries) {
    if (e.split != Split::kTest) continue;
    require(!train_spk.contains(e.speaker_id), ErrorCode::kSplitOverlap,
            "speaker " + e.speaker_id + " appears in both splits");
    require(!train_sent.contains(e.sentence_id), ErrorCode::kSplitOverlap,
            "sentence " + e.sentence_id + " appears in both splits");
  }
}

std::uint64_t Manifest::entry_seed(std::size_t index) const { return splitmix64(seed ^ splitmix64(index)); }

std::string serialize_manifest(const Manifest& manifest) {
  std::ostringstream os;
  os << nlohmann::json{{"manifest_version", kManifestVersion}, {"seed", manifest.seed}}.dump() << '\n';
  for (const auto& e : manifest.entries) {
    nlohmann::json j{{"clean_path", e.clean_path},   {"noise_path", e.noise_path},   {"snr_db", e.snr_db},
                     {"split", to_string(e.split)},  {"speaker_id", e.speaker_id},   {"sentence_id", e.sentence_id},
                     {"noise_id", e.noise_id},       {"transcript", e.transcript}};
    os << j.dump() << '\n';
  }
  return os.str();
}

void write_manifest(const std::filesystem::path& path, const Manifest& manifest) {
  if (!path.parent_path().empty()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::trunc);
  if (!os) fail(ErrorCode::kIo, "cannot write manifest " + path.string());
  os << serialize_manifest(manifest);
}

Manifest read_manifest(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) fail(ErrorCode::kIo, "cannot open manifest " + path.string());
  Manifest m;
  m.base_dir = path.parent_path();
  std::string line;
  std::size_t lineno = 0;
  bool header = false;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      auto j = nlohmann::json::parse(line);
      if (!header) {
        require(j.value("manifest_version", 0) == kManifestVersion, ErrorCode::kFormat,
                "unsupported manifest version in " + path.string());
        m.seed = j.at("seed").get<std::uint64_t>();
        header = true;
        continue;
      }
      ManifestEntry e;
      e.clean_path = j.at("clean_path").get<std::string>();
      e.noise_path = j.at("noise_path").get<std::string>();
      e.snr_db = j.at("snr_db").get<double>();
      e.split = split_from_string(j.at("split").get<std::string>());
      e.speaker_id = j.at("speaker_id").get<std::string>();
      e.sentence_id = j.at("sentence_id").get<std::string>();
      e.noise_id = j.value("noise_id", std::string());
      e.transcript = j.value("transcript", std::string());
      m.entries.push_back(std::move(e));
    } catch (const nlohmann::json::exception& ex) {
      fail(ErrorCode::kFormat, path.string() + ":" + std::to_string(lineno) + ": " + ex.what());
    }
  }
  require(header, ErrorCode::kFormat, "manifest " + path.string() + " has no header line");
  return m;
}

std::filesystem::path mixed_path(const Manifest& manifest, std::size_t index) {
  char name[96];
  std::snprintf(name, sizeof name, "%05zu_%016llx_%g.wav", index,
                static_cast<unsigned long long>(manifest.entry_seed(index)), manifest.entries.at(index).snr_db);
  return manifest.base_dir / "mixed" / name;
}

namespace {

TrackPair mix_entry(const Manifest& manifest, std::size_t index) {
  const auto& e = manifest.entries.at(index);
  const auto clean = signal::read_wav(manifest.base_dir / e.clean_path);
  const auto noise = signal::read_wav(manifest.base_dir / e.noise_path);
  return mix_at_snr(clean, noise, e.snr_db, manifest.entry_seed(index));
}

}  // namespace

void write_mixed_cache(const Manifest& manifest, unsigned workers) {
  std::filesystem::create_directories(manifest.base_dir / "mixed");
  workers = std::max(1u, workers);
  std::vector<std::future<void>> jobs;
  for (unsigned w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t i = w; i < manifest.entries.size(); i += workers) {
        signal::write_wav(mixed_path(manifest, i), mix_entry(manifest, i).noisy);
      }
    }));
  }
  for (auto& j : jobs) j.get();
}

TrackPair load_pair(const Manifest& manifest, std::size_t index) {
  const auto& e = manifest.entries.at(index);
  TrackPair pair;
  const auto cached = mixed_path(manifest, index);
  if (std::filesystem::exists(cached)) {
    pair.clean = signal::read_wav(manifest.base_dir / e.clean_path);
    pair.noisy = signal::read_wav(cached);
    pair.snr_db = e.snr_db;
    require(pair.noisy.size() == pair.clean.size(), ErrorCode::kFormat,
            cached.string() + " does not match the length of " + e.clean_path);
  } else {
    pair = mix_entry(manifest, index);
  }
  pair.noise_id = e.noise_id;
  pair.speaker_id = e.speaker_id;
  pair.sentence_id = e.sentence_id;
  pair.transcript = e.transcript;
  return pair;
}

std::vector<TrackPair> load_pairs(const Manifest& manifest, const std::vector<std::size_t>& indices, unsigned workers) {
  std::vector<TrackPair> out(indices.size());
  workers = std::max(1u, workers);
  std::vector<std::future<void>> jobs;
  for (unsigned w = 0; w < workers; ++w) {
    jobs.push_back(std::async(std::launch::async, [&, w] {
      for (std::size_t k = w; k < indices.size(); k += workers) out[k] = load_pair(manifest, indices[k]);
    }));
  }
  for (auto& j : jobs) j.get();
  return out;
}

}  // namespace cdse::data
