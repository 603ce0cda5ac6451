#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "cdse/data/mixing.hpp"

namespace cdse::data {

enum class Split { kTrain, kTest };
std::string_view to_string(Split s);
Split split_from_string(std::string_view s);

struct ManifestEntry {
  std::string clean_path;  // relative to the manifest directory
  std::string noise_path;
  double snr_db = 0.0;
  Split split = Split::kTrain;
  std::string speaker_id;
  std::string sentence_id;
  std::string noise_id;
  std::string transcript;

  bool operator==(const ManifestEntry&) const = default;
};

// JSON lines: a header {"manifest_version": 1, "seed": s} followed by one
// entry per line.
struct Manifest {
  std::uint64_t seed = 0;
  std::vector<ManifestEntry> entries;
  std::filesystem::path base_dir;

  std::vector<std::size_t> indices(Split split) const;
  // kSplitOverlap when a speaker or sentence appears in both splits.
  void check_split_hygiene() const;
  // Per-entry mixing seed derived from the manifest seed and the entry index.
  std::uint64_t entry_seed(std::size_t index) const;

  bool operator==(const Manifest& o) const { return seed == o.seed && entries == o.entries; }
};

std::uint64_t splitmix64(std::uint64_t x);

Manifest read_manifest(const std::filesystem::path& path);
void write_manifest(const std::filesystem::path& path, const Manifest& manifest);
std::string serialize_manifest(const Manifest& manifest);

// Where `mix` caches the noisy mixture of an entry:
// mixed/<index>_<entry seed>_<snr>.wav under the manifest directory.
std::filesystem::path mixed_path(const Manifest& manifest, std::size_t index);
// Mixes every entry and writes it to mixed_path.
void write_mixed_cache(const Manifest& manifest, unsigned workers = 4);

// Reads the clean WAV and the cached mixture when one exists; otherwise
// mixes the noise at the entry's SNR with its derived seed.
TrackPair load_pair(const Manifest& manifest, std::size_t index);
// Loads the given entries with up to `workers` threads; results follow the
// order of `indices`.
std::vector<TrackPair> load_pairs(const Manifest& manifest, const std::vector<std::size_t>& indices,
                                  unsigned workers = 4);

}  // namespace cdse::data
