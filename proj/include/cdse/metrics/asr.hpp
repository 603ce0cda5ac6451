#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "cdse/signal/waveform.hpp"

namespace cdse::metrics {

// POST <url> with the WAV bytes; the reply is {"transcript": "..."}.
struct AsrConfig {
  std::string url = "http://127.0.0.1:8765/transcribe";
  double timeout_s = 30.0;
  int retries = 2;          // extra attempts after the first
  int max_concurrency = 4;  // simultaneous requests in a batch

  // Overrides from CDSE_ASR_URL, CDSE_ASR_TIMEOUT, CDSE_ASR_RETRIES,
  // CDSE_ASR_CONCURRENCY when set.
  static AsrConfig from_env(AsrConfig base);
};

// Unreachable endpoints raise ExternalServiceError(kEndpointUnreachable),
// read timeouts kTimeout, both after 1 + retries attempts.
class AsrClient {
 public:
  explicit AsrClient(AsrConfig config);
  ~AsrClient();
  AsrClient(const AsrClient&) = delete;
  AsrClient& operator=(const AsrClient&) = delete;

  std::string transcribe(const signal::Waveform& audio) const;
  // Results follow input order.
  std::vector<std::string> transcribe_batch(const std::vector<signal::Waveform>& audio) const;

  const AsrConfig& config() const noexcept { return config_; }

 private:
  struct Pool;
  AsrConfig config_;
  std::unique_ptr<Pool> pool_;
};

// Key the table-mode stub uses: hex FNV-1a of the encoded WAV.
std::string audio_key(const signal::Waveform& audio);

// Deterministic local ASR endpoint. Table mode answers from a key ->
// transcript map (unknown audio gets ""); template mode runs the built-in
// small-vocabulary recognizer.
class AsrStubServer {
 public:
  enum class Mode { kTable, kTemplates };

  explicit AsrStubServer(Mode mode, std::map<std::string, std::string> table = {}, int delay_ms = 0);
  ~AsrStubServer();
  AsrStubServer(const AsrStubServer&) = delete;
  AsrStubServer& operator=(const AsrStubServer&) = delete;

  // Binds 127.0.0.1 (port 0 picks a free one) and serves on a background
  // thread. Returns the bound port.
  int start(int port = 0);
  // Serves on the calling thread until stop().
  void run(const std::string& host, int port);
  void stop();
  std::string url() const;
  int requests() const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace cdse::metrics
