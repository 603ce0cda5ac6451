#include "cdse/metrics/asr.hpp"

#include <httplib.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <exception>
#include <mutex>
#include <thread>

#include <json.hpp>

#include "cdse/data/recognizer.hpp"
#include "cdse/error.hpp"
#include "cdse/signal/wav_io.hpp"

namespace cdse::metrics {
namespace {

struct Endpoint {
  std::string base;  // scheme://host:port
  std::string path;
};

Endpoint split_url(const std::string& url) {
  const auto scheme = url.find("://");
  require(scheme != std::string::npos, ErrorCode::kConfig, "ASR url needs a scheme: " + url);
  const auto slash = url.find('/', scheme + 3);
  if (slash == std::string::npos) return {url, "/transcribe"};
  return {url.substr(0, slash), url.substr(slash)};
}

std::unique_ptr<httplib::Client> make_client(const Endpoint& ep, double timeout_s) {
  auto c = std::make_unique<httplib::Client>(ep.base);
  const auto us = std::chrono::microseconds(static_cast<std::int64_t>(timeout_s * 1e6));
  c->set_connection_timeout(us);
  c->set_read_timeout(us);
  c->set_write_timeout(us);
  c->set_keep_alive(true);
  return c;
}

}  // namespace

AsrConfig AsrConfig::from_env(AsrConfig base) {
  if (const char* v = std::getenv("CDSE_ASR_URL")) base.url = v;
  try {
    if (const char* v = std::getenv("CDSE_ASR_TIMEOUT")) base.timeout_s = std::stod(v);
    if (const char* v = std::getenv("CDSE_ASR_RETRIES")) base.retries = std::stoi(v);
    if (const char* v = std::getenv("CDSE_ASR_CONCURRENCY")) base.max_concurrency = std::stoi(v);
  } catch (const std::exception& e) {
    fail(ErrorCode::kConfig, std::string("bad ASR environment setting: ") + e.what());
  }
  return base;
}

// Idle keep-alive clients, one per concurrent request at most.
struct AsrClient::Pool {
  Endpoint endpoint;
  double timeout_s;
  std::mutex mutex;
  std::vector<std::unique_ptr<httplib::Client>> idle;

  std::unique_ptr<httplib::Client> acquire() {
    {
      std::lock_guard lock(mutex);
      if (!idle.empty()) {
        auto c = std::move(idle.back());
        idle.pop_back();
        return c;
      }
    }
    return make_client(endpoint, timeout_s);
  }
  void release(std::unique_ptr<httplib::Client> c) {
    std::lock_guard lock(mutex);
    idle.push_back(std::move(c));
  }
};

AsrClient::AsrClient(AsrConfig config) : config_(std::move(config)), pool_(std::make_unique<Pool>()) {
  require(config_.retries >= 0, ErrorCode::kConfig, "ASR retries must be >= 0");
  require(config_.max_concurrency >= 1, ErrorCode::kConfig, "ASR concurrency must be >= 1");
  require(config_.timeout_s > 0.0, ErrorCode::kConfig, "ASR timeout must be positive");
  pool_->endpoint = split_url(config_.url);
  pool_->timeout_s = config_.timeout_s;
}

AsrClient::~AsrClient() = default;

std::string AsrClient::transcribe(const signal::Waveform& audio) const {
  const auto bytes = signal::encode_wav(audio);
  const std::string body(bytes.begin(), bytes.end());
  const int attempts = 1 + config_.retries;
  ErrorCode last_code = ErrorCode::kEndpointUnreachable;
  std::string last_message;
  for (int attempt = 1; attempt <= attempts; ++attempt) {
    auto client = pool_->acquire();
    auto res = client->Post(pool_->endpoint.path, body, "audio/wav");
    if (!res) {
      const auto err = res.error();
      last_code = (err == httplib::Error::Read || err == httplib::Error::ConnectionTimeout)
                      ? ErrorCode::kTimeout
                      : ErrorCode::kEndpointUnreachable;
      last_message = httplib::to_string(err);
      continue;  // drop the broken connection
    }
    pool_->release(std::move(client));
    if (res->status != 200) {
      last_code = ErrorCode::kEndpointUnreachable;
      last_message = "HTTP " + std::to_string(res->status);
      if (res->status < 500) break;
      continue;
    }
    try {
      return nlohmann::json::parse(res->body).at("transcript").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ExternalServiceError(ErrorCode::kEndpointUnreachable,
                                 "malformed ASR reply from " + config_.url + ": " + e.what(), attempt);
    }
  }
  throw ExternalServiceError(last_code, "ASR request to " + config_.url + " failed: " + last_message, attempts);
}

std::vector<std::string> AsrClient::transcribe_batch(const std::vector<signal::Waveform>& audio) const {
  std::vector<std::string> out(audio.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < audio.size(); i = next++) {
      try {
        out[i] = transcribe(audio[i]);
      } catch (...) {
        std::lock_guard lock(error_mutex);
        if (!error) error = std::current_exception();
        next = audio.size();
      }
    }
  };
  const auto n = std::min<std::size_t>(static_cast<std::size_t>(config_.max_concurrency), audio.size());
  std::vector<std::thread> threads;
  for (std::size_t t = 0; t < n; ++t) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  if (error) std::rethrow_exception(error);
  return out;
}

std::string audio_key(const signal::Waveform& audio) {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto b : signal::encode_wav(audio)) {
    h ^= b;
    h *= 1099511628211ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

struct AsrStubServer::Impl {
  Mode mode;
  std::map<std::string, std::string> table;
  int delay_ms;
  std::unique_ptr<data::TemplateRecognizer> recognizer;
  std::mutex recognizer_mutex;
  httplib::Server server;
  std::thread thread;
  int port = 0;
  std::atomic<int> requests{0};

  std::string answer(const std::string& body) {
    const auto wave = signal::decode_wav(std::vector<std::uint8_t>(body.begin(), body.end()));
    if (mode == Mode::kTable) {
      const auto it = table.find(audio_key(wave));
      return it == table.end() ? std::string() : it->second;
    }
    std::lock_guard lock(recognizer_mutex);
    if (!recognizer) recognizer = std::make_unique<data::TemplateRecognizer>();
    return recognizer->transcribe(wave);
  }

  void install() {
    server.Post("/transcribe", [this](const httplib::Request& req, httplib::Response& res) {
      ++requests;
      if (delay_ms > 0) std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
      try {
        res.set_content(nlohmann::json{{"transcript", answer(req.body)}}.dump(), "application/json");
      } catch (const std::exception& e) {
        res.status = 400;
        res.set_content(e.what(), "text/plain");
      }
    });
  }
};

AsrStubServer::AsrStubServer(Mode mode, std::map<std::string, std::string> table, int delay_ms)
    : impl_(std::make_unique<Impl>()) {
  impl_->mode = mode;
  impl_->table = std::move(table);
  impl_->delay_ms = delay_ms;
  impl_->install();
}

AsrStubServer::~AsrStubServer() { stop(); }

int AsrStubServer::start(int port) {
  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
  } else {
    require(impl_->server.bind_to_port("127.0.0.1", port), ErrorCode::kEndpointUnreachable,
            "cannot bind port " + std::to_string(port));
    impl_->port = port;
  }
  require(impl_->port > 0, ErrorCode::kEndpointUnreachable, "cannot bind a local port");
  impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
  impl_->server.wait_until_ready();
  return impl_->port;
}

void AsrStubServer::run(const std::string& host, int port) {
  impl_->port = port;
  if (!impl_->server.listen(host, port)) {
    throw ExternalServiceError(ErrorCode::kEndpointUnreachable, "cannot listen on " + host + ":" + std::to_string(port), 1);
  }
}

void AsrStubServer::stop() {
  impl_->server.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::string AsrStubServer::url() const { return "http://127.0.0.1:" + std::to_string(impl_->port) + "/transcribe"; }

int AsrStubServer::requests() const { return impl_->requests.load(); }

}  // namespace cdse::metrics
