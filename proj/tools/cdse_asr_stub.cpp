#include <CLI11.hpp>

#include <csignal>
#include <iostream>

#include "cdse/metrics/asr.hpp"

namespace {
cdse::metrics::AsrStubServer* g_server = nullptr;
void on_signal(int) {
  if (g_server) g_server->stop();
}
}  // namespace

// Serves POST /transcribe with the built-in template recognizer until
// SIGINT or SIGTERM.
int main(int argc, char** argv) {
  CLI::App app{"Deterministic local ASR endpoint"};
  std::string host = "127.0.0.1";
  int port = 8765;
  int delay_ms = 0;
  app.add_option("--host", host);
  app.add_option("--port", port);
  app.add_option("--delay-ms", delay_ms, "Added latency per request");
  CLI11_PARSE(app, argc, argv);

  cdse::metrics::AsrStubServer server(cdse::metrics::AsrStubServer::Mode::kTemplates, {}, delay_ms);
  g_server = &server;
  std::signal(SIGINT, on_signal);
  std::signal(SIGTERM, on_signal);
  std::cout << "listening on http://" << host << ":" << port << "/transcribe\n" << std::flush;
  server.run(host, port);
  return 0;
}
