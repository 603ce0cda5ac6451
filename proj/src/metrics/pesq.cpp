#include "cdse/metrics/pesq.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <atomic>
#include <cstdio>
#include <sstream>

#include "cdse/error.hpp"
#include "cdse/signal/wav_io.hpp"

namespace cdse::metrics {
namespace {

std::string quote(const std::string& s) {
  std::string out = "'";
  for (const char c : s) {
    if (c == '\'') {
      out += "'\\''";
    } else {
      out.push_back(c);
    }
  }
  return out + "'";
}

class TempDir {
 public:
  TempDir() {
    static std::atomic<unsigned> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("cdse_pesq_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
};

}  // namespace

ExternalPesq::ExternalPesq(std::filesystem::path program) : program_(std::move(program)) {
  require(std::filesystem::exists(program_), ErrorCode::kConfig, "PESQ plug-in not found: " + program_.string());
}

double ExternalPesq::score(const signal::Waveform& reference, const signal::Waveform& degraded) const {
  TempDir dir;
  const auto ref = dir.path() / "reference.wav";
  const auto deg = dir.path() / "degraded.wav";
  signal::write_wav(ref, reference);
  signal::write_wav(deg, degraded);

  std::string cmd = program_.extension() == ".py" ? "python3 " + quote(program_.string()) : quote(program_.string());
  cmd += " " + quote(ref.string()) + " " + quote(deg.string()) + " 2>&1";
  FILE* pipe = ::popen(cmd.c_str(), "r");
  if (pipe == nullptr) throw ExternalServiceError(ErrorCode::kExternalTool, "could not start " + program_.string(), 1);
  std::string output;
  std::array<char, 512> buf{};
  while (std::fgets(buf.data(), static_cast<int>(buf.size()), pipe) != nullptr) output += buf.data();
  const int status = ::pclose(pipe);
  if (status != 0 || !WIFEXITED(status)) {
    throw ExternalServiceError(ErrorCode::kExternalTool, program_.string() + " failed: " + output, 1);
  }

  std::istringstream lines(output);
  std::string last;
  for (std::string line; std::getline(lines, line);) {
    if (line.find_first_not_of(" \t\r") != std::string::npos) last = line;
  }
  try {
    std::size_t used = 0;
    const double v = std::stod(last, &used);
    if (last.find_first_not_of(" \t\r", used) != std::string::npos) throw std::invalid_argument(last);
    return v;
  } catch (const std::exception&) {
    throw ExternalServiceError(ErrorCode::kExternalTool, "unparseable PESQ output: " + output, 1);
  }
}

}  // namespace cdse::metrics
