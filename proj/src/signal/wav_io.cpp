#include "cdse/signal/wav_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

#include "cdse/error.hpp"

namespace cdse::signal {
namespace {

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_tag(std::vector<std::uint8_t>& out, const char* tag) { out.insert(out.end(), tag, tag + 4); }

std::uint16_t get_u16(const std::vector<std::uint8_t>& b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

std::uint32_t get_u32(const std::vector<std::uint8_t>& b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) | (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

bool tag_is(const std::vector<std::uint8_t>& b, std::size_t at, const char* tag) {
  return std::memcmp(b.data() + at, tag, 4) == 0;
}

}  // namespace

std::vector<std::uint8_t> encode_wav(const Waveform& wave) {
  const auto n = static_cast<std::uint32_t>(wave.size());
  const std::uint32_t data_bytes = n * 2;
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  put_tag(out, "RIFF");
  put_u32(out, 36 + data_bytes);
  put_tag(out, "WAVE");
  put_tag(out, "fmt ");
  put_u32(out, 16);
  put_u16(out, 1);  // PCM
  put_u16(out, 1);  // mono
  put_u32(out, kSampleRate);
  put_u32(out, kSampleRate * 2);
  put_u16(out, 2);
  put_u16(out, 16);
  put_tag(out, "data");
  put_u32(out, data_bytes);
  for (double s : wave.samples()) {
    const double scaled = std::clamp(std::round(s * 32768.0), -32768.0, 32767.0);
    put_u16(out, static_cast<std::uint16_t>(static_cast<std::int16_t>(scaled)));
  }
  return out;
}

Waveform decode_wav(const std::vector<std::uint8_t>& b) {
  require(b.size() >= 12 && tag_is(b, 0, "RIFF") && tag_is(b, 8, "WAVE"), ErrorCode::kFormat,
          "not a RIFF/WAVE stream");
  std::size_t at = 12;
  bool have_fmt = false;
  while (at + 8 <= b.size()) {
    const std::uint32_t chunk = get_u32(b, at + 4);
    const std::size_t body = at + 8;
    require(body + chunk <= b.size() || tag_is(b, at, "data"), ErrorCode::kFormat, "truncated WAV chunk");
    if (tag_is(b, at, "fmt ")) {
      require(chunk >= 16, ErrorCode::kFormat, "short fmt chunk");
      const std::uint16_t format = get_u16(b, body);
      const std::uint16_t channels = get_u16(b, body + 2);
      const std::uint32_t rate = get_u32(b, body + 4);
      const std::uint16_t bits = get_u16(b, body + 14);
      require(format == 1 || format == 0xfffe, ErrorCode::kFormat, "only PCM WAV is supported");
      require(channels == 1, ErrorCode::kFormat, "only mono WAV is supported");
      require(bits == 16, ErrorCode::kFormat, "only 16-bit WAV is supported");
      require(rate == kSampleRate, ErrorCode::kUnsupportedSampleRate,
              "WAV sample rate " + std::to_string(rate) + " is not 16000");
      have_fmt = true;
    } else if (tag_is(b, at, "data")) {
      require(have_fmt, ErrorCode::kFormat, "data chunk before fmt chunk");
      const std::size_t bytes = std::min<std::size_t>(chunk, b.size() - body);
      std::vector<double> samples(bytes / 2);
      for (std::size_t i = 0; i < samples.size(); ++i) {
        samples[i] = static_cast<std::int16_t>(get_u16(b, body + 2 * i)) / 32768.0;
      }
      return Waveform(std::move(samples));
    }
    at = body + chunk + (chunk & 1u);
  }
  fail(ErrorCode::kFormat, "WAV stream has no data chunk");
}

Waveform read_wav(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_wav(bytes);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ": " + e.what());
  }
}

void write_wav(const std::filesystem::path& path, const Waveform& wave) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto bytes = encode_wav(wave);
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  require(static_cast<bool>(out), ErrorCode::kIo, "short write to " + path.string());
}

}  // namespace cdse::signal
