#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "cdse/signal/waveform.hpp"

namespace cdse::signal {

// 16-bit PCM, mono, 16 kHz RIFF/WAVE. Anything else is a format error.
Waveform read_wav(const std::filesystem::path& path);
void write_wav(const std::filesystem::path& path, const Waveform& wave);

// In-memory variants used by the ASR client and stub server.
std::vector<std::uint8_t> encode_wav(const Waveform& wave);
Waveform decode_wav(const std::vector<std::uint8_t>& bytes);

}  // namespace cdse::signal
