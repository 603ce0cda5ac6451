#pragma once

#include <filesystem>

#include "cdse/signal/stft.hpp"

namespace cdse::signal {

// Flat little-endian record:
//   "CDSETF01" | u32 header_version | i32 fft_size, window_length, n_frames,
//   n_bins, window_kind | i64 hop, original_length, pad_left, pad_right |
//   f64 magnitude[256*256] | f64 phase[256*256]   (row-major, bins x frames)
void write_tf_record(const std::filesystem::path& path, const TfRepresentation& tf);
TfRepresentation read_tf_record(const std::filesystem::path& path);

}  // namespace cdse::signal
