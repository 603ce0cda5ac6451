#include "cdse/signal/tf_cache.hpp"

#include <array>
#include <cstring>
#include <fstream>

#include "cdse/error.hpp"

namespace cdse::signal {
namespace {

constexpr std::array<char, 8> kMagic{'C', 'D', 'S', 'E', 'T', 'F', '0', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::ifstream& in) {
  T value{};
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  require(static_cast<bool>(in), ErrorCode::kFormat, "truncated TF record");
  return value;
}

void put_array(std::ofstream& out, const torch::Tensor& t) {
  auto c = t.detach().to(torch::kFloat64).contiguous();
  require(c.numel() == kEmbeddingSize * kEmbeddingSize, ErrorCode::kShapeMismatch, "TF record expects 256x256");
  out.write(reinterpret_cast<const char*>(c.data_ptr<double>()), static_cast<std::streamsize>(c.numel() * 8));
}

torch::Tensor get_array(std::ifstream& in) {
  auto t = torch::empty({kEmbeddingSize, kEmbeddingSize}, torch::kFloat64);
  in.read(reinterpret_cast<char*>(t.data_ptr<double>()), static_cast<std::streamsize>(t.numel() * 8));
  require(static_cast<bool>(in), ErrorCode::kFormat, "truncated TF record payload");
  return t;
}

}  // namespace

void write_tf_record(const std::filesystem::path& path, const TfRepresentation& tf) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCode::kIo, "cannot write " + path.string());
  out.write(kMagic.data(), kMagic.size());
  put<std::uint32_t>(out, kVersion);
  const auto& p = tf.plan;
  put<std::int32_t>(out, p.fft_size);
  put<std::int32_t>(out, p.window_length);
  put<std::int32_t>(out, p.n_frames);
  put<std::int32_t>(out, p.n_bins);
  put<std::int32_t>(out, static_cast<std::int32_t>(p.window));
  put<std::int64_t>(out, p.hop);
  put<std::int64_t>(out, p.original_length);
  put<std::int64_t>(out, p.pad_left);
  put<std::int64_t>(out, p.pad_right);
  put_array(out, tf.magnitude);
  put_array(out, tf.phase);
  require(static_cast<bool>(out), ErrorCode::kIo, "short write to " + path.string());
}

TfRepresentation read_tf_record(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::kIo, "cannot open " + path.string());
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  require(static_cast<bool>(in) && magic == kMagic, ErrorCode::kFormat, path.string() + " is not a TF record");
  require(get<std::uint32_t>(in) == kVersion, ErrorCode::kFormat, "unsupported TF record version");
  TfRepresentation tf;
  auto& p = tf.plan;
  p.fft_size = get<std::int32_t>(in);
  p.window_length = get<std::int32_t>(in);
  p.n_frames = get<std::int32_t>(in);
  p.n_bins = get<std::int32_t>(in);
  p.window = static_cast<WindowKind>(get<std::int32_t>(in));
  p.hop = get<std::int64_t>(in);
  p.original_length = get<std::int64_t>(in);
  p.pad_left = get<std::int64_t>(in);
  p.pad_right = get<std::int64_t>(in);
  require(p.n_frames == kEmbeddingSize && p.n_bins == kEmbeddingSize, ErrorCode::kFormat,
          "TF record has a non-256x256 plan");
  tf.magnitude = get_array(in);
  tf.phase = get_array(in);
  return tf;
}

}  // namespace cdse::signal
