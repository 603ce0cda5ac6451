#include "cdse/data/mixing.hpp"

#include <cmath>
#include <random>

#include "cdse/error.hpp"

namespace cdse::data {

double measured_snr_db(const signal::Waveform& clean, const signal::Waveform& noisy) {
  require(clean.size() == noisy.size(), ErrorCode::kLengthMismatch, "clean and noisy differ in length");
  double pc = 0.0;
  double pn = 0.0;
  for (std::int64_t i = 0; i < clean.size(); ++i) {
    const double c = clean.data()[static_cast<std::size_t>(i)];
    const double d = noisy.data()[static_cast<std::size_t>(i)] - c;
    pc += c * c;
    pn += d * d;
  }
  return 10.0 * std::log10(pc / pn);
}

double mix_gain(double p_clean, double p_noise, double snr_db) {
  return std::sqrt(p_clean / (p_noise * std::pow(10.0, snr_db / 10.0)));
}

TrackPair mix_at_snr(const signal::Waveform& clean, const signal::Waveform& noise, double snr_db, std::uint64_t seed) {
  require(noise.size() >= clean.size(), ErrorCode::kNoiseTooShort,
          "noise has " + std::to_string(noise.size()) + " samples, clean needs " + std::to_string(clean.size()));
  const double p_clean = clean.mean_power();
  require(!clean.empty() && p_clean > 0.0, ErrorCode::kSilentClean, "cannot mix against a silent clean track");

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::int64_t> pick(0, noise.size() - clean.size());
  const auto offset = static_cast<std::size_t>(pick(rng));
  const auto n = static_cast<std::size_t>(clean.size());

  double p_noise = 0.0;
  for (std::size_t i = 0; i < n; ++i) p_noise += noise.data()[offset + i] * noise.data()[offset + i];
  p_noise /= static_cast<double>(n);
  require(p_noise > 0.0, ErrorCode::kMalformed, "selected noise segment is silent");

  const double g = mix_gain(p_clean, p_noise, snr_db);
  std::vector<double> mixed(n);
  for (std::size_t i = 0; i < n; ++i) mixed[i] = clean.data()[i] + g * noise.data()[offset + i];
  TrackPair out;
  out.clean = clean;
  out.noisy = signal::Waveform(std::move(mixed));
  out.snr_db = snr_db;
  return out;
}

std::vector<TrackPair> segment_fixed(const TrackPair& pair, std::int64_t length, RemainderPolicy policy) {
  require(length > 0, ErrorCode::kMalformed, "segment length must be positive");
  std::vector<TrackPair> out;
  const auto n = pair.clean.size();
  for (std::int64_t start = 0; start < n; start += length) {
    const auto take = std::min(length, n - start);
    if (take < length && policy == RemainderPolicy::kDrop) break;
    std::vector<double> c(static_cast<std::size_t>(length), 0.0);
    std::vector<double> y(static_cast<std::size_t>(length), 0.0);
    std::copy_n(pair.clean.data().begin() + start, take, c.begin());
    std::copy_n(pair.noisy.data().begin() + start, take, y.begin());
    TrackPair seg = pair;
    seg.clean = signal::Waveform(std::move(c));
    seg.noisy = signal::Waveform(std::move(y));
    out.push_back(std::move(seg));
  }
  return out;
}

std::vector<VariableBatch> batch_variable(const std::vector<TrackPair>& pairs, std::size_t max_batch,
                                          torch::Dtype dtype) {
  require(max_batch > 0, ErrorCode::kMalformed, "max_batch must be positive");
  std::vector<VariableBatch> out;
  for (std::size_t first = 0; first < pairs.size(); first += max_batch) {
    const auto last = std::min(pairs.size(), first + max_batch);
    std::int64_t n_max = 0;
    for (auto i = first; i < last; ++i) n_max = std::max(n_max, pairs[i].clean.size());
    const auto b = static_cast<std::int64_t>(last - first);
    VariableBatch batch;
    auto clean = torch::zeros({b, n_max}, torch::kFloat64);
    auto noisy = torch::zeros({b, n_max}, torch::kFloat64);
    batch.mask = torch::zeros({b, n_max}, torch::kBool);
    for (auto i = first; i < last; ++i) {
      const auto row = static_cast<std::int64_t>(i - first);
      const auto len = pairs[i].clean.size();
      require(pairs[i].noisy.size() == len, ErrorCode::kLengthMismatch, "pair with unequal clean/noisy lengths");
      auto as_tensor = [&](const signal::Waveform& w) {
        return torch::from_blob(const_cast<double*>(w.data().data()), {len}, torch::kFloat64);
      };
      clean[row].narrow(0, 0, len).copy_(as_tensor(pairs[i].clean));
      noisy[row].narrow(0, 0, len).copy_(as_tensor(pairs[i].noisy));
      batch.mask[row].narrow(0, 0, len).fill_(true);
      batch.lengths.push_back(len);
      batch.indices.push_back(i);
    }
    batch.clean = clean.to(dtype);
    batch.noisy = noisy.to(dtype);
    out.push_back(std::move(batch));
  }
  return out;
}

}  // namespace cdse::data
