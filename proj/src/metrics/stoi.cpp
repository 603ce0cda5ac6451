#include "cdse/metrics/stoi.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "cdse/dsp/fft.hpp"
#include "cdse/error.hpp"

namespace cdse::metrics {
namespace {

constexpr int kFs = 10000;
constexpr int kFrame = 256;
constexpr int kHop = kFrame / 2;
constexpr int kNfft = 512;
constexpr int kBands = 15;
constexpr double kMinFreq = 150.0;
constexpr int kSegment = 30;
constexpr double kBeta = -15.0;
constexpr double kDynRange = 40.0;
constexpr double kEps = std::numeric_limits<double>::epsilon();

using Matrix = std::vector<std::vector<double>>;

// hanning(n + 2) without its zero end points.
std::vector<double> inner_hann(int n) {
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) w[static_cast<std::size_t>(i)] = 0.5 - 0.5 * std::cos(2.0 * M_PI * (i + 1) / (n + 1));
  return w;
}

std::vector<std::int64_t> frame_starts(std::size_t len) {
  std::vector<std::int64_t> s;
  for (std::int64_t i = 0; i + kFrame < static_cast<std::int64_t>(len); i += kHop) s.push_back(i);
  return s;
}

void remove_silent_frames(std::vector<double>& x, std::vector<double>& y) {
  const auto w = inner_hann(kFrame);
  const auto starts = frame_starts(x.size());
  std::vector<double> energy(starts.size());
  for (std::size_t f = 0; f < starts.size(); ++f) {
    double s = 0.0;
    for (int i = 0; i < kFrame; ++i) {
      const double v = w[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(starts[f] + i)];
      s += v * v;
    }
    energy[f] = 20.0 * std::log10(std::sqrt(s) + kEps);
  }
  const double top = energy.empty() ? 0.0 : *std::max_element(energy.begin(), energy.end());
  std::vector<std::int64_t> kept;
  for (std::size_t f = 0; f < starts.size(); ++f) {
    if (top - kDynRange - energy[f] < 0) kept.push_back(starts[f]);
  }
  const std::size_t out_len = kept.empty() ? 0 : (kept.size() - 1) * kHop + kFrame;
  std::vector<double> xs(out_len, 0.0), ys(out_len, 0.0);
  for (std::size_t k = 0; k < kept.size(); ++k) {
    for (int i = 0; i < kFrame; ++i) {
      const auto src = static_cast<std::size_t>(kept[k] + i);
      xs[k * kHop + static_cast<std::size_t>(i)] += w[static_cast<std::size_t>(i)] * x[src];
      ys[k * kHop + static_cast<std::size_t>(i)] += w[static_cast<std::size_t>(i)] * y[src];
    }
  }
  x = std::move(xs);
  y = std::move(ys);
}

// Band x frame magnitudes sqrt(OBM |X|^2).
Matrix third_octave_envelopes(const std::vector<double>& x, const std::vector<std::pair<int, int>>& bands) {
  static const auto w = inner_hann(kFrame);
  const dsp::RealFft fft(kNfft);
  const auto starts = frame_starts(x.size());
  Matrix out(kBands, std::vector<double>(starts.size(), 0.0));
  std::vector<double> frame(kFrame);
  for (std::size_t f = 0; f < starts.size(); ++f) {
    for (int i = 0; i < kFrame; ++i) {
      frame[static_cast<std::size_t>(i)] = w[static_cast<std::size_t>(i)] * x[static_cast<std::size_t>(starts[f] + i)];
    }
    const auto p = fft.power(frame);
    for (int b = 0; b < kBands; ++b) {
      double s = 0.0;
      for (int k = bands[static_cast<std::size_t>(b)].first; k < bands[static_cast<std::size_t>(b)].second; ++k) {
        s += p[static_cast<std::size_t>(k)];
      }
      out[static_cast<std::size_t>(b)][f] = std::sqrt(s);
    }
  }
  return out;
}

// [low, high) FFT bins of each band, edges snapped to the nearest bin.
std::vector<std::pair<int, int>> third_octave_bands() {
  const int bins = kNfft / 2 + 1;
  auto nearest = [&](double freq) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int k = 0; k < bins; ++k) {
      const double d = std::pow(static_cast<double>(k) * kFs / kNfft - freq, 2);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    return best;
  };
  std::vector<std::pair<int, int>> bands;
  for (int k = 0; k < kBands; ++k) {
    const double lo = kMinFreq * std::pow(2.0, (2.0 * k - 1.0) / 6.0);
    const double hi = kMinFreq * std::pow(2.0, (2.0 * k + 1.0) / 6.0);
    bands.emplace_back(nearest(lo), nearest(hi));
  }
  return bands;
}

double norm(const double* v, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += v[i] * v[i];
  return std::sqrt(s);
}

}  // namespace

std::vector<double> resample_poly(const std::vector<double>& x, int up, int down) {
  const int g = std::gcd(up, down);
  up /= g;
  down /= g;
  if (up == down) return x;

  const double cutoff = 1.0 / (2.0 * std::max(up, down));
  const double roll_off = cutoff / 10.0;
  const double rejection = 60.0;
  const int half = static_cast<int>(std::ceil((rejection - 8.0) / (28.714 * roll_off)));
  const double beta = 0.1102 * (rejection - 8.7);
  const double i0_beta = std::cyl_bessel_i(0.0, beta);
  std::vector<double> h(static_cast<std::size_t>(2 * half + 1));
  for (int t = -half; t <= half; ++t) {
    const double arg = 2.0 * cutoff * t;
    const double sinc = t == 0 ? 1.0 : std::sin(M_PI * arg) / (M_PI * arg);
    const double r = static_cast<double>(t) / half;
    const double kaiser = std::cyl_bessel_i(0.0, beta * std::sqrt(std::max(0.0, 1.0 - r * r))) / i0_beta;
    h[static_cast<std::size_t>(t + half)] = 2.0 * up * cutoff * sinc * kaiser;
  }
  const double sum = std::accumulate(h.begin(), h.end(), 0.0);
  for (auto& v : h) v *= up / sum;

  const auto n_in = static_cast<std::int64_t>(x.size());
  const std::int64_t n_out = (n_in * up + down - 1) / down;
  std::vector<double> y(static_cast<std::size_t>(n_out), 0.0);
  const auto taps = static_cast<std::int64_t>(h.size());
  for (std::int64_t m = 0; m < n_out; ++m) {
    // y[m] = sum_n x[n] h[half + m*down - n*up]
    const std::int64_t centre = m * down + half;
    const std::int64_t first = centre - (taps - 1);
    const std::int64_t n_lo = first <= 0 ? 0 : (first + up - 1) / up;
    const std::int64_t n_hi = std::min<std::int64_t>(n_in - 1, centre / up);
    double s = 0.0;
    for (std::int64_t n = n_lo; n <= n_hi; ++n) s += x[static_cast<std::size_t>(n)] * h[static_cast<std::size_t>(centre - n * up)];
    y[static_cast<std::size_t>(m)] = s;
  }
  return y;
}

double stoi(const signal::Waveform& clean, const signal::Waveform& estimate) {
  require(clean.size() == estimate.size(), ErrorCode::kLengthMismatch,
          "clean has " + std::to_string(clean.size()) + " samples, estimate " + std::to_string(estimate.size()));
  require(clean.mean_power() > 0.0, ErrorCode::kAllSilent, "clean track is silent");

  auto x = resample_poly(clean.data(), kFs, clean.sample_rate());
  auto y = resample_poly(estimate.data(), kFs, estimate.sample_rate());
  remove_silent_frames(x, y);

  static const auto bands = third_octave_bands();
  const auto xt = third_octave_envelopes(x, bands);
  const auto yt = third_octave_envelopes(y, bands);
  const int frames = static_cast<int>(xt[0].size());
  require(frames >= kSegment, ErrorCode::kTooShort,
          "only " + std::to_string(frames) + " speech frames, need " + std::to_string(kSegment));

  const double clip = 1.0 + std::pow(10.0, -kBeta / 20.0);
  double total = 0.0;
  int segments = 0;
  std::vector<double> xs(kSegment), ys(kSegment);
  for (int m = kSegment; m <= frames; ++m, ++segments) {
    for (int b = 0; b < kBands; ++b) {
      const auto& xr = xt[static_cast<std::size_t>(b)];
      const auto& yr = yt[static_cast<std::size_t>(b)];
      for (int j = 0; j < kSegment; ++j) {
        xs[static_cast<std::size_t>(j)] = xr[static_cast<std::size_t>(m - kSegment + j)];
        ys[static_cast<std::size_t>(j)] = yr[static_cast<std::size_t>(m - kSegment + j)];
      }
      const double alpha = norm(xs.data(), kSegment) / (norm(ys.data(), kSegment) + kEps);
      for (int j = 0; j < kSegment; ++j) {
        auto& v = ys[static_cast<std::size_t>(j)];
        v = std::min(v * alpha, xs[static_cast<std::size_t>(j)] * clip);
      }
      const double mx = std::accumulate(xs.begin(), xs.end(), 0.0) / kSegment;
      const double my = std::accumulate(ys.begin(), ys.end(), 0.0) / kSegment;
      for (int j = 0; j < kSegment; ++j) {
        xs[static_cast<std::size_t>(j)] -= mx;
        ys[static_cast<std::size_t>(j)] -= my;
      }
      const double nx = norm(xs.data(), kSegment) + kEps;
      const double ny = norm(ys.data(), kSegment) + kEps;
      double c = 0.0;
      for (int j = 0; j < kSegment; ++j) c += (xs[static_cast<std::size_t>(j)] / nx) * (ys[static_cast<std::size_t>(j)] / ny);
      total += c;
    }
  }
  return total / (static_cast<double>(segments) * kBands);
}

}  // namespace cdse::metrics
