#include "cdse/metrics/quality.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "cdse/dsp/fft.hpp"
#include "cdse/error.hpp"

namespace cdse::metrics {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void check_pair(const signal::Waveform& clean, const signal::Waveform& estimate) {
  require(clean.size() == estimate.size(), ErrorCode::kLengthMismatch,
          "clean has " + std::to_string(clean.size()) + " samples, estimate " + std::to_string(estimate.size()));
}

// Frame layout shared by LLR and WSS: 30 ms, skip a quarter of that, Hann
// window 0.5 (1 - cos(2 pi k / (N + 1))), k = 1..N. Both inputs get +eps.
struct ComposeFrames {
  int length;
  int skip;
  int count;
  std::vector<double> window;
};

ComposeFrames compose_frames(std::int64_t n) {
  ComposeFrames f;
  f.length = static_cast<int>(std::lround(30.0 * signal::kSampleRate / 1000.0));
  f.skip = f.length / 4;
  const double frames = static_cast<double>(n) / f.skip - static_cast<double>(f.length) / f.skip;
  f.count = frames < 1.0 ? 0 : static_cast<int>(std::floor(frames));
  f.window.resize(static_cast<std::size_t>(f.length));
  for (int k = 1; k <= f.length; ++k) {
    f.window[static_cast<std::size_t>(k - 1)] = 0.5 * (1.0 - std::cos(2.0 * M_PI * k / (f.length + 1)));
  }
  return f;
}

std::vector<double> windowed(const std::vector<double>& x, std::int64_t start, const ComposeFrames& f) {
  std::vector<double> out(static_cast<std::size_t>(f.length));
  for (int k = 0; k < f.length; ++k) {
    out[static_cast<std::size_t>(k)] = (x[static_cast<std::size_t>(start + k)] + kEps) * f.window[static_cast<std::size_t>(k)];
  }
  return out;
}

// Autocorrelation R[0..p] and the LPC polynomial [1, -a_1, ..., -a_p] by
// Levinson-Durbin.
void lpc(const std::vector<double>& frame, int p, std::vector<double>& r, std::vector<double>& poly) {
  const auto n = frame.size();
  r.assign(static_cast<std::size_t>(p + 1), 0.0);
  for (int k = 0; k <= p; ++k) {
    double s = 0.0;
    for (std::size_t i = 0; i + static_cast<std::size_t>(k) < n; ++i) s += frame[i] * frame[i + static_cast<std::size_t>(k)];
    r[static_cast<std::size_t>(k)] = s;
  }
  std::vector<double> a(static_cast<std::size_t>(p), 1.0), past(static_cast<std::size_t>(p), 0.0);
  double e = r[0];
  for (int i = 1; i <= p; ++i) {
    std::copy(a.begin(), a.begin() + (i - 1), past.begin());
    double sum = 0.0;
    for (int j = 1; j <= i - 1; ++j) sum += past[static_cast<std::size_t>(j - 1)] * r[static_cast<std::size_t>(i - j)];
    const double k = (r[static_cast<std::size_t>(i)] - sum) / e;
    a[static_cast<std::size_t>(i - 1)] = k;
    for (int j = 1; j <= i - 1; ++j) {
      a[static_cast<std::size_t>(j - 1)] = past[static_cast<std::size_t>(j - 1)] - k * past[static_cast<std::size_t>(i - j - 1)];
    }
    e *= 1.0 - k * k;
  }
  poly.assign(static_cast<std::size_t>(p + 1), 1.0);
  for (int i = 1; i <= p; ++i) poly[static_cast<std::size_t>(i)] = -a[static_cast<std::size_t>(i - 1)];
}

// a^T Toeplitz(r) a.
double toeplitz_form(const std::vector<double>& a, const std::vector<double>& r) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = 0; j < a.size(); ++j) s += a[i] * r[i > j ? i - j : j - i] * a[j];
  }
  return s;
}

constexpr std::array<double, 25> kCentre{50.0,    120.0,   190.0,   260.0,   330.0,   400.0,   470.0,
                                         540.0,   617.372, 703.378, 798.717, 904.128, 1020.38, 1148.30,
                                         1288.72, 1442.54, 1610.70, 1794.16, 1993.93, 2211.08, 2446.71,
                                         2701.97, 2978.04, 3276.17, 3597.63};
constexpr std::array<double, 25> kBandwidth{70.0,    70.0,    70.0,    70.0,    70.0,    70.0,    70.0,
                                            77.3724, 86.0056, 95.3398, 105.411, 116.256, 127.914, 140.423,
                                            153.823, 168.154, 183.457, 199.776, 217.153, 235.631, 255.255,
                                            276.072, 298.126, 321.465, 346.136};

// Nearest spectral peak for each of the 24 slopes, scanning up while the
// slope rises and down while it falls.
std::array<double, 24> local_peaks(const std::array<double, 25>& energy, const std::array<double, 24>& slope) {
  std::array<double, 24> peak{};
  for (int i = 0; i < 24; ++i) {
    int n = i;  // zero-based slope index
    if (slope[static_cast<std::size_t>(i)] > 0) {
      while (n < 24 && slope[static_cast<std::size_t>(n)] > 0) ++n;
      peak[static_cast<std::size_t>(i)] = energy[static_cast<std::size_t>(n)];
    } else {
      while (n >= 0 && slope[static_cast<std::size_t>(n)] <= 0) --n;
      peak[static_cast<std::size_t>(i)] = energy[static_cast<std::size_t>(n + 1)];
    }
  }
  return peak;
}

}  // namespace

SsnrFrames ssnr_frames(const signal::Waveform& clean, const signal::Waveform& estimate, const SsnrOptions& opts) {
  check_pair(clean, estimate);
  require(clean.size() >= opts.frame, ErrorCode::kTooShort, "track shorter than one SSNR frame");
  const auto& x = clean.data();
  const auto& y = estimate.data();
  std::vector<double> sig, err;
  for (std::int64_t start = 0; start + opts.frame <= clean.size(); start += opts.hop) {
    double s = 0.0, e = 0.0;
    for (int i = 0; i < opts.frame; ++i) {
      const auto k = static_cast<std::size_t>(start + i);
      s += x[k] * x[k];
      e += (x[k] - y[k]) * (x[k] - y[k]);
    }
    sig.push_back(s);
    err.push_back(e);
  }
  const double loudest = *std::max_element(sig.begin(), sig.end());
  require(loudest > 0.0, ErrorCode::kSilentClean, "clean track is silent");
  const double threshold = loudest * std::pow(10.0, -opts.silence_range_db / 10.0);
  SsnrFrames out;
  for (std::size_t f = 0; f < sig.size(); ++f) {
    if (sig[f] <= 0.0 || sig[f] < threshold) continue;
    const double db = err[f] == 0.0 ? opts.max_db : 10.0 * std::log10(sig[f] / err[f]);
    out.clamped_db.push_back(std::clamp(db, opts.min_db, opts.max_db));
    out.kept.push_back(static_cast<int>(f));
  }
  return out;
}

double ssnr(const signal::Waveform& clean, const signal::Waveform& estimate, const SsnrOptions& opts) {
  const auto f = ssnr_frames(clean, estimate, opts);
  return std::accumulate(f.clamped_db.begin(), f.clamped_db.end(), 0.0) / static_cast<double>(f.clamped_db.size());
}

std::vector<double> llr_frames(const signal::Waveform& clean, const signal::Waveform& estimate) {
  check_pair(clean, estimate);
  const auto f = compose_frames(clean.size());
  const int order = signal::kSampleRate < 10000 ? 10 : 16;
  std::vector<double> out;
  std::vector<double> rc, ac, rp, ap;
  for (int i = 0; i < f.count; ++i) {
    const auto start = static_cast<std::int64_t>(i) * f.skip;
    lpc(windowed(clean.data(), start, f), order, rc, ac);
    lpc(windowed(estimate.data(), start, f), order, rp, ap);
    const double d = std::log(toeplitz_form(ap, rc) / toeplitz_form(ac, rc));
    if (std::isfinite(d)) out.push_back(d);
  }
  return out;
}

std::vector<double> wss_frames(const signal::Waveform& clean, const signal::Waveform& estimate) {
  check_pair(clean, estimate);
  const auto f = compose_frames(clean.size());
  int n_fft = 1;
  while (n_fft < 2 * f.length) n_fft *= 2;
  const int half = n_fft / 2;
  const double max_freq = signal::kSampleRate / 2.0;
  const double kmax = 20.0, klocmax = 1.0;

  std::array<std::vector<double>, 25> filters;
  const double min_factor = std::exp(-30.0 / (2.0 * 2.303));
  for (std::size_t b = 0; b < 25; ++b) {
    const double f0 = std::floor(kCentre[b] / max_freq * half);
    const double bw = kBandwidth[b] / max_freq * half;
    const double norm = std::log(kBandwidth[0]) - std::log(kBandwidth[b]);
    filters[b].resize(static_cast<std::size_t>(half));
    for (int j = 0; j < half; ++j) {
      const double v = std::exp(-11.0 * std::pow((j - f0) / bw, 2) + norm);
      filters[b][static_cast<std::size_t>(j)] = v > min_factor ? v : 0.0;
    }
  }

  const dsp::RealFft fft(n_fft);
  auto band_energy = [&](const std::vector<double>& frame) {
    const auto p = fft.power(frame);
    std::array<double, 25> e{};
    for (std::size_t b = 0; b < 25; ++b) {
      double s = 0.0;
      for (int j = 0; j < half; ++j) s += p[static_cast<std::size_t>(j)] * filters[b][static_cast<std::size_t>(j)];
      e[b] = 10.0 * std::log10(std::max(s, 1e-10));
    }
    return e;
  };

  std::vector<double> out;
  for (int i = 0; i < f.count; ++i) {
    const auto start = static_cast<std::int64_t>(i) * f.skip;
    const auto ce = band_energy(windowed(clean.data(), start, f));
    const auto pe = band_energy(windowed(estimate.data(), start, f));
    std::array<double, 24> cs{}, ps{};
    for (std::size_t b = 0; b < 24; ++b) {
      cs[b] = ce[b + 1] - ce[b];
      ps[b] = pe[b + 1] - pe[b];
    }
    const auto cpk = local_peaks(ce, cs);
    const auto ppk = local_peaks(pe, ps);
    const double cmax = *std::max_element(ce.begin(), ce.end());
    const double pmax = *std::max_element(pe.begin(), pe.end());
    double num = 0.0, den = 0.0;
    for (std::size_t b = 0; b < 24; ++b) {
      const double wc = kmax / (kmax + cmax - ce[b]) * klocmax / (klocmax + cpk[b] - ce[b]);
      const double wp = kmax / (kmax + pmax - pe[b]) * klocmax / (klocmax + ppk[b] - pe[b]);
      const double w = 0.5 * (wc + wp);
      num += w * (cs[b] - ps[b]) * (cs[b] - ps[b]);
      den += w;
    }
    out.push_back(num / den);
  }
  return out;
}

double trimmed_mean(std::vector<double> values, double keep) {
  require(!values.empty(), ErrorCode::kTooShort, "no frames to average");
  std::sort(values.begin(), values.end());
  const auto n = static_cast<std::size_t>(std::lround(static_cast<double>(values.size()) * keep));
  require(n > 0, ErrorCode::kTooShort, "no frames to average");
  return std::accumulate(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(n), 0.0) / static_cast<double>(n);
}

double llr(const signal::Waveform& clean, const signal::Waveform& estimate) {
  return trimmed_mean(llr_frames(clean, estimate));
}

double wss(const signal::Waveform& clean, const signal::Waveform& estimate) {
  return trimmed_mean(wss_frames(clean, estimate));
}

Composite composite_measures(double pesq, double llr_value, double wss_value, double ssnr_db) {
  auto clip = [](double v) { return std::clamp(v, 1.0, 5.0); };
  return {clip(3.093 - 1.029 * llr_value + 0.603 * pesq - 0.009 * wss_value),
          clip(1.634 + 0.478 * pesq - 0.007 * wss_value + 0.063 * ssnr_db),
          clip(1.594 + 0.805 * pesq - 0.512 * llr_value - 0.007 * wss_value)};
}

}  // namespace cdse::metrics
