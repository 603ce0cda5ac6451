#include "cdse/data/recognizer.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "cdse/data/synthetic.hpp"
#include "cdse/dsp/fft.hpp"

namespace cdse::data {
namespace {

constexpr int kFrame = 400;
constexpr int kHop = 160;
constexpr int kFft = 512;
constexpr int kBands = 24;
constexpr int kMergeGap = 8;   // frames; bridges stop closures inside a word
constexpr int kMinWord = 10;   // frames

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

const std::vector<std::vector<double>>& mel_bank() {
  static const auto bank = [] {
    std::vector<std::vector<double>> w(kBands, std::vector<double>(kFft / 2 + 1, 0.0));
    const double lo = hz_to_mel(100.0);
    const double hi = hz_to_mel(7000.0);
    std::vector<double> edges;
    for (int i = 0; i < kBands + 2; ++i) edges.push_back(mel_to_hz(lo + (hi - lo) * i / (kBands + 1)));
    for (int b = 0; b < kBands; ++b) {
      for (int k = 0; k <= kFft / 2; ++k) {
        const double f = k * 16000.0 / kFft;
        const double l = edges[b], c = edges[b + 1], r = edges[b + 2];
        double v = 0.0;
        if (f > l && f <= c) v = (f - l) / (c - l);
        if (f > c && f < r) v = (r - f) / (r - c);
        w[static_cast<std::size_t>(b)][static_cast<std::size_t>(k)] = v;
      }
    }
    return w;
  }();
  return bank;
}

struct Analysis {
  TemplateRecognizer::Features mel;
  std::vector<double> energy_db;
};

Analysis analyse(const signal::Waveform& wave) {
  static const auto window = dsp::hamming_window(kFrame);
  const dsp::RealFft fft(kFft);
  Analysis a;
  const auto& x = wave.data();
  std::vector<double> frame(kFrame);
  for (std::int64_t start = 0; start + kFrame <= wave.size(); start += kHop) {
    for (int i = 0; i < kFrame; ++i) frame[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(start + i)] * window[static_cast<std::size_t>(i)];
    const auto p = fft.power(frame);
    std::vector<double> bands(kBands);
    double total = 0.0;
    for (int b = 0; b < kBands; ++b) {
      double e = 0.0;
      for (std::size_t k = 0; k < p.size(); ++k) e += mel_bank()[static_cast<std::size_t>(b)][k] * p[k];
      bands[static_cast<std::size_t>(b)] = std::log(e + 1e-8);
      total += e;
    }
    a.mel.push_back(std::move(bands));
    a.energy_db.push_back(10.0 * std::log10(total + 1e-12));
  }
  return a;
}

std::vector<std::pair<int, int>> find_words(const std::vector<double>& energy_db) {
  const int n = static_cast<int>(energy_db.size());
  if (n == 0) return {};
  std::vector<double> smooth(energy_db.size());
  for (int i = 0; i < n; ++i) {
    std::array<double, 3> w{energy_db[static_cast<std::size_t>(std::max(0, i - 1))], energy_db[static_cast<std::size_t>(i)],
                            energy_db[static_cast<std::size_t>(std::min(n - 1, i + 1))]};
    std::sort(w.begin(), w.end());
    smooth[static_cast<std::size_t>(i)] = w[1];
  }
  auto sorted = smooth;
  std::sort(sorted.begin(), sorted.end());
  const double floor = sorted[static_cast<std::size_t>(0.1 * (n - 1))];
  const double peak = sorted.back();
  const double thr = floor + std::max(3.0, 0.3 * (peak - floor));

  std::vector<std::pair<int, int>> runs;
  for (int i = 0; i < n;) {
    if (smooth[static_cast<std::size_t>(i)] <= thr) {
      ++i;
      continue;
    }
    int j = i;
    while (j < n && smooth[static_cast<std::size_t>(j)] > thr) ++j;
    if (!runs.empty() && i - runs.back().second < kMergeGap) {
      runs.back().second = j;
    } else {
      runs.emplace_back(i, j);
    }
    i = j;
  }
  std::erase_if(runs, [](const auto& r) { return r.second - r.first < kMinWord; });
  return runs;
}

TemplateRecognizer::Features normalised(const TemplateRecognizer::Features& mel, int begin, int end) {
  TemplateRecognizer::Features out(mel.begin() + begin, mel.begin() + end);
  std::vector<double> mean(kBands, 0.0);
  for (const auto& f : out)
    for (int b = 0; b < kBands; ++b) mean[static_cast<std::size_t>(b)] += f[static_cast<std::size_t>(b)];
  for (auto& m : mean) m /= static_cast<double>(out.size());
  for (auto& f : out)
    for (int b = 0; b < kBands; ++b) f[static_cast<std::size_t>(b)] -= mean[static_cast<std::size_t>(b)];
  return out;
}

double dtw(const TemplateRecognizer::Features& a, const TemplateRecognizer::Features& b) {
  const std::size_t n = a.size(), m = b.size();
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m + 1, inf), cur(m + 1, inf);
  prev[0] = 0.0;
  for (std::size_t i = 1; i <= n; ++i) {
    cur[0] = inf;
    for (std::size_t j = 1; j <= m; ++j) {
      double d = 0.0;
      for (int k = 0; k < kBands; ++k) {
        const double diff = a[i - 1][static_cast<std::size_t>(k)] - b[j - 1][static_cast<std::size_t>(k)];
        d += diff * diff;
      }
      d = std::sqrt(d);
      cur[j] = d + std::min({prev[j], cur[j - 1], prev[j - 1]});
    }
    std::swap(prev, cur);
  }
  return prev[m] / static_cast<double>(n + m);
}

}  // namespace

TemplateRecognizer::TemplateRecognizer() : TemplateRecognizer(Options{}) {}

TemplateRecognizer::TemplateRecognizer(Options opts) {
  SpeechOptions speech;
  speech.lead_silence_s = 0.1;
  speech.tail_silence_s = 0.1;
  for (int v = 0; v < opts.reference_voices; ++v) {
    const auto voice = random_voice(opts.seed * 1000 + static_cast<std::uint64_t>(v));
    for (const auto& word : vocabulary()) {
      const auto wave = synthesize_speech({word}, voice, opts.seed + static_cast<std::uint64_t>(v) * 31 + word.size(), speech);
      const auto a = analyse(wave);
      const auto runs = find_words(a.energy_db);
      if (runs.empty()) continue;
      // The whole word: first onset to last offset.
      templates_.emplace_back(word, normalised(a.mel, runs.front().first, runs.back().second));
    }
  }
}

TemplateRecognizer::Features TemplateRecognizer::features(const signal::Waveform& wave) { return analyse(wave).mel; }

std::vector<std::pair<int, int>> TemplateRecognizer::segment(const signal::Waveform& wave) {
  return find_words(analyse(wave).energy_db);
}

std::string TemplateRecognizer::transcribe(const signal::Waveform& wave) const {
  const auto a = analyse(wave);
  std::string out;
  for (const auto& [b, e] : find_words(a.energy_db)) {
    const auto seg = normalised(a.mel, b, e);
    double best = std::numeric_limits<double>::infinity();
    const std::string* word = nullptr;
    for (const auto& [w, t] : templates_) {
      const double d = dtw(seg, t);
      if (d < best) {
        best = d;
        word = &w;
      }
    }
    if (word != nullptr) out += (out.empty() ? "" : " ") + *word;
  }
  return out;
}

}  // namespace cdse::data
