#include "cdse/data/synthetic.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <random>
#include <set>

#include "cdse/error.hpp"
#include "cdse/signal/wav_io.hpp"

namespace cdse::data {
namespace {

constexpr double kFs = signal::kSampleRate;

enum class PhoneKind { kVowel, kGlide, kNasal, kFricative, kStop };

struct Phone {
  PhoneKind kind;
  std::array<double, 3> formants;  // Hz; unused for fricatives and stops
  double ms;
  double noise_hz = 0.0;  // fricative / burst centre
  bool voiced = true;
};

const Phone kR{PhoneKind::kGlide, {310, 1060, 1380}, 70};
const Phone kL{PhoneKind::kGlide, {360, 1300, 2700}, 70};
const Phone kW{PhoneKind::kGlide, {300, 610, 2200}, 70};
const Phone kY{PhoneKind::kGlide, {270, 2290, 3010}, 60};
const Phone kN{PhoneKind::kNasal, {250, 1700, 2600}, 80};
const Phone kEh{PhoneKind::kVowel, {530, 1840, 2480}, 150};
const Phone kIy{PhoneKind::kVowel, {270, 2290, 3010}, 170};
const Phone kUw{PhoneKind::kVowel, {300, 870, 2240}, 200};
const Phone kOw{PhoneKind::kVowel, {570, 840, 2410}, 180};
const Phone kEr{PhoneKind::kVowel, {490, 1350, 1690}, 170};
const Phone kIh{PhoneKind::kVowel, {400, 1900, 2500}, 90};
const Phone kAy{PhoneKind::kVowel, {730, 1090, 2440}, 130};
const Phone kAe{PhoneKind::kVowel, {660, 1720, 2410}, 170};
const Phone kJh{PhoneKind::kFricative, {0, 0, 0}, 90, 2800, true};
const Phone kB{PhoneKind::kStop, {0, 0, 0}, 55, 900, true};
const Phone kD{PhoneKind::kStop, {0, 0, 0}, 55, 3500, true};
const Phone kG{PhoneKind::kStop, {0, 0, 0}, 55, 2200, true};
const Phone kP{PhoneKind::kStop, {0, 0, 0}, 65, 1100, false};
const Phone kT{PhoneKind::kStop, {0, 0, 0}, 65, 4200, false};
const Phone kK{PhoneKind::kStop, {0, 0, 0}, 70, 2600, false};

const std::map<std::string, std::vector<Phone>>& lexicon() {
  static const std::map<std::string, std::vector<Phone>> lex{
      {"red", {kR, kEh, kD}},
      {"green", {kG, kR, kIy, kN}},
      {"blue", {kB, kL, kUw}},
      {"yellow", {kY, kEh, kL, kOw}},
      {"purple", {kP, kEr, kP, kL}},
      {"orange", {kOw, kR, kIh, kN, kJh}},
      {"white", {kW, kAy, kIh, kT}},
      {"black", {kB, kL, kAe, kK}},
  };
  return lex;
}

// Per-sample control trajectories for one utterance.
struct Controls {
  std::vector<double> voice_amp, noise_amp, noise_hz;
  std::array<std::vector<double>, 3> formant;
};

double phone_voice_amp(const Phone& p) {
  switch (p.kind) {
    case PhoneKind::kVowel: return 1.0;
    case PhoneKind::kGlide: return 0.55;
    case PhoneKind::kNasal: return 0.3;
    case PhoneKind::kFricative: return p.voiced ? 0.15 : 0.0;
    case PhoneKind::kStop: return 0.0;
  }
  return 0.0;
}

// Two-pole resonator bandpass (RBJ constant skirt gain) applied in place with
// per-block coefficients.
class Bandpass {
 public:
  double step(double x, double fc, double q) {
    if (fc != fc_) update(fc, q);
    const double y = b0_ * x + b2_ * x2_ - a1_ * y1_ - a2_ * y2_;
    x2_ = x1_;
    x1_ = x;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  void update(double fc, double q) {
    fc_ = fc;
    const double w = 2.0 * M_PI * fc / kFs;
    const double alpha = std::sin(w) / (2.0 * q);
    const double a0 = 1.0 + alpha;
    b0_ = alpha / a0;
    b2_ = -alpha / a0;
    a1_ = -2.0 * std::cos(w) / a0;
    a2_ = (1.0 - alpha) / a0;
  }
  double fc_ = -1.0, b0_ = 0, b2_ = 0, a1_ = 0, a2_ = 0;
  double x1_ = 0, x2_ = 0, y1_ = 0, y2_ = 0;
};

void one_pole_smooth(std::vector<double>& v, double tau_s) {
  const double a = std::exp(-1.0 / (tau_s * kFs));
  double s = v.empty() ? 0.0 : v.front();
  for (auto& x : v) {
    s = a * s + (1.0 - a) * x;
    x = s;
  }
}

// Appends one word's control targets; returns nothing, extends `c`.
void append_word(Controls& c, const std::vector<Phone>& phones, const Voice& v, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> wiggle(0.92, 1.08);
  for (const auto& p : phones) {
    const auto n = static_cast<std::size_t>(p.ms * wiggle(rng) / v.rate * kFs / 1000.0);
    const double va = phone_voice_amp(p);
    for (std::size_t i = 0; i < n; ++i) {
      double na = 0.0;
      if (p.kind == PhoneKind::kFricative) na = 0.35;
      // Release burst over the final 15 ms of a stop.
      if (p.kind == PhoneKind::kStop && i + static_cast<std::size_t>(0.015 * kFs) >= n) na = p.voiced ? 0.3 : 0.5;
      c.voice_amp.push_back(p.kind == PhoneKind::kStop && p.voiced ? 0.04 : va);
      c.noise_amp.push_back(na);
      c.noise_hz.push_back(p.noise_hz > 0 ? p.noise_hz : 3000.0);
      for (int f = 0; f < 3; ++f) {
        const double target = p.formants[static_cast<std::size_t>(f)] > 0
                                  ? p.formants[static_cast<std::size_t>(f)] * v.formant_scale
                                  : (c.formant[static_cast<std::size_t>(f)].empty()
                                         ? 500.0 * (2 * f + 1) * v.formant_scale
                                         : c.formant[static_cast<std::size_t>(f)].back());
        c.formant[static_cast<std::size_t>(f)].push_back(target);
      }
    }
  }
}

void append_silence(Controls& c, double seconds) {
  const auto n = static_cast<std::size_t>(seconds * kFs);
  for (std::size_t i = 0; i < n; ++i) {
    c.voice_amp.push_back(0.0);
    c.noise_amp.push_back(0.0);
    c.noise_hz.push_back(3000.0);
    for (auto& f : c.formant) f.push_back(f.empty() ? 500.0 : f.back());
  }
}

std::vector<double> render(Controls c, const Voice& v, std::mt19937_64& rng) {
  const std::size_t n = c.voice_amp.size();
  one_pole_smooth(c.voice_amp, 0.006);
  one_pole_smooth(c.noise_amp, 0.003);
  for (auto& f : c.formant) one_pole_smooth(f, 0.02);

  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 2.0 * M_PI);
  const double vib_phase = uni(rng);
  const std::array<double, 3> gains{1.0, 0.55, 0.3};
  const std::array<double, 3> bandwidths{90.0, 110.0, 150.0};

  std::vector<double> out(n, 0.0);
  std::vector<double> harmonic_phase(64, 0.0);
  for (auto& ph : harmonic_phase) ph = uni(rng);
  constexpr std::size_t kBlock = 80;
  std::vector<double> amp_prev(64, 0.0), amp_next(64, 0.0);
  Bandpass bp;
  double f0_jitter = 0.0;
  for (std::size_t start = 0; start < n; start += kBlock) {
    const std::size_t end = std::min(n, start + kBlock);
    const double t = static_cast<double>(start) / kFs;
    const double progress = static_cast<double>(start) / static_cast<double>(n);
    f0_jitter = 0.9 * f0_jitter + 0.1 * gauss(rng) * 0.01;
    const double f0 = v.f0_hz * (1.08 - 0.16 * progress) * (1.0 + 0.015 * std::sin(2 * M_PI * 5.0 * t + vib_phase) + f0_jitter);
    const int harmonics = std::min<int>(63, static_cast<int>(7200.0 / f0));
    std::fill(amp_next.begin(), amp_next.end(), 0.0);
    for (int h = 1; h <= harmonics; ++h) {
      const double fh = h * f0;
      double a = 0.0;
      for (std::size_t f = 0; f < 3; ++f) {
        const double d = (fh - c.formant[f][start]) / bandwidths[f];
        a += gains[f] / (1.0 + d * d);
      }
      amp_next[static_cast<std::size_t>(h)] = a / std::sqrt(static_cast<double>(h));
    }
    const double len = static_cast<double>(end - start);
    for (std::size_t i = start; i < end; ++i) {
      const double frac = static_cast<double>(i - start) / len;
      double s = 0.0;
      for (int h = 1; h <= harmonics; ++h) {
        auto& ph = harmonic_phase[static_cast<std::size_t>(h)];
        ph += 2.0 * M_PI * h * f0 / kFs;
        const double a = amp_prev[static_cast<std::size_t>(h)] * (1.0 - frac) + amp_next[static_cast<std::size_t>(h)] * frac;
        s += a * std::sin(ph);
      }
      const double fric = bp.step(gauss(rng), c.noise_hz[i], 1.5);
      out[i] = c.voice_amp[i] * s + c.noise_amp[i] * fric * 2.0;
    }
    std::swap(amp_prev, amp_next);
    for (auto& ph : harmonic_phase) ph = std::fmod(ph, 2.0 * M_PI);
  }
  return out;
}

void scale_to_rms(std::vector<double>& x, double rms) {
  double p = 0.0;
  for (double v : x) p += v * v;
  p = std::sqrt(p / static_cast<double>(std::max<std::size_t>(1, x.size())));
  if (p <= 0.0) return;
  const double g = rms / p;
  for (auto& v : x) v *= g;
}

void limit_peak(std::vector<double>& x, double peak) {
  double m = 0.0;
  for (double v : x) m = std::max(m, std::abs(v));
  if (m > peak) {
    for (auto& v : x) v *= peak / m;
  }
}

std::uint64_t hash_string(std::string_view s) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

std::string join(const std::vector<std::string>& words) {
  std::string out;
  for (const auto& w : words) out += (out.empty() ? "" : " ") + w;
  return out;
}

std::string numbered(const std::string& prefix, int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%03d", prefix.c_str(), i);
  return buf;
}

}  // namespace

const std::vector<std::string>& vocabulary() {
  static const std::vector<std::string> words = [] {
    std::vector<std::string> w;
    for (const auto& [k, _] : lexicon()) w.push_back(k);
    return w;
  }();
  return words;
}

Voice random_voice(std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Voice v;
  const bool high = u(rng) < 0.5;
  v.f0_hz = high ? 180.0 + 50.0 * u(rng) : 95.0 + 40.0 * u(rng);
  v.formant_scale = (high ? 1.06 : 0.94) + 0.08 * (u(rng) - 0.5);
  v.rate = 0.9 + 0.2 * u(rng);
  return v;
}

signal::Waveform synthesize_speech(const std::vector<std::string>& words, const Voice& voice, std::uint64_t seed,
                                   const SpeechOptions& opts) {
  std::mt19937_64 rng(splitmix64(seed));
  std::uniform_real_distribution<double> gap_jitter(0.85, 1.25);
  Controls c;
  append_silence(c, opts.lead_silence_s);
  for (std::size_t i = 0; i < words.size(); ++i) {
    auto it = lexicon().find(words[i]);
    require(it != lexicon().end(), ErrorCode::kMalformed, "word '" + words[i] + "' is not in the vocabulary");
    if (i > 0) append_silence(c, opts.word_gap_s * gap_jitter(rng));
    append_word(c, it->second, voice, rng);
  }
  append_silence(c, opts.tail_silence_s);
  auto samples = render(std::move(c), voice, rng);
  scale_to_rms(samples, opts.rms);
  limit_peak(samples, 0.9);
  if (opts.floor_rms > 0.0) {
    std::normal_distribution<double> floor(0.0, opts.floor_rms);
    for (auto& s : samples) s += floor(rng);
  }
  return signal::Waveform(std::move(samples));
}

std::string_view to_string(NoiseType t) {
  switch (t) {
    case NoiseType::kWhite: return "white";
    case NoiseType::kPink: return "pink";
    case NoiseType::kBabble: return "babble";
    case NoiseType::kHum: return "hum";
  }
  return "unknown";
}

NoiseType noise_type_from_string(std::string_view s) {
  for (auto t : {NoiseType::kWhite, NoiseType::kPink, NoiseType::kBabble, NoiseType::kHum}) {
    if (to_string(t) == s) return t;
  }
  fail(ErrorCode::kConfig, "unknown noise type '" + std::string(s) + "'");
}

signal::Waveform synthesize_noise(NoiseType type, std::int64_t n, std::uint64_t seed) {
  std::mt19937_64 rng(splitmix64(seed ^ 0x6e6f697365ULL));
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> x(static_cast<std::size_t>(n), 0.0);
  switch (type) {
    case NoiseType::kWhite:
      for (auto& v : x) v = gauss(rng);
      break;
    case NoiseType::kPink: {
      // Paul Kellet's refined pinking filter.
      double b0 = 0, b1 = 0, b2 = 0, b3 = 0, b4 = 0, b5 = 0, b6 = 0;
      for (auto& v : x) {
        const double w = gauss(rng);
        b0 = 0.99886 * b0 + w * 0.0555179;
        b1 = 0.99332 * b1 + w * 0.0750759;
        b2 = 0.96900 * b2 + w * 0.1538520;
        b3 = 0.86650 * b3 + w * 0.3104856;
        b4 = 0.55000 * b4 + w * 0.5329522;
        b5 = -0.7616 * b5 - w * 0.0168980;
        v = b0 + b1 + b2 + b3 + b4 + b5 + b6 + w * 0.5362;
        b6 = w * 0.115926;
      }
      break;
    }
    case NoiseType::kBabble: {
      const auto& vocab = vocabulary();
      std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
      SpeechOptions opts;
      opts.lead_silence_s = 0.0;
      opts.tail_silence_s = 0.0;
      opts.word_gap_s = 0.05;
      opts.floor_rms = 0.0;
      for (int talker = 0; talker < 6; ++talker) {
        const auto voice = random_voice(rng());
        std::int64_t pos = -static_cast<std::int64_t>(rng() % 8000);
        while (pos < n) {
          std::vector<std::string> words;
          for (int k = 0; k < 6; ++k) words.push_back(vocab[pick(rng)]);
          const auto w = synthesize_speech(words, voice, rng(), opts);
          for (std::int64_t i = 0; i < w.size(); ++i) {
            const auto j = pos + i;
            if (j >= 0 && j < n) x[static_cast<std::size_t>(j)] += w.data()[static_cast<std::size_t>(i)];
          }
          pos += w.size();
        }
      }
      break;
    }
    case NoiseType::kHum: {
      std::uniform_real_distribution<double> uni(0.0, 2.0 * M_PI);
      std::array<double, 20> phase{};
      for (auto& p : phase) p = uni(rng);
      const double mod_phase = uni(rng);
      for (std::int64_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / kFs;
        double s = 0.0;
        for (int h = 1; h <= 20; ++h) s += std::sin(2 * M_PI * 50.0 * h * t + phase[static_cast<std::size_t>(h - 1)]) / h;
        x[static_cast<std::size_t>(i)] = s * (1.0 + 0.2 * std::sin(2 * M_PI * 0.7 * t + mod_phase)) + 0.1 * gauss(rng);
      }
      break;
    }
  }
  scale_to_rms(x, 0.1);
  limit_peak(x, 0.95);
  return signal::Waveform(std::move(x));
}

Manifest generate_corpus(const std::filesystem::path& dir, const CorpusConfig& cfg) {
  require(cfg.min_words >= 1 && cfg.max_words >= cfg.min_words, ErrorCode::kConfig, "invalid words per sentence");
  require(!cfg.snr_db.empty() && !cfg.noise_types.empty(), ErrorCode::kConfig, "corpus needs SNRs and noise types");
  require(cfg.train_speakers > 0 && cfg.test_speakers > 0, ErrorCode::kConfig, "corpus needs speakers in both splits");
  std::mt19937_64 rng(splitmix64(cfg.seed));
  const auto& vocab = vocabulary();
  std::uniform_int_distribution<std::size_t> pick(0, vocab.size() - 1);
  std::uniform_int_distribution<int> count(cfg.min_words, cfg.max_words);

  // Disjoint sentence pools: a text drawn for test never occurs in train.
  std::set<std::string> used;
  auto draw_pool = [&](int size) {
    std::vector<std::vector<std::string>> pool;
    int attempts = 0;
    while (static_cast<int>(pool.size()) < size) {
      require(++attempts < 100000, ErrorCode::kConfig, "cannot draw enough distinct sentences");
      std::vector<std::string> words;
      const int k = count(rng);
      for (int i = 0; i < k; ++i) words.push_back(vocab[pick(rng)]);
      if (used.insert(join(words)).second) pool.push_back(std::move(words));
    }
    return pool;
  };
  const auto train_pool = draw_pool(cfg.train_sentences);
  const auto test_pool = draw_pool(cfg.test_sentences);

  std::filesystem::create_directories(dir / "clean");
  std::filesystem::create_directories(dir / "noise");

  // Noise recordings: one per type and split; long enough for any track.
  std::map<std::pair<NoiseType, Split>, std::string> noise_files;
  const auto noise_len = static_cast<std::int64_t>(cfg.noise_seconds * kFs);
  for (auto split : {Split::kTrain, Split::kTest}) {
    for (auto t : cfg.noise_types) {
      const auto rel = "noise/" + std::string(to_string(t)) + "_" + std::string(to_string(split)) + ".wav";
      const auto seed = splitmix64(cfg.seed ^ hash_string(rel));
      signal::write_wav(dir / rel, synthesize_noise(t, noise_len, seed));
      noise_files[{t, split}] = rel;
    }
  }

  Manifest m;
  m.seed = cfg.seed;
  m.base_dir = dir;
  std::size_t mix_counter = 0;
  auto emit_split = [&](Split split, int speakers, int per_speaker,
                        const std::vector<std::vector<std::string>>& pool) {
    const std::string tag = split == Split::kTrain ? "tr" : "te";
    int next_sentence = 0;
    for (int s = 0; s < speakers; ++s) {
      const auto speaker = numbered("spk_" + tag, s);
      const auto voice = random_voice(cfg.seed ^ hash_string(speaker));
      for (int k = 0; k < per_speaker; ++k) {
        const int sid = next_sentence++ % static_cast<int>(pool.size());
        const auto sentence = numbered("sent_" + tag, sid);
        const auto& words = pool[static_cast<std::size_t>(sid)];
        const auto rel = "clean/" + speaker + "_" + sentence + ".wav";
        const auto wave = synthesize_speech(words, voice, cfg.seed ^ hash_string(rel));
        require(wave.size() <= noise_len, ErrorCode::kConfig, "noise_seconds shorter than a synthesized track");
        signal::write_wav(dir / rel, wave);

        std::vector<double> snrs;
        if (split == Split::kTest || cfg.train_all_snrs) {
          snrs = cfg.snr_db;
        } else {
          snrs = {cfg.snr_db[mix_counter % cfg.snr_db.size()]};
        }
        const auto noise = cfg.noise_types[mix_counter % cfg.noise_types.size()];
        ++mix_counter;
        for (double snr : snrs) {
          ManifestEntry e;
          e.clean_path = rel;
          e.noise_path = noise_files.at({noise, split});
          e.snr_db = snr;
          e.split = split;
          e.speaker_id = speaker;
          e.sentence_id = sentence;
          e.noise_id = std::string(to_string(noise));
          e.transcript = join(words);
          m.entries.push_back(std::move(e));
        }
      }
    }
  };
  emit_split(Split::kTrain, cfg.train_speakers, cfg.sentences_per_train_speaker, train_pool);
  emit_split(Split::kTest, cfg.test_speakers, cfg.sentences_per_test_speaker, test_pool);
  m.check_split_hygiene();
  write_manifest(dir / "manifest.jsonl", m);
  return m;
}

}  // namespace cdse::data
