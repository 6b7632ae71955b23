#include "dspear/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

namespace dspear::synth {

namespace {

constexpr double kFs = audio::kSampleRate;
constexpr double kPi = std::numbers::pi;

struct Vowel {
  double f1, f2, f3;
};

// Adult male formants.
constexpr Vowel kVowels[] = {{730, 1090, 2440}, {270, 2290, 3010}, {300, 870, 2240},
                             {530, 1840, 2480}, {570, 840, 2410},  {660, 1720, 2410}};

// Reduced vowel space: formants pulled halfway toward the neutral vowel.
double toward_schwa(double f, double schwa) { return schwa + 0.5 * (f - schwa); }

class Resonator {
 public:
  void set(double f, double bw) {
    f = std::clamp(f, 60.0, kFs / 2 - 150.0);
    const double r = std::exp(-kPi * bw / kFs);
    a1_ = 2.0 * r * std::cos(2.0 * kPi * f / kFs);
    a2_ = -r * r;
    g_ = 1.0 - r;
  }
  double operator()(double x) {
    const double y = g_ * x + a1_ * y1_ + a2_ * y2_;
    y2_ = y1_;
    y1_ = y;
    return y;
  }

 private:
  double a1_ = 0.0, a2_ = 0.0, g_ = 1.0, y1_ = 0.0, y2_ = 0.0;
};

void normalize_rms(std::vector<double>& x, double target) {
  double acc = 0.0;
  for (double v : x) acc += v * v;
  const double r = x.empty() ? 0.0 : std::sqrt(acc / static_cast<double>(x.size()));
  if (r <= 0.0) return;
  for (double& v : x) v = std::clamp(v * target / r, -1.0, 1.0);
}

std::size_t n_samples(double seconds) {
  if (!(seconds >= 0.0)) throw std::invalid_argument("duration must be non-negative");
  return static_cast<std::size_t>(std::llround(seconds * kFs));
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double midi_hz(double m) { return 440.0 * std::pow(2.0, (m - 69.0) / 12.0); }

std::vector<double> render_music(std::size_t n, std::mt19937_64& rng) {
  std::vector<double> out(n, 0.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const int scale[] = {0, 2, 4, 5, 7, 9, 11};
  std::size_t pos = 0;
  const double tempo = 0.25 + 0.2 * u(rng);
  while (pos < n) {
    const std::size_t len = static_cast<std::size_t>(kFs * tempo * (1 + std::floor(u(rng) * 2)));
    const int root = 48 + scale[static_cast<int>(u(rng) * 7)];
    const double notes[] = {midi_hz(root), midi_hz(root + 4), midi_hz(root + 7), midi_hz(root + 12)};
    for (std::size_t i = 0; i < len && pos + i < n; ++i) {
      const double t = static_cast<double>(i) / kFs;
      const double env = std::exp(-2.5 * t) * std::min(1.0, t * 200.0);
      double s = 0.0;
      for (int k = 0; k < 4; ++k)
        for (int h = 1; h <= 4; ++h) {
          const double f = notes[k] * h;
          if (f < kFs / 2 - 200) s += std::sin(2 * kPi * f * t) / (h * h) * (k == 0 ? 1.0 : 0.6);
        }
      out[pos + i] = s * env;
    }
    pos += len;
  }
  return out;
}

std::vector<double> render_traffic(std::size_t n, std::mt19937_64& rng) {
  std::vector<double> out(n);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double brown = 0.0;
  double hum_f = 55.0 + 30.0 * u(rng);
  double phase = 0.0;
  double lp = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    brown = 0.995 * brown + 0.05 * g(rng);
    if (i % 4000 == 0) hum_f = std::clamp(hum_f + 8.0 * g(rng), 40.0, 140.0);
    phase += 2 * kPi * hum_f / kFs;
    const double t = static_cast<double>(i) / kFs;
    const double swell = 0.6 + 0.4 * std::sin(2 * kPi * 0.15 * t);
    double hum = 0.0;
    for (int h = 1; h <= 5; ++h) hum += std::sin(h * phase) / h;
    lp = 0.9 * lp + 0.1 * (brown + 0.15 * hum * swell);
    out[i] = lp;
  }
  return out;
}

std::vector<double> render_water(std::size_t n, std::mt19937_64& rng) {
  std::vector<double> out(n, 0.0);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Resonator band_a, band_b;
  band_a.set(2200.0, 900.0);
  band_b.set(3000.0, 700.0);
  double flicker = 1.0;
  for (std::size_t i = 0; i < n; ++i) {
    flicker = 0.999 * flicker + 0.001 * (0.6 + 0.8 * u(rng));
    const double w = g(rng);
    out[i] = (band_a(w) + 0.7 * band_b(w)) * flicker;
  }
  // Bubbles: short rising chirps.
  std::size_t pos = 0;
  while (true) {
    pos += static_cast<std::size_t>(kFs * (0.03 + 0.12 * u(rng)));
    if (pos >= n) break;
    const double f0 = 900.0 + 1400.0 * u(rng);
    const std::size_t len = static_cast<std::size_t>(kFs * 0.02);
    for (std::size_t i = 0; i < len && pos + i < n; ++i) {
      const double t = static_cast<double>(i) / kFs;
      out[pos + i] += 0.08 * std::sin(2 * kPi * f0 * (1 + 8 * t) * t) * std::exp(-150 * t);
    }
  }
  return out;
}

std::vector<double> render_other(std::size_t n, std::mt19937_64& rng) {
  // Fan noise with a periodic electronic beep.
  std::vector<double> out(n, 0.0);
  std::normal_distribution<double> g(0.0, 1.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Resonator fan;
  fan.set(700.0, 500.0);
  const double beep_f = 900.0 + 600.0 * u(rng);
  const double period = 0.4 + 0.3 * u(rng);
  const double rot = 25.0 + 15.0 * u(rng);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / kFs;
    out[i] = fan(g(rng)) * (1.0 + 0.3 * std::sin(2 * kPi * rot * t));
    const double ph = std::fmod(t, period);
    if (ph < 0.12) out[i] += 0.25 * std::sin(2 * kPi * beep_f * t) + 0.1 * std::sin(4 * kPi * beep_f * t);
  }
  return out;
}

}  // namespace

EmotionStyle emotion_style(std::string_view narrow) {
  struct Row {
    std::string_view name;
    EmotionStyle s;
  };
  static const Row rows[] = {
      {"neutral_normal", {1.00, 2.0, 1.00, 1.0, 0.00, 1.00, 0.00}},
      {"neutral_conversation", {1.02, 2.5, 0.95, 1.0, 0.00, 1.01, 0.00}},
      {"neutral_distant", {0.98, 1.5, 1.05, 0.7, 0.02, 0.99, 0.01}},
      {"neutral_tete", {0.97, 1.5, 1.05, 0.6, 0.02, 1.00, 0.04}},
      {"passive", {0.95, 1.0, 1.15, 0.6, 0.03, 0.99, 0.02}},
      {"boredom", {0.92, 0.8, 1.25, 0.6, 0.04, 0.98, 0.02}},
      {"sadness", {0.90, 1.0, 1.30, 0.5, 0.05, 0.96, 0.04}},
      {"hot_anger", {1.30, 5.0, 0.80, 1.6, -0.12, 1.10, 0.00}},
      {"dominant", {1.15, 3.0, 0.90, 1.3, -0.08, 1.05, 0.00}},
      {"disgust", {1.05, 4.0, 1.10, 1.1, -0.05, 0.95, 0.06}},
      {"panic", {1.45, 6.0, 0.75, 1.4, -0.10, 1.07, 0.06}},
      {"elation", {1.35, 6.0, 0.85, 1.3, -0.10, 1.12, 0.00}},
      {"interest", {1.20, 4.0, 0.95, 1.1, -0.05, 1.06, 0.01}},
      {"happiness", {1.30, 5.0, 0.90, 1.2, -0.08, 1.09, 0.00}},
  };
  for (const auto& r : rows)
    if (r.name == narrow) return r.s;
  throw std::invalid_argument("unknown emotion '" + std::string(narrow) + "'");
}

std::vector<VoiceSpec> make_speakers(std::size_t n, std::uint64_t seed, std::string_view prefix) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<VoiceSpec> out;
  for (std::size_t i = 0; i < n; ++i) {
    VoiceSpec v;
    v.id = std::string(prefix) + std::to_string(i + 1);
    const bool male = i % 2 == 0;
    v.gender = male ? "male" : "female";
    // Walk each gender's voice space with a golden-ratio sequence so
    // neighbouring indices land far apart.
    const double k = std::fmod(0.618034 * static_cast<double>(i / 2) + 0.13, 1.0);
    const double k2 = std::fmod(0.381966 * static_cast<double>(i / 2) + 0.71, 1.0);
    v.f0_hz = male ? 95.0 + 45.0 * k + 4.0 * u(rng) : 215.0 + 60.0 * k + 5.0 * u(rng);
    v.tract_scale = (male ? 0.96 : 1.04) + 0.14 * k2 + 0.02 * u(rng);
    v.tilt = 0.72 + 0.24 * std::fmod(k + 0.5 * k2, 1.0);
    v.formant_bias = {1.0 + 0.12 * u(rng), 1.0 + 0.1 * (2 * k - 1), 1.0 + 0.08 * (2 * k2 - 1)};
    v.resonance_hz = 1400.0 + 2200.0 * std::fmod(k2 + 0.37 * k, 1.0);
    v.bandwidth_scale = 0.8 + 0.5 * std::fmod(k * 1.7 + k2, 1.0);
    v.breathiness = 0.01 + 0.03 * std::fmod(k2 * 2.3, 1.0);
    v.resonance_gain = 0.3 + 0.7 * std::fmod(k2 * 1.618 + 0.2, 1.0);
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<double> render_speech(const VoiceSpec& voice, double seconds, std::uint64_t seed,
                                  const EmotionStyle& style) {
  const std::size_t n = n_samples(seconds);
  std::vector<double> out(n, 0.0);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::normal_distribution<double> g(0.0, 1.0);

  Resonator f1, f2, f3, f4, fric;
  const double tract = voice.tract_scale * style.formant_shift;
  const double tilt = std::clamp(voice.tilt + style.tilt_delta, 0.3, 0.985);
  const double bw = voice.bandwidth_scale;
  f4.set(voice.resonance_hz, 180.0 * bw);
  fric.set(3300.0, 600.0);
  const double breath = voice.breathiness + style.breathiness;

  double lp1 = 0.0, lp2 = 0.0, prev_src = 0.0;
  double phase = 1.0;
  std::size_t pos = 0;
  // Vowels come from shuffled bags so short stretches cover the whole set.
  std::vector<std::size_t> bag;
  while (pos < n) {
    // Syllable, then a pause; occasionally a longer phrase break.
    const std::size_t syl = static_cast<std::size_t>(kFs * style.rate * (0.10 + 0.10 * u(rng)));
    const std::size_t onset = static_cast<std::size_t>(kFs * 0.03);
    const bool fricative = u(rng) < 0.5;
    const double pause_s = u(rng) < 0.1 ? 0.25 + 0.25 * u(rng) : 0.03 + 0.06 * u(rng);
    const std::size_t pause = static_cast<std::size_t>(kFs * style.rate * pause_s);
    if (bag.empty()) {
      for (std::size_t k = 0; k < std::size(kVowels); ++k) bag.push_back(k);
      std::shuffle(bag.begin(), bag.end(), rng);
    }
    const Vowel& vw = kVowels[bag.back()];
    bag.pop_back();
    f1.set(toward_schwa(vw.f1, 500.0) * tract * voice.formant_bias[0], 70.0 * bw);
    f2.set(toward_schwa(vw.f2, 1500.0) * tract * voice.formant_bias[1], 90.0 * bw);
    f3.set(toward_schwa(vw.f3, 2500.0) * tract * voice.formant_bias[2], 120.0 * bw);
    const double st0 = style.pitch_range_st * (2.0 * u(rng) - 1.0);
    const double st1 = st0 - style.pitch_range_st * u(rng);
    for (std::size_t i = 0; i < syl && pos < n; ++i, ++pos) {
      const double frac = static_cast<double>(i) / static_cast<double>(syl);
      const double f0 = voice.f0_hz * style.pitch_scale * std::pow(2.0, (st0 + (st1 - st0) * frac) / 12.0);
      phase += f0 / kFs;
      double pulse = 0.0;
      if (phase >= 1.0) {
        phase -= 1.0 + 0.01 * g(rng);  // jitter
        pulse = 1.0;
      }
      lp1 = tilt * lp1 + pulse;
      lp2 = tilt * lp2 + lp1;
      const double src = lp2 - prev_src;
      prev_src = lp2;
      const double env = std::sin(kPi * frac);
      const double excite = env * (src * (1.0 - tilt) + 0.1 * breath * g(rng));
      double y = f1(excite) + 0.8 * f2(excite) + 0.5 * f3(excite);
      y += voice.resonance_gain * f4(excite);
      if (fricative && i < onset) y += 0.15 * fric(g(rng)) * (1.0 - static_cast<double>(i) / onset);
      out[pos] = y;
    }
    for (std::size_t i = 0; i < pause && pos < n; ++i, ++pos) out[pos] = 0.0;
  }
  normalize_rms(out, 0.08 * style.energy);
  std::normal_distribution<double> floor(0.0, 3e-4);
  for (double& v : out) v = std::clamp(v + floor(rng), -1.0, 1.0);
  return out;
}

std::vector<double> render_ambient(audio::SoundClass cls, double seconds, std::uint64_t seed) {
  const std::size_t n = n_samples(seconds);
  std::mt19937_64 rng(seed);
  std::vector<double> out;
  double level = 0.08;
  switch (cls) {
    case audio::SoundClass::music:
      out = render_music(n, rng);
      level = 0.1;
      break;
    case audio::SoundClass::traffic:
      out = render_traffic(n, rng);
      level = 0.07;
      break;
    case audio::SoundClass::water:
      out = render_water(n, rng);
      level = 0.06;
      break;
    case audio::SoundClass::other:
      out = render_other(n, rng);
      level = 0.06;
      break;
    default:
      throw std::invalid_argument("render_ambient needs an ambient class");
  }
  normalize_rms(out, level);
  return out;
}

std::vector<double> render_silence(double seconds, std::uint64_t seed) {
  std::vector<double> out(n_samples(seconds));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 3e-4);
  for (double& v : out) v = g(rng);
  return out;
}

audio::AudioStream render_trace(const audio::SoundTrace& trace, const std::vector<VoiceSpec>& voices,
                                std::uint64_t seed) {
  trace.validate();
  audio::AudioStream s;
  s.origin = audio::Origin::synthetic;
  std::size_t rotation = 0;
  for (std::size_t i = 0; i < trace.segments.size(); ++i) {
    const auto& seg = trace.segments[i];
    const std::uint64_t sseed = mix(seed, i);
    // Segment boundaries snap to the sample grid of the cumulative end time.
    const std::size_t end = n_samples(seg.start_s + seg.duration_s);
    const double dur = static_cast<double>(end - std::min(end, s.samples.size())) / kFs;
    std::vector<double> x;
    if (seg.sound == audio::SoundClass::silence) {
      x = render_silence(dur, sseed);
    } else if (seg.sound == audio::SoundClass::speech) {
      if (voices.empty()) throw std::invalid_argument("speech segment but no voices");
      std::string id = seg.label;
      EmotionStyle style;
      if (auto slash = id.find('/'); slash != std::string::npos) {
        style = emotion_style(id.substr(slash + 1));
        id = id.substr(0, slash);
      }
      const VoiceSpec* v = nullptr;
      if (id.empty()) {
        v = &voices[rotation++ % voices.size()];
      } else {
        for (const auto& c : voices)
          if (c.id == id) v = &c;
        if (!v) throw std::invalid_argument("unknown voice '" + id + "'");
      }
      x = render_speech(*v, dur, sseed, style);
    } else {
      x = render_ambient(seg.sound, dur, sseed);
    }
    s.samples.insert(s.samples.end(), x.begin(), x.end());
  }
  return s;
}

audio::SoundTrace make_conversation_trace(const std::vector<VoiceSpec>& speakers, double seconds,
                                          std::uint64_t seed, double min_turn_s, double max_turn_s) {
  if (speakers.empty()) throw std::invalid_argument("conversation needs speakers");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<std::size_t> order(speakers.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  audio::SoundTrace tr;
  double t = 0.0;
  std::size_t turn = 0;
  std::size_t last = speakers.size();
  while (t < seconds - 1e-9 || turn < speakers.size()) {
    std::size_t who;
    if (turn < order.size()) {
      who = order[turn];
    } else {
      do {
        who = static_cast<std::size_t>(u(rng) * static_cast<double>(speakers.size())) % speakers.size();
      } while (speakers.size() > 1 && who == last);
    }
    const double d = min_turn_s + (max_turn_s - min_turn_s) * u(rng);
    tr.segments.push_back({t, d, audio::SoundClass::speech, speakers[who].id});
    t += d;
    last = who;
    ++turn;
  }
  return tr;
}

audio::SoundTrace make_random_trace(const std::vector<VoiceSpec>& voices, double seconds, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const audio::SoundClass ambient[] = {audio::SoundClass::music, audio::SoundClass::traffic,
                                       audio::SoundClass::water, audio::SoundClass::other};
  audio::SoundTrace tr;
  double t = 0.0;
  while (t < seconds) {
    const double r = u(rng);
    audio::TraceSegment seg;
    seg.start_s = t;
    if (r < 0.4) {
      seg.sound = audio::SoundClass::speech;
      seg.duration_s = 3.0 + 15.0 * u(rng);
      if (!voices.empty()) seg.label = voices[static_cast<std::size_t>(u(rng) * voices.size()) % voices.size()].id;
    } else if (r < 0.7) {
      seg.sound = ambient[static_cast<std::size_t>(u(rng) * 4) % 4];
      seg.duration_s = 2.0 + 10.0 * u(rng);
    } else {
      seg.sound = audio::SoundClass::silence;
      seg.duration_s = u(rng) < 0.3 ? 61.0 + 10.0 * u(rng) : 1.0 + 8.0 * u(rng);
    }
    seg.duration_s = std::min(seg.duration_s, std::max(seconds - t, 0.5));
    t += seg.duration_s;
    tr.segments.push_back(seg);
  }
  return tr;
}

}  // namespace dspear::synth
