#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "dspear/audio_io.hpp"
#include "dspear/features.hpp"
#include "dspear/spectral.hpp"
#include "oracles.hpp"

using namespace dspear;
using namespace dspear::features;

namespace {

std::vector<double> tone(double hz, std::size_t n, double amp = 1.0, double phase = 0.0) {
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2 * std::numbers::pi * hz * i / 8000.0 + phase);
  return x;
}

std::vector<double> noise(std::size_t n, std::uint64_t seed, double sd = 0.3) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0, sd);
  std::vector<double> x(n);
  for (auto& v : x) v = g(rng);
  return x;
}

audio::Window window_of(audio::WindowKind kind, const std::vector<double>& x) { return audio::make_window(kind, x); }

// Entropy of the Hamming-windowed magnitude spectrum, bins 1..128, via the DFT oracle.
double oracle_entropy(const std::vector<double>& frame) {
  std::vector<std::complex<double>> xw(256);
  for (std::size_t i = 0; i < 256; ++i)
    xw[i] = frame[i] * (0.54 - 0.46 * std::cos(2 * std::numbers::pi * i / 255.0));
  const auto X = oracle::dft(xw);
  double total = 0;
  for (std::size_t k = 1; k <= 128; ++k) total += std::abs(X[k]);
  double h = 0;
  for (std::size_t k = 1; k <= 128; ++k) {
    const double p = std::abs(X[k]) / total;
    if (p > 0) h -= p * std::log2(p);
  }
  return h;
}

}  // namespace

TEST_CASE("rms") {
  CHECK(rms(std::vector<double>(256, 0.0)) == 0.0);
  CHECK(rms(std::vector<double>(256, 0.5)) == doctest::Approx(0.5));
  CHECK(rms(tone(200, 256)) == doctest::Approx(std::sqrt(0.5)).epsilon(0.01));
}

TEST_CASE("fft and dct against the brute-force transforms") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> g;
  for (std::size_t n : {8u, 64u, 256u, 512u}) {
    std::vector<Complex> x(n);
    for (auto& v : x) v = {g(rng), g(rng)};
    auto fast = x;
    fft_inplace(fast);
    const auto slow = oracle::dft(x);
    double err = 0;
    for (std::size_t k = 0; k < n; ++k) err = std::max(err, std::abs(fast[k] - slow[k]));
    CHECK(err < 1e-6);
  }
  std::vector<double> x(24);
  for (auto& v : x) v = g(rng);
  const Dct dct(24, 20);
  const auto fast = dct(x);
  const auto slow = oracle::dct2(x, 20);
  for (std::size_t k = 0; k < 20; ++k) CHECK(std::abs(fast[k] - slow[k]) < 1e-6);
}

TEST_CASE("spectral entropy") {
  const auto sine = tone(1000, 256);
  CHECK(spectral_entropy(sine) < 2.0);
  CHECK(spectral_entropy(sine) == doctest::Approx(oracle_entropy(sine)).epsilon(1e-9));
  const auto n = noise(256, 5);
  CHECK(spectral_entropy(n) > 6.0);
  CHECK(spectral_entropy(n) == doctest::Approx(oracle_entropy(n)).epsilon(1e-9));
  CHECK(spectral_entropy(std::vector<double>(256, 0.0)) == doctest::Approx(7.0));
}

TEST_CASE("window features over an ambient window") {
  std::vector<double> x;
  const auto frame = tone(440, 256, 0.3);
  for (int i = 0; i < 40; ++i) x.insert(x.end(), frame.begin(), frame.end());
  const auto s = window_features(window_of(audio::WindowKind::ambient, x));
  for (double v : s.variances) CHECK(v == doctest::Approx(0.0));
  CHECK(s.means[3] == doctest::Approx(0.0));  // flux of identical frames

  std::vector<double> half(40 * 256, 0.0);
  for (std::size_t i = 20 * 256; i < half.size(); ++i) half[i] = 0.5;
  CHECK(window_features(window_of(audio::WindowKind::ambient, half)).lefr == doctest::Approx(0.5));

  std::vector<double> speech_len(40000, 0.1);
  CHECK_THROWS_AS(window_features(window_of(audio::WindowKind::speech, speech_len)), std::invalid_argument);
}

TEST_CASE("frame feature ranges and finiteness") {
  std::vector<double> x = noise(10240, 3);
  for (std::size_t i = 0; i < 2560; ++i) x[i] = 0.0;  // silent start
  const auto frames = frame_features(window_of(audio::WindowKind::ambient, x), {}, true);
  for (const auto& f : frames) {
    for (double v : as_array(f)) CHECK(std::isfinite(v));
    CHECK(f.rms >= 0);
    CHECK(f.spectral_entropy >= 0);
    CHECK(f.spectral_entropy <= 7.0 + 1e-12);
    CHECK(f.zcr >= 0);
    CHECK(f.zcr <= 255);
    CHECK(f.rolloff >= 0);
    CHECK(f.rolloff <= 4000);
    CHECK(f.centroid >= 0);
    CHECK(f.centroid <= 4000);
    if (f.pitch) {
      CHECK(*f.pitch >= 50);
      CHECK(*f.pitch <= 500);
    }
  }
  for (double v : mfcc(std::vector<double>(256, 0.0))) CHECK(std::isfinite(v));
  for (double v : plp_static(std::vector<double>(240, 0.0))) CHECK(std::isfinite(v));
}

TEST_CASE("scale invariance of shape features") {
  const auto x = [] {
    auto t = tone(310, 10240, 0.2);
    const auto n = noise(10240, 9, 0.05);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] += n[i];
    return t;
  }();
  std::vector<double> y(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = 3.0 * x[i];
  const auto fx = frame_features(window_of(audio::WindowKind::ambient, x), {}, true);
  const auto fy = frame_features(window_of(audio::WindowKind::ambient, y), {}, true);
  auto same = [](double a, double b) { return std::abs(a - b) <= 1e-9 * std::max(1.0, std::abs(a)); };
  for (std::size_t i = 0; i < fx.size(); ++i) {
    CHECK(same(fx[i].spectral_entropy, fy[i].spectral_entropy));
    CHECK(same(fx[i].centroid, fy[i].centroid));
    CHECK(same(fx[i].rolloff, fy[i].rolloff));
    CHECK(same(fx[i].bandwidth, fy[i].bandwidth));
    CHECK(same(fx[i].zcr, fy[i].zcr));
    REQUIRE(fx[i].pitch.has_value() == fy[i].pitch.has_value());
    if (fx[i].pitch) CHECK(same(*fx[i].pitch, *fy[i].pitch));
  }
}

TEST_CASE("yin pitch on tones, noise and a sawtooth") {
  const auto t200 = tone(200, 256);
  const auto p = yin_pitch(t200);
  REQUIRE(p.has_value());
  const auto ref = oracle::autocorr_pitch(t200, 8000);
  REQUIRE(ref.has_value());
  CHECK(std::abs(*ref - 200) < 3);
  CHECK(std::abs(*p - 200) < 3);

  CHECK_FALSE(yin_pitch(noise(256, 21)).has_value());

  const auto saw = audio::synth_signal(audio::SignalSpec::tone(120, 0.8, audio::Waveform::sawtooth), 0.032, 1);
  const auto ps = yin_pitch(saw.samples);
  REQUIRE(ps.has_value());
  CHECK(std::abs(*ps - 120) < 3);
  const auto rs = oracle::autocorr_pitch(saw.samples, 8000);
  REQUIRE(rs.has_value());
  CHECK(std::abs(*rs - 120) < 3);
}

TEST_CASE("yin error under 2% for 80-400 Hz tones") {
  for (double f = 80; f <= 400; f += 10) {
    const auto p = yin_pitch(tone(f, 256, 0.7, 0.3));
    REQUIRE(p.has_value());
    CHECK(std::abs(*p - f) / f < 0.02);
  }
}

TEST_CASE("mean pitch over speaker_count windows") {
  const auto x = tone(200, 24000, 0.5);
  const auto m = mean_pitch(window_of(audio::WindowKind::speaker_count, x));
  REQUIRE(m.has_value());
  CHECK(std::abs(*m - 200) < 3);

  CHECK_FALSE(mean_pitch(window_of(audio::WindowKind::speaker_count, noise(24000, 4))).has_value());

  auto mix = tone(150, 24000, 0.5);
  const auto n = noise(24000, 8);
  for (std::size_t i = 12000; i < 24000; ++i) mix[i] = n[i];
  const auto mm = mean_pitch(window_of(audio::WindowKind::speaker_count, mix));
  REQUIRE(mm.has_value());
  CHECK(std::abs(*mm - 150) < 3);

  CHECK_THROWS_AS(mean_pitch(window_of(audio::WindowKind::ambient, std::vector<double>(10240, 0.1))),
                  std::invalid_argument);
}

TEST_CASE("mfcc") {
  const auto x = noise(256, 2);
  CHECK(mfcc(x) == mfcc(x));
  REQUIRE(mfcc(x).size() == 20);
  std::vector<double> y(x);
  for (auto& v : y) v *= 2;
  const auto a = mfcc(x), b = mfcc(y);
  // Orthonormal DCT of a constant log(4) shift across 24 filters.
  CHECK(b[0] - a[0] == doctest::Approx(std::log(4.0) * std::sqrt(24.0)).epsilon(1e-9));
  for (std::size_t k = 1; k < 20; ++k) CHECK(std::abs(a[k] - b[k]) < 1e-9);
}

TEST_CASE("plp") {
  // Stationary vowel-like signal: harmonics with a fixed envelope, period dividing the hop.
  std::vector<double> vowel(40000, 0.0);
  for (int h = 1; h <= 30; ++h) {
    const double f = 100.0 * h;
    const double amp = 1.0 / (1.0 + std::pow((f - 700) / 150, 2)) + 0.5 / (1.0 + std::pow((f - 1200) / 200, 2));
    for (std::size_t i = 0; i < vowel.size(); ++i) vowel[i] += 0.1 * amp * std::sin(2 * std::numbers::pi * f * i / 8000.0);
  }
  const auto m = plp(window_of(audio::WindowKind::speech, vowel));
  REQUIRE(m.rows() == 498);
  REQUIRE(m.cols() == 32);
  double static_scale = 0, delta_max = 0;
  for (std::size_t r = 0; r < m.rows(); ++r) {
    for (std::size_t c = 0; c < 16; ++c) static_scale = std::max(static_scale, std::abs(m(r, c)));
    for (std::size_t c = 16; c < 32; ++c) delta_max = std::max(delta_max, std::abs(m(r, c)));
  }
  CHECK(delta_max < 1e-3 * static_scale);
  CHECK(plp(window_of(audio::WindowKind::speech, vowel)) == m);

  // A second formant pattern gives a clearly different mean static vector.
  std::vector<double> other(40000, 0.0);
  for (int h = 1; h <= 30; ++h) {
    const double f = 100.0 * h;
    const double amp = 1.0 / (1.0 + std::pow((f - 300) / 100, 2)) + 0.5 / (1.0 + std::pow((f - 2300) / 200, 2));
    for (std::size_t i = 0; i < other.size(); ++i) other[i] += 0.1 * amp * std::sin(2 * std::numbers::pi * f * i / 8000.0);
  }
  const auto m2 = plp(window_of(audio::WindowKind::speech, other));
  std::vector<double> a(16, 0.0), b(16, 0.0);
  for (std::size_t r = 0; r < 498; ++r)
    for (std::size_t c = 0; c < 16; ++c) {
      a[c] += m(r, c) / 498;
      b[c] += m2(r, c) / 498;
    }
  CHECK(oracle::angle_deg(a, b) > 5.0);

  CHECK_THROWS_AS(plp(window_of(audio::WindowKind::ambient, std::vector<double>(10240, 0.1))), std::invalid_argument);
}

TEST_CASE("feature dump csv") {
  std::vector<WindowSummary> s(1);
  s[0].means.assign(9, 1.0);
  s[0].variances.assign(9, 0.0);
  const auto csv = feature_dump_csv(s);
  CHECK(csv.rfind("window_index,feature_name,value\n", 0) == 0);
  CHECK(csv.find("\n0,rms_mean,1\n") != std::string::npos);
  CHECK(csv.find("\n0,lefr,0\n") != std::string::npos);
}
