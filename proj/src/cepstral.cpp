#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dspear/features.hpp"
#include "dspear/spectral.hpp"

namespace dspear::features {

namespace {

constexpr std::size_t kMelFilters = 24;
constexpr double kLogFloor = 1e-10;
constexpr std::size_t kPowerBins = kFftSize / 2 + 1;

double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }
double hz_to_bark(double f) { return 6.0 * std::asinh(f / 600.0); }

double bin_freq(std::size_t k) { return static_cast<double>(k) * audio::kSampleRate / kFftSize; }

std::vector<double> power_spectrum(std::span<const double> frame, const std::vector<double>& window) {
  std::vector<double> xw(kFftSize, 0.0);
  const std::size_t n = std::min({frame.size(), window.size(), kFftSize});
  for (std::size_t i = 0; i < n; ++i) xw[i] = frame[i] * window[i];
  const auto bins = rfft(xw, kFftSize);
  std::vector<double> p(kPowerBins);
  for (std::size_t k = 0; k < kPowerBins; ++k) p[k] = std::norm(bins[k]);
  return p;
}

struct MelBank {
  std::vector<std::vector<double>> weights;  // filter x bin
  Dct dct{kMelFilters, kMfccDim};
  std::vector<double> window = hamming(kFftSize);

  MelBank() {
    const double top = hz_to_mel(audio::kSampleRate / 2.0);
    std::vector<double> edges(kMelFilters + 2);
    for (std::size_t i = 0; i < edges.size(); ++i)
      edges[i] = mel_to_hz(top * static_cast<double>(i) / static_cast<double>(kMelFilters + 1));
    weights.assign(kMelFilters, std::vector<double>(kPowerBins, 0.0));
    for (std::size_t m = 0; m < kMelFilters; ++m) {
      const double lo = edges[m], mid = edges[m + 1], hi = edges[m + 2];
      for (std::size_t k = 0; k < kPowerBins; ++k) {
        const double f = bin_freq(k);
        if (f > lo && f < mid) weights[m][k] = (f - lo) / (mid - lo);
        else if (f >= mid && f < hi) weights[m][k] = (hi - f) / (hi - mid);
      }
    }
  }
};

const MelBank& mel_bank() {
  static const MelBank bank;
  return bank;
}

struct BarkBank {
  std::size_t bands = 0;
  std::vector<std::vector<double>> weights;  // band x bin, equal-loudness folded in
  std::vector<double> window = hamming(240);

  BarkBank() {
    const double zmax = hz_to_bark(audio::kSampleRate / 2.0);
    bands = static_cast<std::size_t>(std::ceil(zmax)) + 1;
    const double step = zmax / static_cast<double>(bands - 1);
    weights.assign(bands, std::vector<double>(kPowerBins, 0.0));
    for (std::size_t b = 0; b < bands; ++b) {
      const double zc = step * static_cast<double>(b);
      // Equal-loudness curve at the band centre.
      const double fc = 600.0 * std::sinh(zc / 6.0);
      const double w2 = std::pow(2.0 * std::numbers::pi * fc, 2.0);
      const double eql = ((w2 + 56.8e6) * w2 * w2) / (std::pow(w2 + 6.3e6, 2.0) * (w2 + 0.38e9));
      for (std::size_t k = 0; k < kPowerBins; ++k) {
        const double dz = hz_to_bark(bin_freq(k)) - zc;
        double m = 0.0;
        if (dz >= -1.3 && dz < -0.5) m = std::pow(10.0, 2.5 * (dz + 0.5));
        else if (dz >= -0.5 && dz <= 0.5) m = 1.0;
        else if (dz > 0.5 && dz <= 2.5) m = std::pow(10.0, -(dz - 0.5));
        weights[b][k] = eql * m;
      }
    }
  }
};

const BarkBank& bark_bank() {
  static const BarkBank bank;
  return bank;
}

// Levinson-Durbin. Returns a[0..p] with a[0] = 1 for A(z) = 1 + sum a_k z^-k.
std::vector<double> durbin(const std::vector<double>& r, std::size_t p) {
  std::vector<double> a(p + 1, 0.0), prev(p + 1, 0.0);
  a[0] = 1.0;
  double err = r[0];
  for (std::size_t i = 1; i <= p; ++i) {
    if (!(err > 0.0)) break;
    double acc = r[i];
    for (std::size_t j = 1; j < i; ++j) acc += a[j] * r[i - j];
    const double k = -acc / err;
    prev = a;
    for (std::size_t j = 1; j < i; ++j) a[j] = prev[j] + k * prev[i - j];
    a[i] = k;
    err *= (1.0 - k * k);
  }
  return a;
}

}  // namespace

std::vector<double> mfcc(std::span<const double> frame) {
  const auto& bank = mel_bank();
  const auto p = power_spectrum(frame, bank.window);
  std::vector<double> logmel(kMelFilters);
  for (std::size_t m = 0; m < kMelFilters; ++m) {
    double e = 0.0;
    for (std::size_t k = 0; k < kPowerBins; ++k) e += bank.weights[m][k] * p[k];
    logmel[m] = std::log(std::max(e, kLogFloor));
  }
  return bank.dct(logmel);
}

Matrix mfcc_frames(const audio::Window& window) {
  Matrix out(window.frames.size(), kMfccDim);
  for (std::size_t t = 0; t < window.frames.size(); ++t) {
    const auto c = mfcc(window.frames[t].samples);
    std::copy(c.begin(), c.end(), out.row(t).begin());
  }
  return out;
}

std::vector<double> plp_static(std::span<const double> frame, std::size_t lp_order) {
  const auto& bank = bark_bank();
  const std::size_t m = bank.bands;
  if (lp_order < 1 || lp_order >= 2 * (m - 1)) throw std::invalid_argument("PLP LP order out of range");
  const auto p = power_spectrum(frame, bank.window);

  std::vector<double> aud(m);
  for (std::size_t b = 0; b < m; ++b) {
    double e = 0.0;
    for (std::size_t k = 0; k < kPowerBins; ++k) e += bank.weights[b][k] * p[k];
    aud[b] = std::pow(std::max(e, kLogFloor), 0.33);
  }
  aud.front() = aud[1];
  aud.back() = aud[m - 2];

  // Autocorrelation as the inverse DFT of the symmetric auditory spectrum.
  const std::size_t n2 = 2 * (m - 1);
  std::vector<double> r(lp_order + 1, 0.0);
  for (std::size_t lag = 0; lag <= lp_order; ++lag) {
    double acc = 0.0;
    for (std::size_t j = 0; j < n2; ++j) {
      const std::size_t idx = j < m ? j : n2 - j;
      acc += aud[idx] * std::cos(2.0 * std::numbers::pi * static_cast<double>(lag * j) / static_cast<double>(n2));
    }
    r[lag] = acc / static_cast<double>(n2);
  }

  const auto a = durbin(r, lp_order);
  std::vector<double> c(kPlpStatic + 1, 0.0);
  for (std::size_t n = 1; n <= kPlpStatic; ++n) {
    double acc = n <= lp_order ? -a[n] : 0.0;
    for (std::size_t k = 1; k < n; ++k) {
      if (n - k > lp_order) continue;
      acc -= (static_cast<double>(k) / static_cast<double>(n)) * c[k] * a[n - k];
    }
    c[n] = acc;
  }
  return {c.begin() + 1, c.end()};
}

Matrix deltas(const Matrix& statics) {
  const std::size_t t_count = statics.rows(), d = statics.cols();
  Matrix out(t_count, d);
  if (t_count == 0) return out;
  for (std::size_t t = 0; t < t_count; ++t) {
    for (std::size_t c = 0; c < d; ++c) {
      double acc = 0.0;
      for (std::size_t k = 1; k <= 2; ++k) {
        const std::size_t fwd = std::min(t + k, t_count - 1);
        const std::size_t back = t >= k ? t - k : 0;
        acc += static_cast<double>(k) * (statics(fwd, c) - statics(back, c));
      }
      out(t, c) = acc / 10.0;
    }
  }
  return out;
}

Matrix plp(const audio::Window& window, const FeatureConfig& cfg) {
  if (window.kind != audio::WindowKind::speech) throw std::invalid_argument("plp needs a speech-kind window");
  Matrix statics(window.frames.size(), kPlpStatic);
  for (std::size_t t = 0; t < window.frames.size(); ++t) {
    const auto c = plp_static(window.frames[t].samples, cfg.plp_lp_order);
    std::copy(c.begin(), c.end(), statics.row(t).begin());
  }
  const Matrix d = deltas(statics);
  Matrix out(statics.rows(), kPlpDim);
  for (std::size_t t = 0; t < statics.rows(); ++t) {
    for (std::size_t c = 0; c < kPlpStatic; ++c) {
      out(t, c) = statics(t, c);
      out(t, kPlpStatic + c) = d(t, c);
    }
  }
  return out;
}

}  // namespace dspear::features
