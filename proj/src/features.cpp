#include "dspear/features.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "dspear/spectral.hpp"

namespace dspear::features {

namespace {

constexpr double kBinHz = static_cast<double>(audio::kSampleRate) / kFftSize;
constexpr double kMaxEntropy = 7.0;  // log2(128)

struct Spectrum {
  std::vector<double> mag;    // bins 1..128
  std::vector<double> phase;
  double total = 0.0;
};

Spectrum spectrum_of(std::span<const double> frame) {
  static const std::vector<double> window = hamming(kFftSize);
  std::vector<double> xw(kFftSize, 0.0);
  const std::size_t n = std::min(frame.size(), kFftSize);
  for (std::size_t i = 0; i < n; ++i) xw[i] = frame[i] * window[i];
  const auto bins = rfft(xw, kFftSize);
  Spectrum s;
  s.mag.resize(kSpectrumBins);
  s.phase.resize(kSpectrumBins);
  for (std::size_t k = 0; k < kSpectrumBins; ++k) {
    s.mag[k] = std::abs(bins[k + 1]);
    s.phase[k] = std::arg(bins[k + 1]);
    s.total += s.mag[k];
  }
  return s;
}

double entropy_bits(const std::vector<double>& mag, double total) {
  if (!(total > 0.0)) return kMaxEntropy;
  double h = 0.0;
  for (double m : mag) {
    const double p = m / total;
    if (p > 0.0) h -= p * std::log2(p);
  }
  return std::clamp(h, 0.0, kMaxEntropy);
}

double wrap_phase(double x) {
  return x - 2.0 * std::numbers::pi * std::round(x / (2.0 * std::numbers::pi));
}

double bin_hz(std::size_t k) { return static_cast<double>(k + 1) * kBinHz; }

void fill_shape(const Spectrum& s, double rolloff_fraction, FrameFeatures& f) {
  if (!(s.total > 0.0)) return;
  double c = 0.0;
  for (std::size_t k = 0; k < kSpectrumBins; ++k) c += bin_hz(k) * s.mag[k];
  c /= s.total;
  double bw = 0.0;
  for (std::size_t k = 0; k < kSpectrumBins; ++k) bw += (bin_hz(k) - c) * (bin_hz(k) - c) * s.mag[k];
  f.centroid = c;
  f.bandwidth = std::sqrt(bw / s.total);
  double acc = 0.0;
  for (std::size_t k = 0; k < kSpectrumBins; ++k) {
    acc += s.mag[k];
    if (acc >= rolloff_fraction * s.total) {
      f.rolloff = bin_hz(k);
      break;
    }
  }
}

}  // namespace

std::array<double, 9> as_array(const FrameFeatures& f) {
  return {f.rms, f.spectral_entropy, f.zcr, f.flux, f.rolloff, f.centroid, f.bandwidth, f.rel_spectral_entropy,
          f.nwpd};
}

double rms(std::span<const double> frame) {
  if (frame.empty()) throw std::invalid_argument("rms of empty frame");
  double acc = 0.0;
  for (double x : frame) acc += x * x;
  return std::sqrt(acc / static_cast<double>(frame.size()));
}

double zero_crossings(std::span<const double> frame) {
  double n = 0.0;
  for (std::size_t i = 1; i < frame.size(); ++i)
    if ((frame[i] >= 0.0) != (frame[i - 1] >= 0.0)) n += 1.0;
  return n;
}

std::vector<double> magnitude_spectrum(std::span<const double> frame) { return spectrum_of(frame).mag; }

double spectral_entropy(std::span<const double> frame) {
  const auto s = spectrum_of(frame);
  return entropy_bits(s.mag, s.total);
}

std::vector<FrameFeatures> frame_features(const audio::Window& window, const FeatureConfig& cfg, bool with_pitch) {
  const std::size_t n = window.frames.size();
  std::vector<Spectrum> spectra;
  spectra.reserve(n);
  for (const auto& fr : window.frames) spectra.push_back(spectrum_of(fr.samples));

  // Window-mean normalized spectrum for relative entropy.
  std::vector<double> mean_p(kSpectrumBins, 0.0);
  std::size_t active = 0;
  for (const auto& s : spectra) {
    if (!(s.total > 0.0)) continue;
    ++active;
    for (std::size_t k = 0; k < kSpectrumBins; ++k) mean_p[k] += s.mag[k] / s.total;
  }
  for (auto& v : mean_p) v = active ? v / static_cast<double>(active) : 1.0 / kSpectrumBins;

  std::vector<FrameFeatures> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    const auto& fr = window.frames[t].samples;
    const auto& s = spectra[t];
    auto& f = out[t];
    f.rms = rms(fr);
    f.zcr = zero_crossings(fr);
    f.spectral_entropy = entropy_bits(s.mag, s.total);
    fill_shape(s, cfg.rolloff_fraction, f);

    if (s.total > 0.0) {
      double kl = 0.0;
      for (std::size_t k = 0; k < kSpectrumBins; ++k) {
        const double p = s.mag[k] / s.total;
        if (p > 0.0) kl += p * std::log2(p / std::max(mean_p[k], 1e-300));
      }
      f.rel_spectral_entropy = std::max(0.0, kl);
    }

    if (t >= 1) {
      const auto& prev = spectra[t - 1];
      double flux = 0.0;
      for (std::size_t k = 0; k < kSpectrumBins; ++k) {
        const double a = s.total > 0.0 ? s.mag[k] / s.total : 0.0;
        const double b = prev.total > 0.0 ? prev.mag[k] / prev.total : 0.0;
        flux += (a - b) * (a - b);
      }
      f.flux = flux;
    }
    if (t >= 2 && s.total > 0.0) {
      const auto& p1 = spectra[t - 1];
      const auto& p2 = spectra[t - 2];
      double acc = 0.0;
      for (std::size_t k = 0; k < kSpectrumBins; ++k)
        acc += s.mag[k] * std::abs(wrap_phase(s.phase[k] - 2.0 * p1.phase[k] + p2.phase[k]));
      f.nwpd = acc / s.total;
    }
    if (with_pitch) f.pitch = yin_pitch(fr, cfg.yin);
  }
  return out;
}

WindowSummary summarize(std::span<const FrameFeatures> frames, const FeatureConfig& cfg) {
  WindowSummary s;
  s.means.assign(kFrameFeatureNames.size(), 0.0);
  s.variances.assign(kFrameFeatureNames.size(), 0.0);
  if (frames.empty()) return s;
  const double n = static_cast<double>(frames.size());
  for (const auto& f : frames) {
    const auto a = as_array(f);
    for (std::size_t i = 0; i < a.size(); ++i) s.means[i] += a[i] / n;
  }
  for (const auto& f : frames) {
    const auto a = as_array(f);
    for (std::size_t i = 0; i < a.size(); ++i) s.variances[i] += (a[i] - s.means[i]) * (a[i] - s.means[i]) / n;
  }
  const double ref = cfg.lefr_ratio * s.means[0];
  std::size_t low = 0;
  for (const auto& f : frames)
    if (f.rms < ref) ++low;
  s.lefr = static_cast<double>(low) / n;
  return s;
}

WindowSummary window_features(const audio::Window& window, const FeatureConfig& cfg) {
  if (window.kind != audio::WindowKind::ambient)
    throw std::invalid_argument("window_features needs an ambient-kind window");
  const auto frames = frame_features(window, cfg);
  return summarize(frames, cfg);
}

std::vector<double> speech_filter_vector(const WindowSummary& s) {
  std::vector<double> v{s.lefr};
  for (std::size_t i = 2; i < kFrameFeatureNames.size(); ++i) {
    v.push_back(s.means[i]);
    v.push_back(s.variances[i]);
  }
  return v;
}

std::vector<std::string> speech_filter_feature_names() {
  std::vector<std::string> names{"lefr"};
  for (std::size_t i = 2; i < kFrameFeatureNames.size(); ++i) {
    names.push_back(std::string(kFrameFeatureNames[i]) + "_mean");
    names.push_back(std::string(kFrameFeatureNames[i]) + "_var");
  }
  return names;
}

std::array<double, 9> feature_scales() {
  return {1.0, kMaxEntropy, static_cast<double>(kFftSize), 1.0, 4000.0, 4000.0, 4000.0, kMaxEntropy,
          std::numbers::pi};
}

std::vector<double> ambient_similarity_vector(const WindowSummary& s, const Matrix& mfccs) {
  const auto sc = feature_scales();
  std::vector<double> v;
  for (std::size_t i = 0; i < sc.size(); ++i) v.push_back(s.means[i] / sc[i]);
  for (std::size_t i = 0; i < sc.size(); ++i) v.push_back(s.variances[i] / (sc[i] * sc[i]));
  v.push_back(s.lefr);
  for (std::size_t c = 1; c < mfccs.cols(); ++c) {
    double m = 0.0;
    for (std::size_t r = 0; r < mfccs.rows(); ++r) m += mfccs(r, c);
    v.push_back(mfccs.rows() ? m / static_cast<double>(mfccs.rows()) / 10.0 : 0.0);
  }
  return v;
}

Matrix ambient_observations(std::span<const FrameFeatures> frames, const Matrix& mfccs) {
  if (frames.size() != mfccs.rows()) throw std::invalid_argument("frame/MFCC count mismatch");
  const auto sc = feature_scales();
  Matrix obs(frames.size(), kAmbientObsDim);
  for (std::size_t t = 0; t < frames.size(); ++t) {
    for (std::size_t c = 0; c < kMfccDim; ++c) obs(t, c) = mfccs(t, c);
    const auto a = as_array(frames[t]);
    for (std::size_t i = 2; i < a.size(); ++i) obs(t, kMfccDim + i - 2) = a[i] / sc[i];
  }
  return obs;
}

std::vector<double> plp_similarity_vector(const Matrix& plp) {
  const std::size_t d = plp.cols();
  std::vector<double> v(2 * d, 0.0);
  if (plp.rows() == 0) return v;
  const double n = static_cast<double>(plp.rows());
  for (std::size_t r = 0; r < plp.rows(); ++r)
    for (std::size_t c = 0; c < d; ++c) v[c] += plp(r, c) / n;
  for (std::size_t r = 0; r < plp.rows(); ++r)
    for (std::size_t c = 0; c < d; ++c) v[d + c] += (plp(r, c) - v[c]) * (plp(r, c) - v[c]) / n;
  return v;
}

PitchSummary pitch_summary(const audio::Window& window, const FeatureConfig& cfg) {
  if (window.kind != audio::WindowKind::speaker_count)
    throw std::invalid_argument("mean_pitch needs a speaker_count-kind window");
  PitchSummary ps;
  ps.frames = window.frames.size();
  double sum = 0.0;
  for (const auto& fr : window.frames) {
    if (auto p = yin_pitch(fr.samples, cfg.yin)) {
      sum += *p;
      ++ps.voiced_frames;
    }
  }
  if (ps.voiced_frames > 0 &&
      static_cast<double>(ps.voiced_frames) >= cfg.voiced_fraction * static_cast<double>(ps.frames))
    ps.mean_hz = sum / static_cast<double>(ps.voiced_frames);
  return ps;
}

std::optional<double> mean_pitch(const audio::Window& window, const FeatureConfig& cfg) {
  return pitch_summary(window, cfg).mean_hz;
}

std::string feature_dump_csv(std::span<const WindowSummary> summaries) {
  std::ostringstream os;
  os.precision(17);
  os << "window_index,feature_name,value\n";
  for (std::size_t w = 0; w < summaries.size(); ++w) {
    const auto& s = summaries[w];
    for (std::size_t i = 0; i < kFrameFeatureNames.size(); ++i) {
      os << w << ',' << kFrameFeatureNames[i] << "_mean," << s.means[i] << '\n';
      os << w << ',' << kFrameFeatureNames[i] << "_var," << s.variances[i] << '\n';
    }
    os << w << ",lefr," << s.lefr << '\n';
  }
  return os.str();
}

}  // namespace dspear::features
