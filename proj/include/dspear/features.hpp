#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dspear/audio_io.hpp"
#include "dspear/matrix.hpp"

namespace dspear::features {

inline constexpr std::size_t kFftSize = 256;
inline constexpr std::size_t kSpectrumBins = 128;  // bins 1..128 of the 256-point FFT
inline constexpr std::size_t kMfccDim = 20;
inline constexpr std::size_t kPlpStatic = 16;
inline constexpr std::size_t kPlpDim = 32;

struct YinConfig {
  double fmin_hz = 50.0;
  double fmax_hz = 500.0;
  double threshold = 0.15;
};

struct FeatureConfig {
  double lefr_ratio = 0.5;        // "low energy" = rms below this fraction of window-mean rms
  double rolloff_fraction = 0.85;
  double voiced_fraction = 0.2;   // mean_pitch needs at least this share of voiced frames
  std::size_t plp_lp_order = 12;
  YinConfig yin;
};

struct FrameFeatures {
  double rms = 0.0;
  double spectral_entropy = 0.0;  // bits
  double zcr = 0.0;               // crossings per frame
  double flux = 0.0;
  double rolloff = 0.0;           // Hz
  double centroid = 0.0;          // Hz
  double bandwidth = 0.0;         // Hz
  double rel_spectral_entropy = 0.0;  // bits
  double nwpd = 0.0;              // radians
  std::optional<double> pitch;    // Hz
};

// Scalar frame features in summary order (pitch excluded).
inline constexpr std::array<std::string_view, 9> kFrameFeatureNames = {
    "rms", "spectral_entropy", "zcr", "flux", "rolloff", "centroid", "bandwidth", "rel_spectral_entropy", "nwpd"};

std::array<double, 9> as_array(const FrameFeatures& f);

// Per-frame kernels. Spectral kernels take 256-sample frames.
double rms(std::span<const double> frame);
double zero_crossings(std::span<const double> frame);
double spectral_entropy(std::span<const double> frame);

// Magnitudes of bins 1..128 after a Hamming window.
std::vector<double> magnitude_spectrum(std::span<const double> frame);

// All frame features for a window. Flux and nwpd look back at earlier frames,
// relative entropy compares each frame to the window-mean spectrum.
std::vector<FrameFeatures> frame_features(const audio::Window& window, const FeatureConfig& cfg = {},
                                          bool with_pitch = false);

struct WindowSummary {
  std::vector<double> means;      // kFrameFeatureNames order
  std::vector<double> variances;
  double lefr = 0.0;
};

WindowSummary summarize(std::span<const FrameFeatures> frames, const FeatureConfig& cfg = {});

// Summary over an ambient-kind window. Throws std::invalid_argument on other kinds.
WindowSummary window_features(const audio::Window& window, const FeatureConfig& cfg = {});

// Speech-filter input: lefr then mean/variance of zcr, flux, rolloff,
// centroid, bandwidth, relative spectral entropy and nwpd.
std::vector<double> speech_filter_vector(const WindowSummary& s);
std::vector<std::string> speech_filter_feature_names();

// Fixed per-feature scale so that summaries of different units are comparable.
std::array<double, 9> feature_scales();

// Ambient fingerprint: scaled means and variances, lefr, and MFCC means c1..c19.
std::vector<double> ambient_similarity_vector(const WindowSummary& s, const Matrix& mfccs);

// Ambient GMM observation per frame: 20 MFCCs plus 7 scaled frame features.
Matrix ambient_observations(std::span<const FrameFeatures> frames, const Matrix& mfccs);
inline constexpr std::size_t kAmbientObsDim = 27;

// Speech fingerprint: mean and variance of each PLP coefficient (64 values).
std::vector<double> plp_similarity_vector(const Matrix& plp);

// ---------------------------------------------------------------------------
// Pitch

// Yin with integration window N/2. Absent when no lag passes the threshold or
// the frame carries no energy.
std::optional<double> yin_pitch(std::span<const double> samples, const YinConfig& cfg = {},
                                double sample_rate = audio::kSampleRate);

struct PitchSummary {
  std::optional<double> mean_hz;
  std::size_t voiced_frames = 0;
  std::size_t frames = 0;
};

// Mean over voiced frames of a speaker_count window; absent below the voiced share.
PitchSummary pitch_summary(const audio::Window& window, const FeatureConfig& cfg = {});
std::optional<double> mean_pitch(const audio::Window& window, const FeatureConfig& cfg = {});

// ---------------------------------------------------------------------------
// Cepstra

// Hamming, 256-point FFT, 24 mel filters over 0-4 kHz, log (floor 1e-10), DCT-II.
std::vector<double> mfcc(std::span<const double> frame);
Matrix mfcc_frames(const audio::Window& window);

// 16 static PLP cepstra of one 30 ms frame.
std::vector<double> plp_static(std::span<const double> frame, std::size_t lp_order = 12);

// 498 x 32 matrix (16 static + 16 delta) for a speech-kind window.
Matrix plp(const audio::Window& window, const FeatureConfig& cfg = {});

// Regression deltas over +-2 frames, edges clamped.
Matrix deltas(const Matrix& statics);

// ---------------------------------------------------------------------------

// `window_index,feature_name,value` rows for the scalar features of a summary.
std::string feature_dump_csv(std::span<const WindowSummary> summaries);

}  // namespace dspear::features
