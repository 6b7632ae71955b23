#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace dspear::audio {

inline constexpr int kSampleRate = 8000;

enum class Origin { file, synthetic };

// Mono PCM at 8 kHz, samples normalized to [-1, 1].
struct AudioStream {
  int sample_rate = kSampleRate;
  std::vector<double> samples;
  Origin origin = Origin::synthetic;

  double duration_s() const { return static_cast<double>(samples.size()) / sample_rate; }
};

struct ReadOptions {
  // Linearly interpolate other rates to 8 kHz instead of rejecting them.
  bool resample = false;
};

AudioStream read_wav(const std::filesystem::path& path, ReadOptions options = {});
AudioStream decode_wav(std::span<const std::uint8_t> bytes, ReadOptions options = {});

// Writes mono PCM-16. Samples outside [-1, 1] are clipped.
void write_wav(const std::filesystem::path& path, const AudioStream& stream);
std::vector<std::uint8_t> encode_wav(std::span<const double> samples, int sample_rate);

std::vector<double> resample_linear(std::span<const double> in, int from_rate, int to_rate);

// ---------------------------------------------------------------------------
// Framing

enum class WindowKind { ambient, speaker_count, speech };

struct WindowGeometry {
  std::size_t frame_len;   // samples per frame
  std::size_t frame_hop;   // samples between frame starts
  std::size_t window_len;  // samples per window
  std::size_t frame_count;
};

// ambient: 40 x 32 ms, no overlap (1.28 s)
// speaker_count: 3 s of 32 ms frames at 50% overlap -> 187 frames
// speech: 5 s of 30 ms frames at 10 ms hop -> 498 frames
//
// Frames cover the whole window; a final frame running past the window end
// is zero-padded (only happens for speaker_count).
WindowGeometry geometry(WindowKind kind);
std::string_view to_string(WindowKind kind);

struct Frame {
  std::vector<double> samples;
  std::size_t start_index = 0;  // offset into the source stream
};

struct Window {
  WindowKind kind = WindowKind::ambient;
  std::size_t start_index = 0;
  std::vector<Frame> frames;

  // Raw samples of the window span (window_len values, no padding).
  std::vector<double> samples;
};

// Frames one window's worth of samples starting at `start_index`.
Window make_window(WindowKind kind, std::span<const double> window_samples,
                   std::size_t start_index = 0);

// Tiles the stream into consecutive, non-overlapping windows of the kind.
// The trailing partial window is dropped. Throws if the stream is shorter
// than one window.
std::vector<Window> frame_stream(const AudioStream& stream, WindowKind kind);

std::size_t window_count(std::size_t n_samples, WindowKind kind);

// ---------------------------------------------------------------------------
// Synthetic test signals

enum class Waveform { sine, sawtooth, square };

struct ToneSpec {
  double frequency_hz = 440.0;
  double amplitude = 1.0;
  Waveform waveform = Waveform::sine;
  double phase = 0.0;
};

struct NoiseSpec {
  double amplitude = 0.3;  // standard deviation, clipped to [-1, 1]
};

struct SignalSpec {
  std::vector<ToneSpec> tones;  // summed
  std::optional<NoiseSpec> noise;

  static SignalSpec silence() { return {}; }
  static SignalSpec tone(double hz, double amplitude = 1.0, Waveform w = Waveform::sine) {
    return {{ToneSpec{hz, amplitude, w, 0.0}}, std::nullopt};
  }
  static SignalSpec white_noise(double amplitude = 0.3) { return {{}, NoiseSpec{amplitude}}; }
};

// Deterministic for a fixed seed. Throws std::invalid_argument for any tone
// at or above Nyquist.
AudioStream synth_signal(const SignalSpec& spec, double duration_s, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Daily sound-mix traces

enum class SoundClass { silence, speech, music, traffic, water, other };

std::string_view to_string(SoundClass c);
SoundClass sound_class_from_string(std::string_view s);
bool is_ambient(SoundClass c);

struct TraceSegment {
  double start_s = 0.0;
  double duration_s = 0.0;
  SoundClass sound = SoundClass::silence;
  std::string label;  // optional ground truth (speaker id, emotion, ...)
};

struct SoundTrace {
  std::vector<TraceSegment> segments;

  double total_duration_s() const;
  double seconds_of(SoundClass c) const;
  // Durations positive, segments contiguous from 0.
  void validate(std::optional<double> expected_total_s = std::nullopt) const;
};

// One day: a contiguous night of silence, then the remaining hours as
// alternating speech / ambient episodes (ambient class rotates).
struct DayTraceSpec {
  double speech_h = 4.5;
  double silence_h = 8.0;
  double day_h = 24.0;
  int episodes = 32;
};

SoundTrace make_day_trace(const DayTraceSpec& spec);

// CSV with header `start_s,duration_s,class,label`.
std::string trace_to_csv(const SoundTrace& trace);
SoundTrace trace_from_csv(std::string_view text);
SoundTrace read_trace(const std::filesystem::path& path);
void write_trace(const std::filesystem::path& path, const SoundTrace& trace);

}  // namespace dspear::audio
