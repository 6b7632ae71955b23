#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dspear/audio_io.hpp"

namespace dspear::synth {

// Source-filter voice: glottal pulse train through three formant resonators
// scaled by the vocal-tract factor, plus a fixed speaker resonance.
struct VoiceSpec {
  std::string id;
  std::string gender;  // "male" or "female"
  double f0_hz = 120.0;
  double tract_scale = 1.0;
  double tilt = 0.9;                        // glottal lowpass pole
  std::array<double, 3> formant_bias{1.0, 1.0, 1.0};
  double resonance_hz = 2500.0;
  double resonance_gain = 0.35;
  double bandwidth_scale = 1.0;
  double breathiness = 0.02;
};

struct EmotionStyle {
  double pitch_scale = 1.0;
  double pitch_range_st = 2.0;  // per-syllable excursion, semitones
  double rate = 1.0;            // syllable duration multiplier
  double energy = 1.0;
  double tilt_delta = 0.0;
  double formant_shift = 1.0;
  double breathiness = 0.0;
};

// Prosody and voice-quality variant for one of the fourteen narrow emotions.
// Throws std::invalid_argument for unknown names.
EmotionStyle emotion_style(std::string_view narrow);

// `n` voices with alternating genders, spread over the voice space.
std::vector<VoiceSpec> make_speakers(std::size_t n, std::uint64_t seed, std::string_view prefix = "spk");

std::vector<double> render_speech(const VoiceSpec& voice, double seconds, std::uint64_t seed,
                                  const EmotionStyle& style = {});

// music, traffic, water or other.
std::vector<double> render_ambient(audio::SoundClass cls, double seconds, std::uint64_t seed);

// Low-level sensor noise, well under the silence threshold.
std::vector<double> render_silence(double seconds, std::uint64_t seed);

// Speech segment labels are "<speaker id>" or "<speaker id>/<narrow emotion>";
// an empty label picks voices in rotation.
audio::AudioStream render_trace(const audio::SoundTrace& trace, const std::vector<VoiceSpec>& voices,
                                std::uint64_t seed);

// Turn-taking conversation among `speakers` voices (each speaks at least once).
audio::SoundTrace make_conversation_trace(const std::vector<VoiceSpec>& speakers, double seconds,
                                          std::uint64_t seed, double min_turn_s = 4.0, double max_turn_s = 10.0);

// Random mix of silence, speech and ambient episodes; some silences exceed a minute.
audio::SoundTrace make_random_trace(const std::vector<VoiceSpec>& voices, double seconds, std::uint64_t seed);

}  // namespace dspear::synth
