#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "dspear/decision_tree.hpp"
#include "dspear/features.hpp"
#include "dspear/gmm.hpp"
#include "dspear/model_io.hpp"
#include "dspear/synth.hpp"

namespace dspear::corpus {

// Audio clips for one class (8 kHz samples).
struct ClassClips {
  std::string name;
  std::vector<std::vector<double>> clips;
};

// Reads `dir/<class>/*.wav`, classes and files in lexicographic order.
std::vector<ClassClips> read_corpus_dir(const std::filesystem::path& dir);

// Per-window features of the 1.28 s ambient geometry.
struct AmbientWindowFeatures {
  std::vector<double> filter_vector;  // speech filter input
  std::vector<double> fingerprint;    // ambient similarity vector
  Matrix observations;                // 40 x 27
};

std::vector<AmbientWindowFeatures> ambient_windows(std::span<const double> samples,
                                                   const features::FeatureConfig& cfg = {});
// PLP rows of every complete 5 s window of the clip.
Matrix plp_rows(std::span<const double> samples, const features::FeatureConfig& cfg = {});
// One 498 x 32 matrix per complete 5 s window.
std::vector<Matrix> plp_windows(std::span<const double> samples, const features::FeatureConfig& cfg = {});

struct TrainOptions {
  std::uint64_t seed = 42;
  std::size_t ambient_components = 66;
  std::size_t speaker_components = 128;
  std::size_t emotion_components = 128;
  double map_relevance = 16.0;
  models::EmOptions em{40, 1e-4, 1e-4};
  models::TreeOptions tree;
  features::FeatureConfig features;
};

struct TrainedEntry {
  std::string name;  // bundle entry name
  models::AnyModel model;
  models::Placement placement = models::Placement::cpu;
  double loglik_per_frame = 0.0;  // training data, GMMs only
  double train_accuracy = 0.0;    // trees only
  std::size_t observations = 0;
};

// Classes "speech" and "ambient" are required (DataError naming the missing one).
std::vector<TrainedEntry> train_speech_filter(const std::vector<ClassClips>& classes, const TrainOptions& opt = {});
// EM per class plus a pooled background model.
std::vector<TrainedEntry> train_ambient(const std::vector<ClassClips>& classes, const TrainOptions& opt = {});
// Background EM on all speakers, MAP per speaker, gender tag from training pitch.
std::vector<TrainedEntry> train_speakers(const std::vector<ClassClips>& classes, const TrainOptions& opt = {});
// Background EM, MAP per narrow emotion and the neutral/filler gate pair.
std::vector<TrainedEntry> train_emotions(const std::vector<ClassClips>& classes, const TrainOptions& opt = {});

void add_to_bundle(models::ModelBundle& bundle, const std::vector<TrainedEntry>& entries);

// ---------------------------------------------------------------------------
// Synthetic corpora

struct SyntheticSpec {
  std::uint64_t seed = 42;
  std::size_t speakers = 6;
  double speaker_seconds = 30.0;
  double ambient_seconds = 40.0;
  double filter_speech_seconds = 20.0;  // per voice
  double filter_ambient_seconds = 30.0; // per class
  std::size_t emotion_voices = 4;
  double emotion_seconds = 10.0;        // per voice and emotion
};

std::vector<synth::VoiceSpec> synthetic_voices(const SyntheticSpec& spec);
std::vector<ClassClips> synthetic_speech_filter_corpus(const SyntheticSpec& spec);
std::vector<ClassClips> synthetic_ambient_corpus(const SyntheticSpec& spec);
std::vector<ClassClips> synthetic_speaker_corpus(const SyntheticSpec& spec);
std::vector<ClassClips> synthetic_emotion_corpus(const SyntheticSpec& spec);

// Every model the orchestrator needs. `log` receives the training entries.
models::ModelBundle train_synthetic_bundle(const SyntheticSpec& spec, const TrainOptions& opt = {},
                                           std::vector<TrainedEntry>* log = nullptr);

// Two clusters in PLP space: neutral and non-neutral windows drawn from
// mixtures whose means differ by `separation` along a fixed direction.
struct ValenceWindow {
  Matrix frames;
  bool neutral = true;
};
std::vector<ValenceWindow> valence_clusters(std::size_t windows_per_class, std::size_t frames_per_window,
                                            double separation, std::uint64_t seed);

}  // namespace dspear::corpus
