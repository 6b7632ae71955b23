#pragma once

#include <random>
#include <vector>

#include "dspear/corpus.hpp"
#include "dspear/matrix.hpp"

namespace testing {

// Small synthetic bundle, trained once per test binary.
inline const dspear::models::ModelBundle& small_bundle() {
  static const dspear::models::ModelBundle bundle = [] {
    dspear::corpus::SyntheticSpec spec;
    spec.speakers = 4;
    spec.speaker_seconds = 20;
    spec.emotion_voices = 2;
    spec.emotion_seconds = 6;
    dspear::corpus::TrainOptions opt;
    opt.ambient_components = 16;
    opt.speaker_components = 32;
    opt.emotion_components = 16;
    return dspear::corpus::train_synthetic_bundle(spec, opt);
  }();
  return bundle;
}

inline std::vector<dspear::synth::VoiceSpec> small_voices() {
  dspear::corpus::SyntheticSpec spec;
  spec.speakers = 4;
  return dspear::corpus::synthetic_voices(spec);
}

inline dspear::Matrix random_matrix(std::size_t rows, std::size_t cols, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> g(0.0, scale);
  dspear::Matrix m(rows, cols);
  for (auto& v : m.data()) v = g(rng);
  return m;
}

}  // namespace testing
