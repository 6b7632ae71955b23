#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "dspear/admission.hpp"
#include "dspear/audio_io.hpp"
#include "dspear/energysim.hpp"
#include "dspear/features.hpp"
#include "dspear/kv_config.hpp"
#include "dspear/model_io.hpp"
#include "dspear/pipelines.hpp"

namespace dspear::pipelines {

struct EnabledPipelines {
  bool ambient = true;
  bool speaker_count = true;
  bool emotion = true;
  bool speaker_id = true;
};

struct OrchestratorConfig {
  EnabledPipelines enabled;
  gate::SilenceFilterConfig silence;
  features::FeatureConfig features;
  CrowdConfig crowd;

  // Similarity thresholds in degrees; a negative value disables the detector.
  // Defaults save about 50%, 40% and 20% of classifications on the synthetic
  // reference streams.
  double ambient_similarity_deg = 3.25;
  double speaker_similarity_deg = 8.0;
  double emotion_similarity_deg = 5.0;

  bool neutral_gate = true;
  bool gender_filter = true;
  bool speaker_prior = true;
  double unknown_margin = 0.0;
  double conversation_timeout_s = 60.0;

  // Run PLP, emotion and speaker identification on a second worker fed
  // through a queue of depth two.
  bool two_threads = false;

  // Naive pipeline: no similarity detectors, neutral gate, gender filter or prior.
  static OrchestratorConfig naive();
  void validate() const;

  // Keys: pipelines.*, silence.*, similarity.*, optimizations.*, speaker.unknown_margin,
  // conversation.timeout_s, threads.
  void apply(const KvConfig& cfg);
  static std::vector<std::string> known_keys();
};

struct GateStatsRow {
  std::string detector;
  std::size_t propagated = 0;
  std::size_t classified = 0;
  double saved_fraction() const {
    const auto n = propagated + classified;
    return n ? static_cast<double>(propagated) / static_cast<double>(n) : 0.0;
  }
  bool operator==(const GateStatsRow&) const = default;
};

struct RunResult {
  std::vector<InferenceEvent> events;
  std::vector<GateStatsRow> gate_stats;
  sim::InvocationCounts invocations;
  double duration_s = 0.0;
};

// Throws ConfigError naming the stage when the bundle lacks models for an
// enabled pipeline.
void check_bundle(const models::ModelBundle& bundle, const OrchestratorConfig& config);

RunResult orchestrate(const audio::AudioStream& stream, const models::ModelBundle& bundle,
                      const OrchestratorConfig& config = {});

std::string gate_stats_csv(const std::vector<GateStatsRow>& rows);
std::vector<GateStatsRow> gate_stats_from_csv(std::string_view text);

}  // namespace dspear::pipelines
