#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dspear/admission.hpp"
#include "dspear/matrix.hpp"
#include "dspear/model_io.hpp"

namespace dspear::pipelines {

// ---------------------------------------------------------------------------
// Events

enum class EventKind { silence, ambient, gender, speaker_count, emotion, speaker };
enum class Provenance { classified, propagated, gated_out };

std::string_view to_string(EventKind k);
std::string_view to_string(Provenance p);
EventKind event_kind_from_string(std::string_view s);
Provenance provenance_from_string(std::string_view s);

struct InferenceEvent {
  double t_start = 0.0;
  double t_end = 0.0;
  EventKind kind = EventKind::silence;
  std::string label;   // ambient class, gender, broad emotion, speaker id, or count as text
  std::string detail;  // narrow emotion
  int count = 0;       // speaker_count only
  Provenance provenance = Provenance::classified;

  bool operator==(const InferenceEvent&) const = default;
  auto operator<=>(const InferenceEvent&) const = default;
};

std::string events_to_jsonl(std::span<const InferenceEvent> events);
std::vector<InferenceEvent> events_from_jsonl(std::string_view text);

// ---------------------------------------------------------------------------
// Gender and speaker counting

enum class Gender { male, female, uncertain };
std::string_view to_string(Gender g);
Gender gender_from_string(std::string_view s);

struct GenderConfig {
  double male_below_hz = 160.0;
  double female_above_hz = 190.0;
};

Gender gender_estimate(std::optional<double> pitch_hz, const GenderConfig& cfg = {});
bool genders_compatible(Gender a, Gender b);

struct CrowdConfig {
  double merge_angle_deg = 15.0;
  // Segments whose voiced-frame pitch spread (standard deviation in octaves)
  // exceeds this are left out of clustering; <= 0 keeps every segment.
  double max_pitch_spread_oct = 0.35;
  GenderConfig gender;
};

struct Segment {
  std::vector<double> mfcc_mean;  // 20 values; c0 is ignored for angles
  std::optional<double> pitch_hz;
  Gender gender = Gender::uncertain;
  double pitch_spread_oct = 0.0;
};

// Standard deviation of log2 pitch; 0 for fewer than two values.
double pitch_spread_octaves(std::span<const double> pitches_hz);

struct Cluster {
  std::vector<double> mfcc_mean;
  double pitch_sum = 0.0;
  std::size_t pitch_count = 0;
  std::size_t segments = 0;
  Gender gender = Gender::uncertain;
};

struct ConversationState {
  bool open = false;
  std::vector<Cluster> clusters;
  double start_t = 0.0;
  double last_voice_t = 0.0;
};

// Angle between MFCC means over c1..c19.
double mfcc_angle_deg(std::span<const double> a, std::span<const double> b);

// Returns false when the segment was left out for its pitch spread.
bool crowd_forward_pass(ConversationState& state, const Segment& segment, const CrowdConfig& cfg = {});

struct SpeakerPrior {
  std::set<std::string> known_speakers;
  bool unknown_voice_seen = false;

  std::size_t unique_known_speakers() const { return known_speakers.size(); }
  void observe(const std::string& speaker_label);
};

// All-pairs agglomerative merge until no pair qualifies, then the prior.
// Closes the conversation. Throws std::logic_error when it is not open.
std::size_t crowd_finalize(ConversationState& state, const std::optional<SpeakerPrior>& prior,
                           const CrowdConfig& cfg = {});

// Merges two clusters: segment-count-weighted mean, gender from merged pitch.
Cluster merge_clusters(const Cluster& a, const Cluster& b, const GenderConfig& cfg = {});

// ---------------------------------------------------------------------------
// Emotion

struct NarrowEmotion {
  std::string_view narrow;
  std::string_view broad;
};

// Fourteen narrow emotions grouped into five broad ones.
const std::vector<NarrowEmotion>& emotion_table();
std::string_view broad_of(std::string_view narrow);
std::vector<std::string> non_neutral_emotions();

struct EmotionOptions {
  bool use_neutral_gate = true;
};

struct EmotionResult {
  std::string broad;
  std::string narrow;
  Provenance provenance = Provenance::classified;
  std::size_t gate_evaluations = 0;
  std::size_t narrow_evaluations = 0;
};

// Similarity gate, then neutral gate, then argmax over the eight non-neutral
// narrow models. Without the neutral gate all fourteen narrow models are scored.
// `detector` may be null to disable the similarity gate.
EmotionResult emotion_recognize(const Matrix& plp, const models::ModelBundle& bundle,
                                gate::SimilarityDetector* detector, const EmotionOptions& options = {});

// ---------------------------------------------------------------------------
// Speaker identification

struct SpeakerOptions {
  bool gender_filter = true;
  double unknown_margin = 0.0;  // nats above the background model
};

struct SpeakerResult {
  std::string speaker;  // id or "unknown"
  Provenance provenance = Provenance::classified;
  std::size_t evaluations = 0;  // speaker models plus the background
  std::vector<std::string> evaluated;
};

inline constexpr std::string_view kUnknownSpeaker = "unknown";

SpeakerResult speaker_identify(const Matrix& plp, const models::ModelBundle& bundle,
                               gate::SimilarityDetector* detector, Gender gender,
                               const SpeakerOptions& options = {});

// ---------------------------------------------------------------------------
// Ambient

inline constexpr std::array<std::string_view, 4> kAmbientClasses = {"music", "traffic", "water", "other"};

struct AmbientResult {
  std::string label;
  Provenance provenance = Provenance::classified;
  std::size_t evaluations = 0;
};

AmbientResult ambient_classify(std::span<const double> similarity_vector, const Matrix& observations,
                               const models::ModelBundle& bundle, gate::SimilarityDetector* detector);

}  // namespace dspear::pipelines
