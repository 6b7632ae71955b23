#include "dspear/pipelines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "dspear/errors.hpp"
#include "dspear/features.hpp"

namespace dspear::pipelines {

std::string_view to_string(Gender g) {
  switch (g) {
    case Gender::male: return "male";
    case Gender::female: return "female";
    case Gender::uncertain: return "uncertain";
  }
  return "?";
}

Gender gender_from_string(std::string_view s) {
  if (s == "male") return Gender::male;
  if (s == "female") return Gender::female;
  if (s == "uncertain" || s.empty()) return Gender::uncertain;
  throw DataError("unknown gender '" + std::string(s) + "'");
}

Gender gender_estimate(std::optional<double> pitch_hz, const GenderConfig& cfg) {
  if (!pitch_hz) return Gender::uncertain;
  if (*pitch_hz < cfg.male_below_hz) return Gender::male;
  if (*pitch_hz > cfg.female_above_hz) return Gender::female;
  return Gender::uncertain;
}

bool genders_compatible(Gender a, Gender b) {
  return a == b || a == Gender::uncertain || b == Gender::uncertain;
}

double mfcc_angle_deg(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size() || a.size() < 2) throw std::invalid_argument("MFCC means must have equal length >= 2");
  return gate::cosine_angle_deg(a.subspan(1), b.subspan(1));
}

namespace {

Cluster cluster_of(const Segment& s) {
  Cluster c;
  c.mfcc_mean = s.mfcc_mean;
  if (s.pitch_hz) {
    c.pitch_sum = *s.pitch_hz;
    c.pitch_count = 1;
  }
  c.segments = 1;
  c.gender = s.gender;
  return c;
}

bool mergeable(const Cluster& a, const Cluster& b, const CrowdConfig& cfg) {
  return genders_compatible(a.gender, b.gender) && mfcc_angle_deg(a.mfcc_mean, b.mfcc_mean) <= cfg.merge_angle_deg;
}

}  // namespace

Cluster merge_clusters(const Cluster& a, const Cluster& b, const GenderConfig& cfg) {
  Cluster m;
  const double wa = static_cast<double>(a.segments), wb = static_cast<double>(b.segments);
  m.mfcc_mean.resize(a.mfcc_mean.size());
  for (std::size_t i = 0; i < m.mfcc_mean.size(); ++i)
    m.mfcc_mean[i] = (wa * a.mfcc_mean[i] + wb * b.mfcc_mean[i]) / (wa + wb);
  m.segments = a.segments + b.segments;
  m.pitch_sum = a.pitch_sum + b.pitch_sum;
  m.pitch_count = a.pitch_count + b.pitch_count;
  m.gender = m.pitch_count ? gender_estimate(m.pitch_sum / static_cast<double>(m.pitch_count), cfg)
                           : Gender::uncertain;
  return m;
}

double pitch_spread_octaves(std::span<const double> pitches_hz) {
  if (pitches_hz.size() < 2) return 0.0;
  double mean = 0.0;
  for (double p : pitches_hz) mean += std::log2(p);
  mean /= static_cast<double>(pitches_hz.size());
  double var = 0.0;
  for (double p : pitches_hz) var += (std::log2(p) - mean) * (std::log2(p) - mean);
  return std::sqrt(var / static_cast<double>(pitches_hz.size()));
}

bool crowd_forward_pass(ConversationState& state, const Segment& segment, const CrowdConfig& cfg) {
  if (!state.open) throw std::logic_error("crowd forward pass on a closed conversation");
  if (cfg.max_pitch_spread_oct > 0.0 && segment.pitch_spread_oct > cfg.max_pitch_spread_oct) return false;
  auto seg = cluster_of(segment);
  if (!state.clusters.empty() && mergeable(state.clusters.back(), seg, cfg))
    state.clusters.back() = merge_clusters(state.clusters.back(), seg, cfg.gender);
  else
    state.clusters.push_back(std::move(seg));
  return true;
}

void SpeakerPrior::observe(const std::string& speaker_label) {
  if (speaker_label == kUnknownSpeaker) unknown_voice_seen = true;
  else known_speakers.insert(speaker_label);
}

std::size_t crowd_finalize(ConversationState& state, const std::optional<SpeakerPrior>& prior,
                           const CrowdConfig& cfg) {
  if (!state.open) throw std::logic_error("crowd_finalize on a conversation that is not open");
  auto& cl = state.clusters;
  // Merge the closest admissible pair first until none remains.
  for (;;) {
    double best = std::numeric_limits<double>::infinity();
    std::size_t bi = 0, bj = 0;
    for (std::size_t i = 0; i < cl.size(); ++i)
      for (std::size_t j = i + 1; j < cl.size(); ++j) {
        if (!genders_compatible(cl[i].gender, cl[j].gender)) continue;
        const double a = mfcc_angle_deg(cl[i].mfcc_mean, cl[j].mfcc_mean);
        if (a <= cfg.merge_angle_deg && a < best) {
          best = a;
          bi = i;
          bj = j;
        }
      }
    if (!std::isfinite(best)) break;
    cl[bi] = merge_clusters(cl[bi], cl[bj], cfg.gender);
    cl.erase(cl.begin() + static_cast<std::ptrdiff_t>(bj));
  }
  std::size_t count = cl.size();
  if (prior) count = std::max(count, prior->unique_known_speakers() + (prior->unknown_voice_seen ? 1u : 0u));
  state.open = false;
  return count;
}

// ---------------------------------------------------------------------------

const std::vector<NarrowEmotion>& emotion_table() {
  static const std::vector<NarrowEmotion> t = {
      {"disgust", "anger"},          {"dominant", "anger"},          {"hot_anger", "anger"},
      {"panic", "fear"},             {"elation", "happiness"},       {"interest", "happiness"},
      {"happiness", "happiness"},    {"boredom", "neutral"},         {"neutral_distant", "neutral"},
      {"neutral_conversation", "neutral"}, {"neutral_normal", "neutral"}, {"neutral_tete", "neutral"},
      {"passive", "neutral"},        {"sadness", "sadness"},
  };
  return t;
}

std::string_view broad_of(std::string_view narrow) {
  for (const auto& e : emotion_table())
    if (e.narrow == narrow) return e.broad;
  throw std::invalid_argument("unknown narrow emotion '" + std::string(narrow) + "'");
}

std::vector<std::string> non_neutral_emotions() {
  std::vector<std::string> out;
  for (const auto& e : emotion_table())
    if (e.broad != "neutral") out.emplace_back(e.narrow);
  return out;
}

namespace {

const models::GmmModel& require(const models::ModelBundle& b, const std::string& name, const char* stage) {
  if (!b.has(name)) throw ConfigError(std::string(stage) + ": model bundle lacks '" + name + "'");
  return b.gmm(name);
}

}  // namespace

EmotionResult emotion_recognize(const Matrix& plp, const models::ModelBundle& bundle,
                                gate::SimilarityDetector* detector, const EmotionOptions& options) {
  EmotionResult r;
  std::vector<double> fingerprint;
  if (detector) {
    fingerprint = features::plp_similarity_vector(plp);
    const auto d = detector->check(fingerprint);
    if (d.verdict == gate::Verdict::propagate) {
      const auto slash = d.label->find('/');
      r.broad = d.label->substr(0, slash);
      r.narrow = slash == std::string::npos ? std::string{} : d.label->substr(slash + 1);
      r.provenance = Provenance::propagated;
      return r;
    }
  }

  std::vector<std::string> candidates;
  bool neutral = false;
  if (options.use_neutral_gate) {
    const auto& n = require(bundle, "emotion/gate/neutral", "emotion");
    const auto& f = require(bundle, "emotion/gate/filler", "emotion");
    r.gate_evaluations = 2;
    neutral = gate::neutral_gate(plp, n, f).valence == gate::Valence::neutral;
    if (!neutral) candidates = non_neutral_emotions();
  } else {
    for (const auto& e : emotion_table()) candidates.emplace_back(e.narrow);
  }

  if (neutral) {
    r.broad = "neutral";
    r.narrow = "neutral";
  } else {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) {
      const double ll = models::gmm_loglik(require(bundle, "emotion/narrow/" + c, "emotion"), plp);
      ++r.narrow_evaluations;
      if (ll > best) {
        best = ll;
        r.narrow = c;
      }
    }
    r.broad = std::string(broad_of(r.narrow));
  }
  if (detector) detector->commit(fingerprint, r.broad + "/" + r.narrow);
  return r;
}

SpeakerResult speaker_identify(const Matrix& plp, const models::ModelBundle& bundle,
                               gate::SimilarityDetector* detector, Gender gender, const SpeakerOptions& options) {
  SpeakerResult r;
  std::vector<double> fingerprint;
  if (detector) {
    fingerprint = features::plp_similarity_vector(plp);
    const auto d = detector->check(fingerprint);
    if (d.verdict == gate::Verdict::propagate) {
      r.speaker = *d.label;
      r.provenance = Provenance::propagated;
      return r;
    }
  }
  const auto& background = require(bundle, "speaker/background", "speaker");
  const auto names = bundle.names_with_prefix("speaker/id/");
  if (names.empty()) throw ConfigError("speaker: model bundle has no speaker models");

  double best = -std::numeric_limits<double>::infinity();
  std::string best_id;
  for (const auto& name : names) {
    const auto& m = bundle.gmm(name);
    if (options.gender_filter && gender != Gender::uncertain) {
      const Gender tag = gender_from_string(m.gender);
      if (tag != Gender::uncertain && tag != gender) continue;
    }
    const double ll = models::gmm_loglik(m, plp);
    ++r.evaluations;
    r.evaluated.push_back(m.label);
    if (ll > best) {
      best = ll;
      best_id = m.label;
    }
  }
  if (best_id.empty()) {
    r.speaker = std::string(kUnknownSpeaker);
  } else {
    const double bg = models::gmm_loglik(background, plp);
    ++r.evaluations;
    r.speaker = best - bg >= options.unknown_margin ? best_id : std::string(kUnknownSpeaker);
  }
  if (detector) detector->commit(fingerprint, r.speaker);
  return r;
}

AmbientResult ambient_classify(std::span<const double> similarity_vector, const Matrix& observations,
                               const models::ModelBundle& bundle, gate::SimilarityDetector* detector) {
  AmbientResult r;
  if (detector) {
    const auto d = detector->check(similarity_vector);
    if (d.verdict == gate::Verdict::propagate) {
      r.label = *d.label;
      r.provenance = Provenance::propagated;
      return r;
    }
  }
  double best = -std::numeric_limits<double>::infinity();
  for (auto cls : kAmbientClasses) {
    const double ll = models::gmm_loglik(require(bundle, "ambient/" + std::string(cls), "ambient"), observations);
    ++r.evaluations;
    if (ll > best) {
      best = ll;
      r.label = std::string(cls);
    }
  }
  if (detector) detector->commit(similarity_vector, r.label);
  return r;
}

}  // namespace dspear::pipelines
