#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dspear/decision_tree.hpp"
#include "dspear/gmm.hpp"
#include "dspear/matrix.hpp"

namespace dspear::gate {

struct SilenceFilterConfig {
  double rms_threshold = 0.01;     // about -40 dBFS
  double entropy_threshold = 6.5;  // bits
  int hangover_window = 40;        // frames

  void validate() const;
};

enum class Verdict { admit, reject, propagate };

struct GateDecision {
  Verdict verdict = Verdict::admit;
  std::optional<std::string> label;  // set only for propagate
};

// Frame-level silence admission. A frame is an acoustic event when its rms is
// above the threshold and its spectral entropy below it. After an event every
// frame is admitted until `hangover_window` consecutive silent frames have
// passed (the last of them still admitted).
class SilenceGate {
 public:
  explicit SilenceGate(SilenceFilterConfig cfg = {});
  GateDecision step(double rms, double spectral_entropy);
  bool active() const { return active_; }
  void reset();
  static bool is_event(const SilenceFilterConfig& cfg, double rms, double spectral_entropy);

 private:
  SilenceFilterConfig cfg_;
  bool active_ = false;
  int silent_run_ = 0;
};

enum class Branch { speech, ambient };
std::string_view to_string(Branch b);

Branch speech_gate(std::span<const double> speech_filter_vector, const models::DecisionTree& tree);

enum class Valence { neutral, non_neutral };

struct NeutralVerdict {
  Valence valence = Valence::neutral;
  double neutral_loglik = 0.0;
  double filler_loglik = 0.0;
};

// Ties favour neutral.
NeutralVerdict neutral_gate(const Matrix& plp, const models::GmmModel& neutral, const models::GmmModel& filler);

double cosine_angle_deg(std::span<const double> a, std::span<const double> b);

struct SimilarityStats {
  std::size_t propagated = 0;
  std::size_t classified = 0;
  double saved_fraction() const {
    const auto n = propagated + classified;
    return n ? static_cast<double>(propagated) / static_cast<double>(n) : 0.0;
  }
};

// Compares each summary with the one before it. When the angle is within
// the threshold the last committed label is propagated; otherwise the caller
// classifies and then commits. Threshold 0 propagates bit-identical summaries only.
class SimilarityDetector {
 public:
  explicit SimilarityDetector(std::string name = {}, double threshold_deg = 15.0);

  GateDecision check(std::span<const double> summary);
  void commit(std::span<const double> summary, const std::string& label);

  const std::string& name() const { return name_; }
  double threshold_deg() const { return threshold_deg_; }
  const SimilarityStats& stats() const { return stats_; }
  bool has_label() const { return last_label_.has_value(); }
  void reset();

 private:
  std::string name_;
  double threshold_deg_;
  std::optional<std::vector<double>> last_summary_;
  std::optional<std::string> last_label_;
  SimilarityStats stats_;
};

}  // namespace dspear::gate
