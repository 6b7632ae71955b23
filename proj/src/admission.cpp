#include "dspear/admission.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "dspear/errors.hpp"

namespace dspear::gate {

void SilenceFilterConfig::validate() const {
  if (!(rms_threshold > 0.0) || !(entropy_threshold > 0.0))
    throw ConfigError("silence filter thresholds must be positive");
  if (hangover_window < 1) throw ConfigError("silence filter hangover must be at least one frame");
}

SilenceGate::SilenceGate(SilenceFilterConfig cfg) : cfg_(cfg) { cfg_.validate(); }

bool SilenceGate::is_event(const SilenceFilterConfig& cfg, double rms, double spectral_entropy) {
  return rms > cfg.rms_threshold && spectral_entropy < cfg.entropy_threshold;
}

GateDecision SilenceGate::step(double rms, double spectral_entropy) {
  if (is_event(cfg_, rms, spectral_entropy)) {
    active_ = true;
    silent_run_ = 0;
    return {Verdict::admit, std::nullopt};
  }
  if (!active_) return {Verdict::reject, std::nullopt};
  if (++silent_run_ >= cfg_.hangover_window) {
    active_ = false;
    silent_run_ = 0;
  }
  return {Verdict::admit, std::nullopt};
}

void SilenceGate::reset() {
  active_ = false;
  silent_run_ = 0;
}

std::string_view to_string(Branch b) { return b == Branch::speech ? "speech" : "ambient"; }

Branch speech_gate(std::span<const double> v, const models::DecisionTree& tree) {
  const auto verdict = models::tree_classify(tree, v);
  return verdict.label == "speech" ? Branch::speech : Branch::ambient;
}

NeutralVerdict neutral_gate(const Matrix& plp, const models::GmmModel& neutral, const models::GmmModel& filler) {
  if (neutral.dim() != filler.dim())
    throw std::invalid_argument("neutral and filler models have different dimensions");
  NeutralVerdict v;
  v.neutral_loglik = models::gmm_loglik(neutral, plp);
  v.filler_loglik = models::gmm_loglik(filler, plp);
  v.valence = v.neutral_loglik >= v.filler_loglik ? Valence::neutral : Valence::non_neutral;
  return v;
}

double cosine_angle_deg(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("cosine angle of vectors with different lengths");
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (!(na > 0.0) || !(nb > 0.0)) return 90.0;
  const double c = std::clamp(dot / std::sqrt(na * nb), -1.0, 1.0);
  return std::acos(c) * 180.0 / std::numbers::pi;
}

SimilarityDetector::SimilarityDetector(std::string name, double threshold_deg)
    : name_(std::move(name)), threshold_deg_(threshold_deg) {
  if (!(threshold_deg >= 0.0 && threshold_deg < 90.0))
    throw ConfigError("similarity threshold must be in [0, 90) degrees");
}

GateDecision SimilarityDetector::check(std::span<const double> summary) {
  bool nonzero = false;
  for (double v : summary) {
    if (!std::isfinite(v)) throw std::invalid_argument("similarity summary is not finite");
    if (v != 0.0) nonzero = true;
  }
  bool propagate = false;
  if (last_summary_ && last_label_ && nonzero && last_summary_->size() == summary.size()) {
    if (std::equal(summary.begin(), summary.end(), last_summary_->begin()))
      propagate = true;
    else if (threshold_deg_ > 0.0)
      propagate = cosine_angle_deg(summary, *last_summary_) <= threshold_deg_;
  }
  if (propagate) {
    ++stats_.propagated;
    last_summary_->assign(summary.begin(), summary.end());
    return {Verdict::propagate, last_label_};
  }
  ++stats_.classified;
  return {Verdict::admit, std::nullopt};
}

void SimilarityDetector::commit(std::span<const double> summary, const std::string& label) {
  last_summary_.emplace(summary.begin(), summary.end());
  last_label_ = label;
}

void SimilarityDetector::reset() {
  last_summary_.reset();
  last_label_.reset();
  stats_ = {};
}

}  // namespace dspear::gate
