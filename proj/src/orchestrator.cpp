#include "dspear/orchestrator.hpp"

#include <algorithm>
#include <condition_variable>
#include <deque>
#include <exception>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

#include "dspear/errors.hpp"

namespace dspear::pipelines {

namespace {

using audio::WindowKind;

constexpr double kRate = audio::kSampleRate;

// Admitted speech samples with the stream position of each contiguous run.
class TimedBuffer {
 public:
  void append(std::span<const double> x, std::size_t stream_pos) {
    if (x.empty()) return;
    if (runs_.empty() || runs_.back().stream + (samples_.size() - runs_.back().buf) != stream_pos)
      runs_.push_back({samples_.size(), stream_pos});
    samples_.insert(samples_.end(), x.begin(), x.end());
  }
  std::size_t size() const { return samples_.size(); }
  std::span<const double> head(std::size_t n) const { return {samples_.data(), n}; }
  double start_time(std::size_t pos) const { return static_cast<double>(stream_index(pos)) / kRate; }
  double end_time(std::size_t pos_last) const { return static_cast<double>(stream_index(pos_last) + 1) / kRate; }
  void consume(std::size_t n) {
    samples_.erase(samples_.begin(), samples_.begin() + static_cast<std::ptrdiff_t>(n));
    std::vector<Run> kept;
    for (std::size_t i = 0; i < runs_.size(); ++i) {
      const std::size_t run_end = i + 1 < runs_.size() ? runs_[i + 1].buf : n + samples_.size();
      if (run_end <= n) continue;
      Run r = runs_[i];
      if (r.buf < n) {
        r.stream += n - r.buf;
        r.buf = n;
      }
      r.buf -= n;
      kept.push_back(r);
    }
    runs_ = std::move(kept);
  }
  void clear() {
    samples_.clear();
    runs_.clear();
  }

 private:
  struct Run {
    std::size_t buf;
    std::size_t stream;
  };
  std::size_t stream_index(std::size_t pos) const {
    auto it = std::upper_bound(runs_.begin(), runs_.end(), pos, [](std::size_t p, const Run& r) { return p < r.buf; });
    --it;
    return it->stream + (pos - it->buf);
  }
  std::vector<double> samples_;
  std::vector<Run> runs_;
};

struct SpeechJob {
  std::vector<double> samples;
  double t_start = 0.0;
  double t_end = 0.0;
  Gender gender = Gender::uncertain;
};

// PLP, emotion and speaker identification for 5 s windows.
class SpeechWorker {
 public:
  SpeechWorker(const models::ModelBundle& bundle, const OrchestratorConfig& cfg) : bundle_(bundle), cfg_(cfg) {
    if (cfg.emotion_similarity_deg >= 0.0) emotion_det_.emplace("emotion", cfg.emotion_similarity_deg);
    if (cfg.speaker_similarity_deg >= 0.0) speaker_det_.emplace("speaker", cfg.speaker_similarity_deg);
  }

  void process(const SpeechJob& job) {
    const auto window = audio::make_window(WindowKind::speech, job.samples, 0);
    const Matrix feats = features::plp(window, cfg_.features);
    invocations.add("plp");
    if (cfg_.enabled.emotion) {
      const auto r = emotion_recognize(feats, bundle_, emotion_det_ ? &*emotion_det_ : nullptr,
                                       EmotionOptions{cfg_.neutral_gate});
      invocations.add("neutral_gmm", r.gate_evaluations);
      invocations.add("emotion_gmm", r.narrow_evaluations);
      events.push_back({job.t_start, job.t_end, EventKind::emotion, r.broad, r.narrow, 0, r.provenance});
    }
    if (cfg_.enabled.speaker_id) {
      const auto r = speaker_identify(feats, bundle_, speaker_det_ ? &*speaker_det_ : nullptr, job.gender,
                                      SpeakerOptions{cfg_.gender_filter, cfg_.unknown_margin});
      invocations.add("speaker_gmm", r.evaluations);
      events.push_back({job.t_start, job.t_end, EventKind::speaker, r.speaker, {}, 0, r.provenance});
      std::lock_guard lock(prior_mutex_);
      prior_.observe(r.speaker);
    }
  }

  SpeakerPrior take_prior() {
    std::lock_guard lock(prior_mutex_);
    return std::exchange(prior_, SpeakerPrior{});
  }

  void append_stats(std::vector<GateStatsRow>& rows) const {
    for (const auto* d : {emotion_det_ ? &*emotion_det_ : nullptr, speaker_det_ ? &*speaker_det_ : nullptr})
      if (d) rows.push_back({d->name(), d->stats().propagated, d->stats().classified});
  }

  std::vector<InferenceEvent> events;
  sim::InvocationCounts invocations;

 private:
  const models::ModelBundle& bundle_;
  const OrchestratorConfig& cfg_;
  std::optional<gate::SimilarityDetector> emotion_det_, speaker_det_;
  std::mutex prior_mutex_;
  SpeakerPrior prior_;
};

// Bounded hand-off to the speech worker thread.
class JobQueue {
 public:
  explicit JobQueue(std::size_t capacity) : capacity_(capacity) {}

  void push(SpeechJob job) {
    std::unique_lock lock(m_);
    cv_space_.wait(lock, [&] { return q_.size() < capacity_ || error_; });
    rethrow_locked();
    q_.push_back(std::move(job));
    cv_items_.notify_one();
  }

  std::optional<SpeechJob> pop() {
    std::unique_lock lock(m_);
    cv_items_.wait(lock, [&] { return !q_.empty() || closed_; });
    if (q_.empty()) return std::nullopt;
    auto job = std::move(q_.front());
    q_.pop_front();
    ++busy_;
    cv_space_.notify_one();
    return job;
  }

  void done(std::exception_ptr err = nullptr) {
    std::lock_guard lock(m_);
    --busy_;
    if (err && !error_) error_ = err;
    cv_idle_.notify_all();
    cv_space_.notify_all();
  }

  void wait_idle() {
    std::unique_lock lock(m_);
    cv_idle_.wait(lock, [&] { return (q_.empty() && busy_ == 0) || error_; });
    rethrow_locked();
  }

  void close() {
    std::lock_guard lock(m_);
    closed_ = true;
    cv_items_.notify_all();
  }

  void rethrow() {
    std::lock_guard lock(m_);
    rethrow_locked();
  }

 private:
  void rethrow_locked() {
    if (error_) std::rethrow_exception(error_);
  }
  std::size_t capacity_;
  std::mutex m_;
  std::condition_variable cv_space_, cv_items_, cv_idle_;
  std::deque<SpeechJob> q_;
  std::size_t busy_ = 0;
  bool closed_ = false;
  std::exception_ptr error_;
};

enum class BlockVerdict { none, silence, ambient, speech };

class Orchestrator {
 public:
  Orchestrator(const audio::AudioStream& stream, const models::ModelBundle& bundle, const OrchestratorConfig& cfg)
      : stream_(stream), bundle_(bundle), cfg_(cfg), gate_(cfg.silence), worker_(bundle, cfg) {
    if (cfg.enabled.ambient && cfg.ambient_similarity_deg >= 0.0)
      ambient_det_.emplace("ambient", cfg.ambient_similarity_deg);
  }

  RunResult run() {
    std::thread thread;
    if (cfg_.two_threads) {
      queue_.emplace(2);
      thread = std::thread([this] {
        while (auto job = queue_->pop()) {
          std::exception_ptr err;
          try {
            worker_.process(*job);
          } catch (...) {
            err = std::current_exception();
          }
          queue_->done(err);
        }
      });
    }
    try {
      walk();
    } catch (...) {
      if (queue_) queue_->close();
      if (thread.joinable()) thread.join();
      throw;
    }
    if (queue_) {
      queue_->close();
      thread.join();
      queue_->rethrow();
    }

    RunResult r;
    r.duration_s = stream_.duration_s();
    r.events = std::move(events_);
    r.events.insert(r.events.end(), worker_.events.begin(), worker_.events.end());
    std::sort(r.events.begin(), r.events.end());
    r.invocations = invocations_;
    r.invocations.merge(worker_.invocations);
    if (ambient_det_)
      r.gate_stats.push_back({"ambient", ambient_det_->stats().propagated, ambient_det_->stats().classified});
    worker_.append_stats(r.gate_stats);
    return r;
  }

 private:
  void walk() {
    const auto& x = stream_.samples;
    const std::size_t block = audio::geometry(WindowKind::ambient).window_len;
    const std::size_t frame = audio::geometry(WindowKind::ambient).frame_len;
    for (std::size_t start = 0; start < x.size(); start += block) {
      const std::size_t len = std::min(block, x.size() - start);
      const double t0 = static_cast<double>(start) / kRate;
      const double t1 = static_cast<double>(start + len) / kRate;
      if (conv_.open && t0 - conv_.last_voice_t >= cfg_.conversation_timeout_s) close_conversation();

      const std::span<const double> span(x.data() + start, len);
      bool admitted = false;
      for (std::size_t f = 0; f + frame <= len; f += frame) {
        const auto fr = span.subspan(f, frame);
        if (gate_.step(features::rms(fr), features::spectral_entropy(fr)).verdict == gate::Verdict::admit)
          admitted = true;
      }
      invocations_.add("silence_filter");

      BlockVerdict v = BlockVerdict::silence;
      std::optional<audio::Window> window;
      std::vector<features::FrameFeatures> frames;
      features::WindowSummary summary;
      if (admitted && len == block) {
        window = audio::make_window(WindowKind::ambient, span, start);
        frames = features::frame_features(*window, cfg_.features);
        summary = features::summarize(frames, cfg_.features);
        invocations_.add("speech_filter");
        v = gate::speech_gate(features::speech_filter_vector(summary), bundle_.tree("speech_filter")) ==
                    gate::Branch::speech
                ? BlockVerdict::speech
                : BlockVerdict::ambient;
      } else if (admitted && (prev_ == BlockVerdict::speech || prev_ == BlockVerdict::ambient)) {
        v = prev_;  // trailing partial block keeps the previous branch
      }

      if (v != BlockVerdict::silence) flush_silence();
      switch (v) {
        case BlockVerdict::silence:
          if (!silence_open_) silence_start_ = t0;
          silence_open_ = true;
          silence_end_ = t1;
          break;
        case BlockVerdict::ambient:
          handle_ambient(window ? &*window : nullptr, frames, summary, t0, t1);
          break;
        case BlockVerdict::speech:
          handle_speech(span, start, t0, t1);
          break;
        case BlockVerdict::none:
          break;
      }
      prev_ = v;
    }
    flush_silence();
    if (conv_.open) close_conversation();
  }

  void flush_silence() {
    if (!silence_open_) return;
    events_.push_back({silence_start_, silence_end_, EventKind::silence, "silence", {}, 0, Provenance::classified});
    silence_open_ = false;
  }

  void handle_ambient(const audio::Window* window, const std::vector<features::FrameFeatures>& frames,
                      const features::WindowSummary& summary, double t0, double t1) {
    if (!cfg_.enabled.ambient) {
      events_.push_back({t0, t1, EventKind::ambient, {}, {}, 0, Provenance::gated_out});
      return;
    }
    if (!window) {
      const bool have = !last_ambient_.empty();
      events_.push_back({t0, t1, EventKind::ambient, last_ambient_, {}, 0,
                         have ? Provenance::propagated : Provenance::gated_out});
      return;
    }
    const Matrix mf = features::mfcc_frames(*window);
    const auto fingerprint = features::ambient_similarity_vector(summary, mf);
    const auto obs = features::ambient_observations(frames, mf);
    invocations_.add("ambient_features");
    const auto r = ambient_classify(fingerprint, obs, bundle_, ambient_det_ ? &*ambient_det_ : nullptr);
    invocations_.add("ambient_gmm", r.evaluations);
    last_ambient_ = r.label;
    events_.push_back({t0, t1, EventKind::ambient, r.label, {}, 0, r.provenance});
  }

  void handle_speech(std::span<const double> span, std::size_t start, double t0, double t1) {
    if (!conv_.open) {
      conv_ = ConversationState{};
      conv_.open = true;
      conv_.start_t = t0;
    }
    conv_.last_voice_t = t1;
    count_buf_.append(span, start);
    speech_buf_.append(span, start);

    const std::size_t count_len = audio::geometry(WindowKind::speaker_count).window_len;
    while (count_buf_.size() >= count_len) {
      process_count_window(count_buf_.head(count_len), count_buf_.start_time(0), count_buf_.end_time(count_len - 1));
      count_buf_.consume(count_len);
    }
    const std::size_t speech_len = audio::geometry(WindowKind::speech).window_len;
    while (speech_buf_.size() >= speech_len) {
      SpeechJob job;
      const auto h = speech_buf_.head(speech_len);
      job.samples.assign(h.begin(), h.end());
      job.t_start = speech_buf_.start_time(0);
      job.t_end = speech_buf_.end_time(speech_len - 1);
      job.gender = last_gender_;
      speech_buf_.consume(speech_len);
      if (!(cfg_.enabled.emotion || cfg_.enabled.speaker_id)) continue;
      if (queue_) queue_->push(std::move(job));
      else worker_.process(job);
    }
  }

  void process_count_window(std::span<const double> samples, double t0, double t1) {
    const auto w = audio::make_window(WindowKind::speaker_count, samples, 0);
    std::vector<double> voiced_mean(features::kMfccDim, 0.0), all_mean(features::kMfccDim, 0.0);
    double pitch_sum = 0.0;
    std::size_t voiced = 0;
    std::vector<double> pitches;
    for (const auto& fr : w.frames) {
      const auto c = features::mfcc(fr.samples);
      for (std::size_t i = 0; i < c.size(); ++i) all_mean[i] += c[i];
      if (const auto p = features::yin_pitch(fr.samples, cfg_.features.yin)) {
        pitch_sum += *p;
        pitches.push_back(*p);
        ++voiced;
        for (std::size_t i = 0; i < c.size(); ++i) voiced_mean[i] += c[i];
      }
    }
    std::optional<double> pitch;
    if (voiced > 0 &&
        static_cast<double>(voiced) >= cfg_.features.voiced_fraction * static_cast<double>(w.frames.size()))
      pitch = pitch_sum / static_cast<double>(voiced);
    const Gender g = gender_estimate(pitch, cfg_.crowd.gender);
    last_gender_ = g;
    invocations_.add("speaker_count");
    events_.push_back({t0, t1, EventKind::gender, std::string(to_string(g)), {}, 0, Provenance::classified});

    if (!cfg_.enabled.speaker_count) return;
    Segment seg;
    const auto& src = voiced ? voiced_mean : all_mean;
    const double n = static_cast<double>(voiced ? voiced : w.frames.size());
    seg.mfcc_mean.resize(src.size());
    for (std::size_t i = 0; i < src.size(); ++i) seg.mfcc_mean[i] = src[i] / n;
    seg.pitch_hz = pitch;
    seg.gender = g;
    seg.pitch_spread_oct = pitch_spread_octaves(pitches);
    crowd_forward_pass(conv_, seg, cfg_.crowd);
  }

  void close_conversation() {
    if (count_buf_.size() > 0) {
      events_.push_back({count_buf_.start_time(0), count_buf_.end_time(count_buf_.size() - 1), EventKind::gender,
                         std::string(to_string(Gender::uncertain)), {}, 0, Provenance::gated_out});
    }
    count_buf_.clear();
    speech_buf_.clear();
    if (queue_) queue_->wait_idle();
    SpeakerPrior prior = worker_.take_prior();
    if (cfg_.enabled.speaker_count) {
      std::optional<SpeakerPrior> p;
      if (cfg_.speaker_prior && cfg_.enabled.speaker_id) p = std::move(prior);
      const auto n = crowd_finalize(conv_, p, cfg_.crowd);
      invocations_.add("crowd_finalize");
      events_.push_back({conv_.start_t, conv_.last_voice_t, EventKind::speaker_count, std::to_string(n), {},
                         static_cast<int>(n), Provenance::classified});
    }
    conv_.open = false;
    last_gender_ = Gender::uncertain;
  }

  const audio::AudioStream& stream_;
  const models::ModelBundle& bundle_;
  const OrchestratorConfig& cfg_;
  gate::SilenceGate gate_;
  std::optional<gate::SimilarityDetector> ambient_det_;
  SpeechWorker worker_;
  std::optional<JobQueue> queue_;

  std::vector<InferenceEvent> events_;
  sim::InvocationCounts invocations_;
  BlockVerdict prev_ = BlockVerdict::none;
  bool silence_open_ = false;
  double silence_start_ = 0.0, silence_end_ = 0.0;
  std::string last_ambient_;
  ConversationState conv_;
  TimedBuffer count_buf_, speech_buf_;
  Gender last_gender_ = Gender::uncertain;
};

}  // namespace

OrchestratorConfig OrchestratorConfig::naive() {
  OrchestratorConfig c;
  c.ambient_similarity_deg = -1.0;
  c.speaker_similarity_deg = -1.0;
  c.emotion_similarity_deg = -1.0;
  c.neutral_gate = false;
  c.gender_filter = false;
  c.speaker_prior = false;
  return c;
}

void OrchestratorConfig::validate() const {
  silence.validate();
  for (double d : {ambient_similarity_deg, speaker_similarity_deg, emotion_similarity_deg})
    if (d >= 90.0) throw ConfigError("similarity thresholds must be below 90 degrees");
  if (!(conversation_timeout_s > 0.0)) throw ConfigError("conversation timeout must be positive");
  if (!(crowd.merge_angle_deg > 0.0 && crowd.merge_angle_deg < 90.0))
    throw ConfigError("crowd merge angle must lie in (0, 90) degrees");
  if (features.plp_lp_order < 1 || features.plp_lp_order > 30) throw ConfigError("PLP LP order out of range");
}

std::vector<std::string> OrchestratorConfig::known_keys() {
  return {"pipelines.ambient",        "pipelines.speaker_count",     "pipelines.emotion",
          "pipelines.speaker_id",     "silence.rms_threshold",       "silence.entropy_threshold",
          "silence.hangover_window",  "similarity.ambient_deg",      "similarity.speaker_deg",
          "similarity.emotion_deg",   "optimizations.neutral_gate",  "optimizations.gender_filter",
          "optimizations.speaker_prior", "speaker.unknown_margin",   "conversation.timeout_s",
          "crowd.merge_angle_deg",    "crowd.max_pitch_spread_oct", "features.lefr_ratio",         "features.rolloff_fraction",
          "features.yin_threshold",   "features.plp_lp_order",       "threads"};
}

void OrchestratorConfig::apply(const KvConfig& cfg) {
  enabled.ambient = cfg.get_bool("pipelines.ambient", enabled.ambient);
  enabled.speaker_count = cfg.get_bool("pipelines.speaker_count", enabled.speaker_count);
  enabled.emotion = cfg.get_bool("pipelines.emotion", enabled.emotion);
  enabled.speaker_id = cfg.get_bool("pipelines.speaker_id", enabled.speaker_id);
  silence.rms_threshold = cfg.get_double("silence.rms_threshold", silence.rms_threshold);
  silence.entropy_threshold = cfg.get_double("silence.entropy_threshold", silence.entropy_threshold);
  silence.hangover_window = static_cast<int>(cfg.get_int("silence.hangover_window", silence.hangover_window));
  ambient_similarity_deg = cfg.get_double("similarity.ambient_deg", ambient_similarity_deg);
  speaker_similarity_deg = cfg.get_double("similarity.speaker_deg", speaker_similarity_deg);
  emotion_similarity_deg = cfg.get_double("similarity.emotion_deg", emotion_similarity_deg);
  neutral_gate = cfg.get_bool("optimizations.neutral_gate", neutral_gate);
  gender_filter = cfg.get_bool("optimizations.gender_filter", gender_filter);
  speaker_prior = cfg.get_bool("optimizations.speaker_prior", speaker_prior);
  unknown_margin = cfg.get_double("speaker.unknown_margin", unknown_margin);
  conversation_timeout_s = cfg.get_double("conversation.timeout_s", conversation_timeout_s);
  crowd.merge_angle_deg = cfg.get_double("crowd.merge_angle_deg", crowd.merge_angle_deg);
  crowd.max_pitch_spread_oct = cfg.get_double("crowd.max_pitch_spread_oct", crowd.max_pitch_spread_oct);
  features.lefr_ratio = cfg.get_double("features.lefr_ratio", features.lefr_ratio);
  features.rolloff_fraction = cfg.get_double("features.rolloff_fraction", features.rolloff_fraction);
  features.yin.threshold = cfg.get_double("features.yin_threshold", features.yin.threshold);
  features.plp_lp_order =
      static_cast<std::size_t>(cfg.get_int("features.plp_lp_order", static_cast<long>(features.plp_lp_order)));
  const long threads = cfg.get_int("threads", two_threads ? 2 : 1);
  if (threads != 1 && threads != 2) throw ConfigError("threads must be 1 or 2");
  two_threads = threads == 2;
  validate();
}

void check_bundle(const models::ModelBundle& bundle, const OrchestratorConfig& config) {
  auto need = [&](const std::string& name, const char* stage) {
    if (!bundle.has(name)) throw ConfigError(std::string(stage) + ": model bundle lacks '" + name + "'");
  };
  need("speech_filter", "speech_filter");
  (void)bundle.tree("speech_filter");
  if (config.enabled.ambient)
    for (auto c : kAmbientClasses) need("ambient/" + std::string(c), "ambient");
  if (config.enabled.emotion) {
    if (config.neutral_gate) {
      need("emotion/gate/neutral", "emotion");
      need("emotion/gate/filler", "emotion");
      for (const auto& e : non_neutral_emotions()) need("emotion/narrow/" + e, "emotion");
    } else {
      for (const auto& e : emotion_table()) need("emotion/narrow/" + std::string(e.narrow), "emotion");
    }
  }
  if (config.enabled.speaker_id) {
    need("speaker/background", "speaker");
    if (bundle.names_with_prefix("speaker/id/").empty())
      throw ConfigError("speaker: model bundle has no speaker models");
  }
}

RunResult orchestrate(const audio::AudioStream& stream, const models::ModelBundle& bundle,
                      const OrchestratorConfig& config) {
  config.validate();
  check_bundle(bundle, config);
  if (stream.sample_rate != audio::kSampleRate) throw DataError("orchestrator needs 8 kHz audio");
  Orchestrator o(stream, bundle, config);
  return o.run();
}

std::string gate_stats_csv(const std::vector<GateStatsRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "detector,propagated,classified,saved_fraction\n";
  for (const auto& r : rows)
    os << r.detector << ',' << r.propagated << ',' << r.classified << ',' << r.saved_fraction() << '\n';
  return os.str();
}

std::vector<GateStatsRow> gate_stats_from_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "detector,propagated,classified,saved_fraction")
    throw DataError("gate stats CSV header mismatch");
  std::vector<GateStatsRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string name, p, c;
    std::getline(ls, name, ',');
    std::getline(ls, p, ',');
    std::getline(ls, c, ',');
    try {
      rows.push_back({name, std::stoull(p), std::stoull(c)});
    } catch (const std::exception&) {
      throw DataError("gate stats CSV: malformed line '" + line + "'");
    }
  }
  return rows;
}

}  // namespace dspear::pipelines
