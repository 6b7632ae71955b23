#include "dspear/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "dspear/errors.hpp"
#include "dspear/pipelines.hpp"

namespace dspear::corpus {

namespace {

using audio::WindowKind;
using models::Placement;

Matrix stack_rows(const std::vector<Matrix>& parts) { return vstack(std::span<const Matrix>(parts)); }

const ClassClips* find_class(const std::vector<ClassClips>& classes, std::string_view name) {
  for (const auto& c : classes)
    if (c.name == name) return &c;
  return nullptr;
}

void require_nonempty(const ClassClips& c) {
  if (c.clips.empty()) throw DataError("class '" + c.name + "' has no audio");
}

Matrix class_plp(const ClassClips& c, const features::FeatureConfig& cfg) {
  std::vector<Matrix> parts;
  for (const auto& clip : c.clips) parts.push_back(plp_rows(clip, cfg));
  Matrix m = stack_rows(parts);
  if (m.rows() == 0) throw DataError("class '" + c.name + "' has no complete 5 s window");
  return m;
}

TrainedEntry gmm_entry(std::string name, models::GmmModel m, const Matrix& data, Placement p) {
  TrainedEntry e;
  e.name = std::move(name);
  e.loglik_per_frame = models::gmm_loglik(m, data) / static_cast<double>(data.rows());
  e.observations = data.rows();
  e.model = std::move(m);
  e.placement = p;
  return e;
}

// Fewer components when the data cannot support the requested count.
std::size_t fit_components(std::size_t wanted, std::size_t rows) { return std::max<std::size_t>(1, std::min(wanted, rows / 10)); }

std::uint64_t seed_of(std::uint64_t base, std::string_view name) {
  std::uint64_t h = 1469598103934665603ULL;
  for (char ch : name) h = (h ^ static_cast<unsigned char>(ch)) * 1099511628211ULL;
  return base ^ h;
}

}  // namespace

std::vector<ClassClips> read_corpus_dir(const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(dir)) throw DataError("corpus directory not found: " + dir.string());
  std::vector<fs::path> class_dirs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory()) class_dirs.push_back(e.path());
  std::sort(class_dirs.begin(), class_dirs.end());
  std::vector<ClassClips> out;
  for (const auto& cd : class_dirs) {
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(cd))
      if (e.is_regular_file() && e.path().extension() == ".wav") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    ClassClips c;
    c.name = cd.filename().string();
    for (const auto& f : files) c.clips.push_back(audio::read_wav(f, {true}).samples);
    if (c.clips.empty()) throw DataError("class '" + c.name + "' has no .wav files");
    out.push_back(std::move(c));
  }
  if (out.empty()) throw DataError("corpus directory has no class subdirectories: " + dir.string());
  return out;
}

std::vector<AmbientWindowFeatures> ambient_windows(std::span<const double> samples, const features::FeatureConfig& cfg) {
  const std::size_t len = audio::geometry(WindowKind::ambient).window_len;
  std::vector<AmbientWindowFeatures> out;
  for (std::size_t s = 0; s + len <= samples.size(); s += len) {
    const auto w = audio::make_window(WindowKind::ambient, samples.subspan(s, len), s);
    const auto frames = features::frame_features(w, cfg);
    const auto summary = features::summarize(frames, cfg);
    const Matrix mf = features::mfcc_frames(w);
    AmbientWindowFeatures f;
    f.filter_vector = features::speech_filter_vector(summary);
    f.fingerprint = features::ambient_similarity_vector(summary, mf);
    f.observations = features::ambient_observations(frames, mf);
    out.push_back(std::move(f));
  }
  return out;
}

std::vector<Matrix> plp_windows(std::span<const double> samples, const features::FeatureConfig& cfg) {
  const std::size_t len = audio::geometry(WindowKind::speech).window_len;
  std::vector<Matrix> out;
  for (std::size_t s = 0; s + len <= samples.size(); s += len)
    out.push_back(features::plp(audio::make_window(WindowKind::speech, samples.subspan(s, len), s), cfg));
  return out;
}

Matrix plp_rows(std::span<const double> samples, const features::FeatureConfig& cfg) {
  return stack_rows(plp_windows(samples, cfg));
}

std::vector<TrainedEntry> train_speech_filter(const std::vector<ClassClips>& classes, const TrainOptions& opt) {
  const std::vector<std::string> names{"speech", "ambient"};
  Matrix x;
  std::vector<int> y;
  for (int cls = 0; cls < 2; ++cls) {
    const auto* c = find_class(classes, names[cls]);
    if (!c) throw DataError("speech filter corpus lacks class '" + names[cls] + "'");
    require_nonempty(*c);
    for (const auto& clip : c->clips)
      for (const auto& w : ambient_windows(clip, opt.features)) {
        x.append_row(w.filter_vector);
        y.push_back(cls);
      }
  }
  auto tree = models::tree_train(x, y, names, features::speech_filter_feature_names(), opt.tree);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < x.rows(); ++i)
    if (models::tree_classify(tree, x.row(i)).cls == y[i]) ++correct;
  TrainedEntry e;
  e.name = "speech_filter";
  e.train_accuracy = static_cast<double>(correct) / static_cast<double>(x.rows());
  e.observations = x.rows();
  e.model = std::move(tree);
  e.placement = Placement::dsp;
  return {std::move(e)};
}

std::vector<TrainedEntry> train_ambient(const std::vector<ClassClips>& classes, const TrainOptions& opt) {
  if (classes.empty()) throw DataError("ambient corpus is empty");
  std::vector<Matrix> per_class;
  for (const auto& c : classes) {
    require_nonempty(c);
    std::vector<Matrix> parts;
    for (const auto& clip : c.clips)
      for (auto& w : ambient_windows(clip, opt.features)) parts.push_back(std::move(w.observations));
    per_class.push_back(stack_rows(parts));
    if (per_class.back().rows() == 0) throw DataError("class '" + c.name + "' has no complete 1.28 s window");
  }
  std::vector<TrainedEntry> out;
  const Matrix all = stack_rows(per_class);
  auto bg = models::gmm_train_em(all, fit_components(opt.ambient_components, all.rows()), opt.seed, opt.em).model;
  bg.label = "background";
  out.push_back(gmm_entry("ambient/background", std::move(bg), all, Placement::cpu));
  for (std::size_t i = 0; i < classes.size(); ++i) {
    const auto& data = per_class[i];
    auto m = models::gmm_train_em(data, fit_components(opt.ambient_components, data.rows()),
                                  seed_of(opt.seed, classes[i].name), opt.em)
                 .model;
    m.label = classes[i].name;
    out.push_back(gmm_entry("ambient/" + classes[i].name, std::move(m), data, Placement::dsp));
  }
  return out;
}

std::vector<TrainedEntry> train_speakers(const std::vector<ClassClips>& classes, const TrainOptions& opt) {
  if (classes.empty()) throw DataError("speaker corpus is empty");
  std::vector<Matrix> per_class;
  for (const auto& c : classes) {
    require_nonempty(c);
    per_class.push_back(class_plp(c, opt.features));
  }
  const Matrix all = stack_rows(per_class);
  auto bg = models::gmm_train_em(all, fit_components(opt.speaker_components, all.rows()), opt.seed, opt.em).model;
  bg.label = "background";
  std::vector<TrainedEntry> out;
  for (std::size_t i = 0; i < classes.size(); ++i) {
    auto m = models::gmm_map_adapt(bg, per_class[i], opt.map_relevance);
    m.label = classes[i].name;
    // Gender tag from the mean pitch of the training speech.
    const std::size_t len = audio::geometry(WindowKind::speaker_count).window_len;
    double sum = 0.0;
    std::size_t n = 0;
    for (const auto& clip : classes[i].clips)
      for (std::size_t s = 0; s + len <= clip.size(); s += len) {
        const auto w = audio::make_window(WindowKind::speaker_count, std::span(clip).subspan(s, len), s);
        if (auto p = features::mean_pitch(w, opt.features)) {
          sum += *p;
          ++n;
        }
      }
    const auto g = pipelines::gender_estimate(n ? std::optional(sum / static_cast<double>(n)) : std::nullopt);
    m.gender = std::string(pipelines::to_string(g));
    out.push_back(gmm_entry("speaker/id/" + classes[i].name, std::move(m), per_class[i], Placement::cpu));
  }
  out.insert(out.begin(), gmm_entry("speaker/background", std::move(bg), all, Placement::cpu));
  return out;
}

std::vector<TrainedEntry> train_emotions(const std::vector<ClassClips>& classes, const TrainOptions& opt) {
  if (classes.empty()) throw DataError("emotion corpus is empty");
  std::vector<Matrix> per_class, neutral_parts, filler_parts;
  for (const auto& c : classes) {
    require_nonempty(c);
    std::string_view broad;
    try {
      broad = pipelines::broad_of(c.name);
    } catch (const std::exception&) {
      throw DataError("unknown emotion class '" + c.name + "'");
    }
    per_class.push_back(class_plp(c, opt.features));
    (broad == "neutral" ? neutral_parts : filler_parts).push_back(per_class.back());
  }
  if (neutral_parts.empty()) throw DataError("emotion corpus lacks neutral classes");
  if (filler_parts.empty()) throw DataError("emotion corpus lacks non-neutral classes");
  const Matrix all = stack_rows(per_class);
  auto bg = models::gmm_train_em(all, fit_components(opt.emotion_components, all.rows()), opt.seed, opt.em).model;
  bg.label = "background";
  std::vector<TrainedEntry> out;
  out.push_back(gmm_entry("emotion/background", bg, all, Placement::cpu));
  for (std::size_t i = 0; i < classes.size(); ++i) {
    auto m = models::gmm_map_adapt(bg, per_class[i], opt.map_relevance);
    m.label = classes[i].name;
    out.push_back(gmm_entry("emotion/narrow/" + classes[i].name, std::move(m), per_class[i], Placement::cpu));
  }
  const Matrix neutral = stack_rows(neutral_parts);
  const Matrix filler = stack_rows(filler_parts);
  auto n = models::gmm_map_adapt(bg, neutral, opt.map_relevance);
  n.label = "neutral";
  auto f = models::gmm_map_adapt(bg, filler, opt.map_relevance);
  f.label = "filler";
  out.push_back(gmm_entry("emotion/gate/neutral", std::move(n), neutral, Placement::dsp));
  out.push_back(gmm_entry("emotion/gate/filler", std::move(f), filler, Placement::dsp));
  return out;
}

void add_to_bundle(models::ModelBundle& bundle, const std::vector<TrainedEntry>& entries) {
  for (const auto& e : entries) bundle.add(e.name, e.model, e.placement);
}

std::vector<synth::VoiceSpec> synthetic_voices(const SyntheticSpec& spec) {
  return synth::make_speakers(spec.speakers, spec.seed);
}

std::vector<ClassClips> synthetic_speech_filter_corpus(const SyntheticSpec& spec) {
  const auto voices = synth::make_speakers(std::max<std::size_t>(spec.speakers, 4), spec.seed + 101, "fv");
  const auto& table = pipelines::emotion_table();
  ClassClips speech{"speech", {}}, ambient{"ambient", {}};
  for (std::size_t i = 0; i < voices.size(); ++i) {
    const auto style = synth::emotion_style(table[(i * 5) % table.size()].narrow);
    speech.clips.push_back(synth::render_speech(voices[i], spec.filter_speech_seconds, spec.seed + 200 + i, style));
  }
  const audio::SoundClass amb[] = {audio::SoundClass::music, audio::SoundClass::traffic, audio::SoundClass::water,
                                   audio::SoundClass::other};
  for (std::size_t i = 0; i < 4; ++i)
    ambient.clips.push_back(synth::render_ambient(amb[i], spec.filter_ambient_seconds, spec.seed + 300 + i));
  return {std::move(speech), std::move(ambient)};
}

std::vector<ClassClips> synthetic_ambient_corpus(const SyntheticSpec& spec) {
  std::vector<ClassClips> out;
  for (auto name : pipelines::kAmbientClasses) {
    ClassClips c{std::string(name), {}};
    const auto cls = audio::sound_class_from_string(name);
    // Several independently seeded recordings per class.
    for (int k = 0; k < 4; ++k)
      c.clips.push_back(synth::render_ambient(cls, spec.ambient_seconds / 4, seed_of(spec.seed + k, name)));
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<ClassClips> synthetic_speaker_corpus(const SyntheticSpec& spec) {
  std::vector<ClassClips> out;
  const auto voices = synthetic_voices(spec);
  const auto& table = pipelines::emotion_table();
  for (std::size_t i = 0; i < voices.size(); ++i) {
    ClassClips c{voices[i].id, {}};
    // Mostly neutral speech with a little emotional variety.
    const double chunk = 10.0;
    for (std::size_t k = 0; k * chunk < spec.speaker_seconds; ++k) {
      const auto style = k % 3 == 2 ? synth::emotion_style(table[(i + k) % table.size()].narrow) : synth::EmotionStyle{};
      c.clips.push_back(synth::render_speech(voices[i], chunk, spec.seed + 1000 * (i + 1) + k, style));
    }
    out.push_back(std::move(c));
  }
  return out;
}

std::vector<ClassClips> synthetic_emotion_corpus(const SyntheticSpec& spec) {
  const auto voices = synth::make_speakers(spec.emotion_voices, spec.seed + 7, "ev");
  std::vector<ClassClips> out;
  std::size_t k = 0;
  for (const auto& e : pipelines::emotion_table()) {
    ClassClips c{std::string(e.narrow), {}};
    const auto style = synth::emotion_style(e.narrow);
    for (const auto& v : voices) c.clips.push_back(synth::render_speech(v, spec.emotion_seconds, spec.seed + 5000 + k++, style));
    out.push_back(std::move(c));
  }
  return out;
}

models::ModelBundle train_synthetic_bundle(const SyntheticSpec& spec, const TrainOptions& opt,
                                           std::vector<TrainedEntry>* log) {
  models::ModelBundle bundle;
  std::vector<TrainedEntry> all;
  for (auto&& part : {train_speech_filter(synthetic_speech_filter_corpus(spec), opt),
                      train_ambient(synthetic_ambient_corpus(spec), opt),
                      train_speakers(synthetic_speaker_corpus(spec), opt),
                      train_emotions(synthetic_emotion_corpus(spec), opt)})
    all.insert(all.end(), part.begin(), part.end());
  add_to_bundle(bundle, all);
  bundle.check_budget();
  if (log) *log = std::move(all);
  return bundle;
}

std::vector<ValenceWindow> valence_clusters(std::size_t windows_per_class, std::size_t frames_per_window,
                                            double separation, std::uint64_t seed) {
  constexpr std::size_t kDim = features::kPlpDim;
  constexpr std::size_t kModes = 4;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g(0.0, 1.0);
  Matrix modes(kModes, kDim);
  for (auto& v : modes.data()) v = 2.0 * g(rng);
  std::vector<double> dir(kDim);
  double norm = 0.0;
  for (auto& v : dir) {
    v = g(rng);
    norm += v * v;
  }
  for (auto& v : dir) v /= std::sqrt(norm);

  std::vector<ValenceWindow> out;
  for (std::size_t w = 0; w < 2 * windows_per_class; ++w) {
    ValenceWindow vw;
    vw.neutral = w % 2 == 0;
    // Per-window offset plays the role of speaker and channel variation.
    std::vector<double> offset(kDim);
    for (auto& v : offset) v = 0.5 * g(rng);
    vw.frames = Matrix(frames_per_window, kDim);
    std::uniform_int_distribution<std::size_t> pick(0, kModes - 1);
    for (std::size_t r = 0; r < frames_per_window; ++r) {
      const std::size_t m = pick(rng);
      for (std::size_t d = 0; d < kDim; ++d)
        vw.frames(r, d) = modes(m, d) + offset[d] + (vw.neutral ? 0.0 : separation * dir[d]) + g(rng);
    }
    out.push_back(std::move(vw));
  }
  return out;
}

}  // namespace dspear::corpus
