#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "dspear/errors.hpp"
#include "dspear/orchestrator.hpp"
#include "dspear/synth.hpp"
#include "support.hpp"

using namespace dspear;
using namespace dspear::pipelines;

namespace {

audio::AudioStream stream_of(std::vector<double> samples) {
  audio::AudioStream s;
  s.samples = std::move(samples);
  return s;
}

template <class... Parts>
audio::AudioStream concat(const Parts&... parts) {
  std::vector<double> x;
  (x.insert(x.end(), parts.begin(), parts.end()), ...);
  return stream_of(std::move(x));
}

std::size_t count_kind(const RunResult& r, EventKind k, bool include_gated = false) {
  return static_cast<std::size_t>(std::count_if(r.events.begin(), r.events.end(), [&](const InferenceEvent& e) {
    return e.kind == k && (include_gated || e.provenance != Provenance::gated_out);
  }));
}

// Seconds of [a, b) not covered by silence or ambient events.
double unclaimed(const RunResult& r, double a, double b) {
  std::vector<std::pair<double, double>> iv;
  for (const auto& e : r.events)
    if (e.kind == EventKind::silence || e.kind == EventKind::ambient)
      iv.emplace_back(std::max(a, e.t_start), std::min(b, e.t_end));
  std::sort(iv.begin(), iv.end());
  double covered = 0, reach = a;
  for (auto [s, t] : iv) {
    s = std::max(s, reach);
    if (t > s) {
      covered += t - s;
      reach = t;
    }
  }
  return (b - a) - covered;
}

void check_invariants(const RunResult& r) {
  // Silence and ambient events never overlap each other.
  std::vector<std::pair<double, double>> blocks;
  for (const auto& e : r.events)
    if (e.kind == EventKind::silence || e.kind == EventKind::ambient) blocks.emplace_back(e.t_start, e.t_end);
  std::sort(blocks.begin(), blocks.end());
  for (std::size_t i = 1; i < blocks.size(); ++i) CHECK(blocks[i].first >= blocks[i - 1].second - 1e-9);

  // Speech pipelines only consume audio that received the speech verdict.
  for (const auto& e : r.events) {
    if (e.provenance == Provenance::gated_out) continue;
    if (e.kind == EventKind::emotion || e.kind == EventKind::speaker)
      CHECK(unclaimed(r, e.t_start, e.t_end) >= 5.0 - 1e-3);
    if (e.kind == EventKind::gender) CHECK(unclaimed(r, e.t_start, e.t_end) >= 3.0 - 1e-3);
  }

  // Gap-free timeline.
  std::vector<std::pair<double, double>> all;
  for (const auto& e : r.events) all.emplace_back(e.t_start, e.t_end);
  std::sort(all.begin(), all.end());
  double reach = 0;
  for (const auto& [s, t] : all) {
    CHECK(s <= reach + 1e-6);
    reach = std::max(reach, t);
  }
  CHECK(reach >= r.duration_s - 1e-6);
}

}  // namespace

TEST_CASE("pure silence yields only silence events and no classifier work") {
  const auto r = orchestrate(stream_of(synth::render_silence(20, 1)), testing::small_bundle());
  REQUIRE_FALSE(r.events.empty());
  for (const auto& e : r.events) CHECK(e.kind == EventKind::silence);
  for (const auto& [stage, n] : r.invocations.counts)
    if (stage != "silence_filter") CHECK_MESSAGE(n == 0, stage);
  CHECK(r.invocations.get("silence_filter") == 16);
  CHECK(r.duration_s == doctest::Approx(20));
  check_invariants(r);
}

TEST_CASE("ten seconds of speech") {
  const auto voice = testing::small_voices()[0];
  const auto r = orchestrate(stream_of(synth::render_speech(voice, 8 * 1.28, 3)), testing::small_bundle());
  CHECK(count_kind(r, EventKind::emotion) == 2);
  CHECK(count_kind(r, EventKind::speaker) == 2);
  CHECK(count_kind(r, EventKind::gender) == 3);
  CHECK(count_kind(r, EventKind::ambient, true) == 0);
  CHECK(count_kind(r, EventKind::speaker_count) == 1);
  CHECK(r.invocations.get("ambient_gmm") == 0);
  CHECK(r.invocations.get("plp") == 2);
  CHECK(r.invocations.get("speaker_count") == 3);
  CHECK(r.invocations.get("crowd_finalize") == 1);
  check_invariants(r);
}

TEST_CASE("speech then a minute of silence finalizes the conversation once") {
  const auto voice = testing::small_voices()[1];
  const auto speech = synth::render_speech(voice, 12, 5);
  const auto quiet = synth::render_silence(61, 6);
  const auto r = orchestrate(concat(speech, quiet), testing::small_bundle());
  CHECK(r.invocations.get("crowd_finalize") == 1);
  CHECK(count_kind(r, EventKind::speaker_count) == 1);
  check_invariants(r);

  // A second burst after the timeout opens a new conversation.
  const auto r2 = orchestrate(concat(speech, quiet, speech), testing::small_bundle());
  CHECK(r2.invocations.get("crowd_finalize") == 2);
}

TEST_CASE("ambient audio never reaches the speech pipelines") {
  const auto r = orchestrate(stream_of(synth::render_ambient(audio::SoundClass::traffic, 15, 2)), testing::small_bundle());
  CHECK(count_kind(r, EventKind::ambient) > 0);
  CHECK(count_kind(r, EventKind::emotion, true) == 0);
  CHECK(count_kind(r, EventKind::speaker, true) == 0);
  CHECK(r.invocations.get("plp") == 0);
  CHECK(r.invocations.get("speaker_count") == 0);
  check_invariants(r);
}

TEST_CASE("random streams: invariants and thread-count independence") {
  const auto voices = testing::small_voices();
  for (std::uint64_t seed : {1u, 2u}) {
    const auto trace = synth::make_random_trace(voices, 120, seed);
    const auto s = synth::render_trace(trace, voices, seed + 50);
    OrchestratorConfig one;
    auto two = one;
    two.two_threads = true;
    const auto a = orchestrate(s, testing::small_bundle(), one);
    const auto b = orchestrate(s, testing::small_bundle(), two);
    check_invariants(a);
    auto ea = a.events, eb = b.events;
    std::sort(ea.begin(), ea.end());
    std::sort(eb.begin(), eb.end());
    CHECK(ea == eb);
    CHECK(a.invocations == b.invocations);
    CHECK(a.gate_stats == b.gate_stats);
    // Non-neutral windows cost 2 gate + 8 narrow evaluations, neutral ones 2 + 0.
    CHECK(a.invocations.get("emotion_gmm") % 8 == 0);
    CHECK(a.invocations.get("neutral_gmm") % 2 == 0);
    CHECK(a.invocations.get("emotion_gmm") / 8 <= a.invocations.get("neutral_gmm") / 2);
  }
}

TEST_CASE("naive configuration disables every shortcut") {
  const auto voice = testing::small_voices()[2];
  const auto s = stream_of(synth::render_speech(voice, 16 * 1.28, 9));
  const auto r = orchestrate(s, testing::small_bundle(), OrchestratorConfig::naive());
  CHECK(r.invocations.get("neutral_gmm") == 0);
  CHECK(r.invocations.get("emotion_gmm") == 14 * r.invocations.get("plp"));
  for (const auto& e : r.events) CHECK(e.provenance != Provenance::propagated);
}

TEST_CASE("bundle checks name the stage") {
  models::ModelBundle empty;
  try {
    check_bundle(empty, {});
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("speech_filter") != std::string::npos);
  }
  auto partial = testing::small_bundle();
  OrchestratorConfig cfg;
  CHECK_NOTHROW(check_bundle(partial, cfg));
  audio::AudioStream s16 = stream_of(std::vector<double>(16000, 0.0));
  s16.sample_rate = 16000;
  CHECK_THROWS_AS(orchestrate(s16, partial, cfg), DataError);
}

TEST_CASE("configuration keys") {
  auto kv = KvConfig::parse("version = 1\nsimilarity.ambient_deg = 7\npipelines.emotion = false\nthreads = 2\n");
  OrchestratorConfig cfg;
  cfg.apply(kv);
  CHECK(cfg.ambient_similarity_deg == 7.0);
  CHECK_FALSE(cfg.enabled.emotion);
  CHECK(cfg.two_threads);
  CHECK_THROWS_AS(kv.require_known({"version", "similarity.*"}), ConfigError);
  auto allowed = OrchestratorConfig::known_keys();
  allowed.push_back("version");
  CHECK_NOTHROW(kv.require_known(allowed));

  OrchestratorConfig bad;
  CHECK_THROWS_AS(bad.apply(KvConfig::parse("version = 1\nthreads = 3\n")), ConfigError);
  CHECK_THROWS_AS(bad.apply(KvConfig::parse("version = 1\nsimilarity.speaker_deg = 95\n")), ConfigError);
}

TEST_CASE("gate statistics CSV round trip") {
  std::vector<GateStatsRow> rows = {{"ambient", 10, 12}, {"speaker", 3, 7}, {"emotion", 0, 0}};
  const auto text = gate_stats_csv(rows);
  CHECK(text.rfind("detector,propagated,classified,saved_fraction", 0) == 0);
  CHECK(gate_stats_from_csv(text) == rows);
  CHECK(rows[0].saved_fraction() == doctest::Approx(10.0 / 22));
  CHECK(rows[2].saved_fraction() == 0.0);
}
