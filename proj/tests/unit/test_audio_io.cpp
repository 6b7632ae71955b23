#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <numbers>

#include "dspear/audio_io.hpp"
#include "dspear/errors.hpp"

using namespace dspear::audio;
using dspear::DataError;

namespace {

// Reference RIFF writer independent of the library.
std::vector<std::uint8_t> reference_wav(const std::vector<std::int16_t>& pcm, std::uint32_t rate,
                                        std::uint16_t channels = 1, std::uint16_t bits = 16,
                                        std::uint16_t format = 1) {
  std::vector<std::uint8_t> b;
  auto put32 = [&](std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  };
  auto put16 = [&](std::uint16_t v) {
    b.push_back(static_cast<std::uint8_t>(v));
    b.push_back(static_cast<std::uint8_t>(v >> 8));
  };
  auto tag = [&](const char* t) { b.insert(b.end(), t, t + 4); };
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(pcm.size() * 2);
  tag("RIFF");
  put32(36 + data_bytes);
  tag("WAVE");
  tag("fmt ");
  put32(16);
  put16(format);
  put16(channels);
  put32(rate);
  put32(rate * channels * bits / 8);
  put16(static_cast<std::uint16_t>(channels * bits / 8));
  put16(bits);
  tag("data");
  put32(data_bytes);
  for (auto s : pcm) put16(static_cast<std::uint16_t>(s));
  return b;
}

}  // namespace

TEST_CASE("one second of silent WAV reads as 8000 zeros") {
  const auto s = decode_wav(reference_wav(std::vector<std::int16_t>(8000, 0), 8000));
  CHECK(s.sample_rate == 8000);
  REQUIRE(s.samples.size() == 8000);
  for (double v : s.samples) CHECK(v == 0.0);
}

TEST_CASE("16 kHz input is rejected unless resampling is requested") {
  const auto bytes = reference_wav(std::vector<std::int16_t>(16000, 100), 16000);
  CHECK_THROWS_AS(decode_wav(bytes), dspear::AudioFormatError);
  const auto s = decode_wav(bytes, {true});
  CHECK(s.sample_rate == 8000);
  CHECK(s.samples.size() == 8000);
}

TEST_CASE("full-scale 440 Hz sine stays in range with peak near one") {
  std::vector<std::int16_t> pcm(8000);
  for (std::size_t i = 0; i < pcm.size(); ++i)
    pcm[i] = static_cast<std::int16_t>(std::lround(32767.0 * std::sin(2 * std::numbers::pi * 440.0 * i / 8000.0)));
  const auto s = decode_wav(reference_wav(pcm, 8000));
  double peak = 0;
  for (double v : s.samples) {
    CHECK(v >= -1.0);
    CHECK(v <= 1.0);
    peak = std::max(peak, std::abs(v));
  }
  CHECK(peak >= 0.99);
}

TEST_CASE("malformed and unsupported WAV files are rejected") {
  std::vector<std::uint8_t> junk(100, 7);
  CHECK_THROWS_AS(decode_wav(junk), dspear::AudioFormatError);
  CHECK_THROWS_AS(decode_wav(reference_wav({1, 2, 3, 4}, 8000, 2)), dspear::AudioFormatError);
  CHECK_THROWS_AS(decode_wav(reference_wav({1, 2, 3, 4}, 8000, 1, 16, 3)), dspear::AudioFormatError);
  auto cut_header = reference_wav(std::vector<std::int16_t>(100, 0), 8000);
  cut_header.resize(30);
  CHECK_THROWS_AS(decode_wav(cut_header), dspear::AudioFormatError);
}

TEST_CASE("a data chunk cut short by a streaming writer yields the samples present") {
  auto truncated = reference_wav(std::vector<std::int16_t>(100, 0), 8000);
  truncated.resize(44 + 2 * 8);
  CHECK(decode_wav(truncated).samples.size() == 8);
}

TEST_CASE("write then read is lossless within one 16-bit step") {
  SignalSpec spec = SignalSpec::tone(330, 0.6);
  spec.noise = NoiseSpec{0.1};
  const auto s = synth_signal(spec, 0.5, 3);
  const auto path = std::filesystem::temp_directory_path() / "dspear_roundtrip.wav";
  write_wav(path, s);
  const auto back = read_wav(path);
  REQUIRE(back.samples.size() == s.samples.size());
  for (std::size_t i = 0; i < s.samples.size(); ++i) CHECK(std::abs(back.samples[i] - s.samples[i]) <= 1.0 / 32767.0);
  CHECK(back.origin == Origin::file);
  std::filesystem::remove(path);
}

TEST_CASE("window geometry per kind") {
  AudioStream s;
  s.samples.assign(10240, 0.1);
  auto amb = frame_stream(s, WindowKind::ambient);
  REQUIRE(amb.size() == 1);
  CHECK(amb[0].frames.size() == 40);

  s.samples.assign(80000, 0.1);
  auto speech = frame_stream(s, WindowKind::speech);
  REQUIRE(speech.size() == 2);
  CHECK(speech[0].frames.size() == 498);
  CHECK(speech[1].start_index == 40000);

  s.samples.assign(24000, 0.1);
  auto cnt = frame_stream(s, WindowKind::speaker_count);
  REQUIRE(cnt.size() == 1);
  CHECK(cnt[0].frames.size() == 187);

  s.samples.assign(1000, 0.1);
  CHECK_THROWS_AS(frame_stream(s, WindowKind::ambient), std::invalid_argument);
}

TEST_CASE("window count follows floor((N - len) / hop) + 1") {
  for (auto kind : {WindowKind::ambient, WindowKind::speaker_count, WindowKind::speech}) {
    const auto g = geometry(kind);
    for (std::size_t n : {g.window_len, g.window_len + 1, 3 * g.window_len - 1, 7 * g.window_len + 13}) {
      AudioStream s;
      s.samples.assign(n, 0.0);
      CHECK(frame_stream(s, kind).size() == (n - g.window_len) / g.window_len + 1);
      CHECK(window_count(n, kind) == (n - g.window_len) / g.window_len + 1);
    }
  }
}

TEST_CASE("speaker_count frames cover the window once or twice") {
  AudioStream s;
  s.samples.assign(24000, 0.0);
  const auto w = frame_stream(s, WindowKind::speaker_count).at(0);
  std::vector<int> cover(24000, 0);
  for (const auto& f : w.frames) {
    CHECK(f.samples.size() == 256);
    for (std::size_t i = f.start_index; i < std::min<std::size_t>(f.start_index + 256, 24000); ++i) ++cover[i];
  }
  for (std::size_t i = 0; i < cover.size(); ++i) {
    CHECK(cover[i] >= 1);
    CHECK(cover[i] <= 2);
  }
  for (std::size_t i = 128; i < 23808; ++i) CHECK(cover[i] == 2);
}

TEST_CASE("frames are contiguous per the hop of their kind") {
  AudioStream s;
  s.samples.assign(40000, 0.0);
  for (auto kind : {WindowKind::ambient, WindowKind::speaker_count, WindowKind::speech}) {
    const auto g = geometry(kind);
    const auto w = frame_stream(s, kind).at(0);
    for (std::size_t i = 1; i < w.frames.size(); ++i)
      CHECK(w.frames[i].start_index - w.frames[i - 1].start_index == g.frame_hop);
    for (const auto& f : w.frames) CHECK((f.samples.size() == 256 || f.samples.size() == 240));
  }
}

TEST_CASE("synthetic signals") {
  const auto tone = synth_signal(SignalSpec::tone(200), 1.0, 1);
  REQUIRE(tone.samples.size() == 8000);
  int crossings = 0;
  for (std::size_t i = 1; i < tone.samples.size(); ++i)
    if ((tone.samples[i - 1] < 0) != (tone.samples[i] < 0)) ++crossings;
  CHECK(std::abs(crossings - 400) <= 2);

  const auto a = synth_signal(SignalSpec::white_noise(), 0.5, 7);
  const auto b = synth_signal(SignalSpec::white_noise(), 0.5, 7);
  CHECK(a.samples == b.samples);

  const auto quiet = synth_signal(SignalSpec::silence(), 0.25, 1);
  for (double v : quiet.samples) CHECK(v == 0.0);

  CHECK_THROWS_AS(synth_signal(SignalSpec::tone(4000), 0.1, 1), std::invalid_argument);
}

TEST_CASE("day traces and their CSV form") {
  const auto t = make_day_trace({4.5, 8.0, 24.0, 32});
  t.validate(24.0 * 3600);
  CHECK(t.total_duration_s() == doctest::Approx(86400));
  CHECK(t.seconds_of(SoundClass::speech) == doctest::Approx(4.5 * 3600));
  CHECK(t.seconds_of(SoundClass::silence) == doctest::Approx(8 * 3600));
  for (const auto& s : t.segments) CHECK(s.duration_s > 0);

  const auto back = trace_from_csv(trace_to_csv(t));
  REQUIRE(back.segments.size() == t.segments.size());
  for (std::size_t i = 0; i < t.segments.size(); ++i) {
    CHECK(back.segments[i].sound == t.segments[i].sound);
    CHECK(back.segments[i].duration_s == doctest::Approx(t.segments[i].duration_s));
  }

  CHECK_THROWS_AS(trace_from_csv("bad header\n"), DataError);
  CHECK_THROWS_AS(trace_from_csv("start_s,duration_s,class,label\n0,-1,speech,\n").validate(), DataError);
  CHECK_THROWS_AS(make_day_trace({17, 8, 24, 32}), std::invalid_argument);
}
