#include "dspear/audio_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iterator>
#include <numbers>
#include <random>
#include <sstream>
#include <stdexcept>

#include "dspear/errors.hpp"

namespace dspear::audio {

namespace {

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint32_t>(b[at]) | (static_cast<std::uint32_t>(b[at + 1]) << 8) |
         (static_cast<std::uint32_t>(b[at + 2]) << 16) |
         (static_cast<std::uint32_t>(b[at + 3]) << 24);
}

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t at) {
  return static_cast<std::uint16_t>(b[at] | (b[at + 1] << 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

bool tag_is(std::span<const std::uint8_t> b, std::size_t at, const char* tag) {
  return std::equal(tag, tag + 4, b.begin() + static_cast<std::ptrdiff_t>(at));
}

}  // namespace

AudioStream decode_wav(std::span<const std::uint8_t> bytes, ReadOptions options) {
  if (bytes.size() < 12 || !tag_is(bytes, 0, "RIFF") || !tag_is(bytes, 8, "WAVE"))
    throw AudioFormatError("malformed WAV header: missing RIFF/WAVE tags");

  bool have_fmt = false;
  std::uint16_t format = 0, channels = 0, bits = 0;
  std::uint32_t rate = 0;
  std::span<const std::uint8_t> data;
  bool have_data = false;

  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const std::uint32_t size = read_u32(bytes, pos + 4);
    const std::size_t body = pos + 8;
    if (body + size > bytes.size()) {
      // Tolerate a truncated data chunk size from streaming writers.
      if (tag_is(bytes, pos, "data")) {
        data = bytes.subspan(body);
        have_data = true;
        break;
      }
      throw AudioFormatError("malformed WAV: chunk overruns file");
    }
    if (tag_is(bytes, pos, "fmt ")) {
      if (size < 16) throw AudioFormatError("malformed WAV: short fmt chunk");
      format = read_u16(bytes, body);
      channels = read_u16(bytes, body + 2);
      rate = read_u32(bytes, body + 4);
      bits = read_u16(bytes, body + 14);
      have_fmt = true;
    } else if (tag_is(bytes, pos, "data")) {
      data = bytes.subspan(body, size);
      have_data = true;
    }
    pos = body + size + (size & 1u);
  }
  if (!have_fmt) throw AudioFormatError("malformed WAV: no fmt chunk");
  if (!have_data) throw AudioFormatError("malformed WAV: no data chunk");
  if (format != 1) throw AudioFormatError("unsupported WAV encoding: format tag " + std::to_string(format));
  if (channels != 1) throw AudioFormatError("unsupported WAV: " + std::to_string(channels) + " channels (mono only)");
  if (bits != 16) throw AudioFormatError("unsupported WAV: " + std::to_string(bits) + "-bit samples (PCM-16 only)");
  if (rate == 0) throw AudioFormatError("malformed WAV: zero sample rate");

  std::vector<double> samples(data.size() / 2);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const auto raw = static_cast<std::int16_t>(read_u16(data, 2 * i));
    samples[i] = raw / 32768.0;
  }

  if (static_cast<int>(rate) != kSampleRate) {
    if (!options.resample)
      throw AudioFormatError("sample rate " + std::to_string(rate) +
                             " Hz is not 8000 Hz (enable resampling to convert)");
    samples = resample_linear(samples, static_cast<int>(rate), kSampleRate);
  }
  return AudioStream{kSampleRate, std::move(samples), Origin::file};
}

AudioStream read_wav(const std::filesystem::path& path, ReadOptions options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open audio file " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  try {
    return decode_wav(bytes, options);
  } catch (const AudioFormatError& e) {
    throw AudioFormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_wav(std::span<const double> samples, int sample_rate) {
  const auto data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  std::vector<std::uint8_t> out;
  out.reserve(44 + data_bytes);
  out.insert(out.end(), {'R', 'I', 'F', 'F'});
  put_u32(out, 36 + data_bytes);
  out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
  put_u32(out, 16);
  put_u16(out, 1);
  put_u16(out, 1);
  put_u32(out, static_cast<std::uint32_t>(sample_rate));
  put_u32(out, static_cast<std::uint32_t>(sample_rate * 2));
  put_u16(out, 2);
  put_u16(out, 16);
  out.insert(out.end(), {'d', 'a', 't', 'a'});
  put_u32(out, data_bytes);
  for (double x : samples) {
    const double scaled = std::round(std::clamp(x, -1.0, 1.0) * 32768.0);
    const auto v = static_cast<std::int16_t>(std::clamp(scaled, -32768.0, 32767.0));
    put_u16(out, static_cast<std::uint16_t>(v));
  }
  return out;
}

void write_wav(const std::filesystem::path& path, const AudioStream& stream) {
  const auto bytes = encode_wav(stream.samples, stream.sample_rate);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write audio file " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::vector<double> resample_linear(std::span<const double> in, int from_rate, int to_rate) {
  if (from_rate <= 0 || to_rate <= 0) throw std::invalid_argument("sample rates must be positive");
  if (in.empty()) return {};
  const auto n_out = static_cast<std::size_t>(
      static_cast<long double>(in.size()) * to_rate / from_rate);
  std::vector<double> out(n_out);
  const double step = static_cast<double>(from_rate) / to_rate;
  for (std::size_t i = 0; i < n_out; ++i) {
    const double pos = i * step;
    const auto i0 = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i0);
    const double a = in[std::min(i0, in.size() - 1)];
    const double b = in[std::min(i0 + 1, in.size() - 1)];
    out[i] = a + (b - a) * frac;
  }
  return out;
}

// ---------------------------------------------------------------------------

WindowGeometry geometry(WindowKind kind) {
  switch (kind) {
    case WindowKind::ambient:
      return {256, 256, 10240, 40};
    case WindowKind::speaker_count:
      return {256, 128, 24000, 187};
    case WindowKind::speech:
      return {240, 80, 40000, 498};
  }
  throw std::invalid_argument("unknown window kind");
}

std::string_view to_string(WindowKind kind) {
  switch (kind) {
    case WindowKind::ambient: return "ambient";
    case WindowKind::speaker_count: return "speaker_count";
    case WindowKind::speech: return "speech";
  }
  return "?";
}

Window make_window(WindowKind kind, std::span<const double> window_samples, std::size_t start_index) {
  const auto g = geometry(kind);
  if (window_samples.size() != g.window_len)
    throw std::invalid_argument("window of kind " + std::string(to_string(kind)) + " needs " +
                                std::to_string(g.window_len) + " samples, got " +
                                std::to_string(window_samples.size()));
  Window w;
  w.kind = kind;
  w.start_index = start_index;
  w.samples.assign(window_samples.begin(), window_samples.end());
  w.frames.reserve(g.frame_count);
  for (std::size_t f = 0; f < g.frame_count; ++f) {
    const std::size_t begin = f * g.frame_hop;
    Frame frame;
    frame.start_index = start_index + begin;
    frame.samples.assign(g.frame_len, 0.0);
    const std::size_t avail = std::min(g.frame_len, g.window_len - begin);
    std::copy_n(window_samples.begin() + static_cast<std::ptrdiff_t>(begin), avail, frame.samples.begin());
    w.frames.push_back(std::move(frame));
  }
  return w;
}

std::size_t window_count(std::size_t n_samples, WindowKind kind) {
  const auto g = geometry(kind);
  if (n_samples < g.window_len) return 0;
  return (n_samples - g.window_len) / g.window_len + 1;
}

std::vector<Window> frame_stream(const AudioStream& stream, WindowKind kind) {
  const auto g = geometry(kind);
  const std::size_t n = window_count(stream.samples.size(), kind);
  if (n == 0)
    throw std::invalid_argument("stream of " + std::to_string(stream.samples.size()) +
                                " samples is shorter than one " + std::string(to_string(kind)) + " window");
  std::vector<Window> out;
  out.reserve(n);
  const std::span<const double> all(stream.samples);
  for (std::size_t i = 0; i < n; ++i)
    out.push_back(make_window(kind, all.subspan(i * g.window_len, g.window_len), i * g.window_len));
  return out;
}

// ---------------------------------------------------------------------------

AudioStream synth_signal(const SignalSpec& spec, double duration_s, std::uint64_t seed) {
  if (duration_s < 0) throw std::invalid_argument("duration must be non-negative");
  const double nyquist = kSampleRate / 2.0;
  for (const auto& t : spec.tones)
    if (t.frequency_hz >= nyquist || t.frequency_hz <= 0)
      throw std::invalid_argument("tone frequency " + std::to_string(t.frequency_hz) +
                                  " Hz outside (0, 4000) Hz");

  const auto n = static_cast<std::size_t>(std::llround(duration_s * kSampleRate));
  AudioStream out{kSampleRate, std::vector<double>(n, 0.0), Origin::synthetic};
  for (const auto& t : spec.tones) {
    for (std::size_t i = 0; i < n; ++i) {
      const double cycles = t.frequency_hz * static_cast<double>(i) / kSampleRate + t.phase / (2 * std::numbers::pi);
      const double frac = cycles - std::floor(cycles);
      double v = 0.0;
      switch (t.waveform) {
        case Waveform::sine: v = std::sin(2 * std::numbers::pi * cycles); break;
        case Waveform::sawtooth: v = 2.0 * frac - 1.0; break;
        case Waveform::square: v = frac < 0.5 ? 1.0 : -1.0; break;
      }
      out.samples[i] += t.amplitude * v;
    }
  }
  if (spec.noise) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, spec.noise->amplitude);
    for (auto& s : out.samples) s += dist(rng);
  }
  for (auto& s : out.samples) s = std::clamp(s, -1.0, 1.0);
  return out;
}

// ---------------------------------------------------------------------------

std::string_view to_string(SoundClass c) {
  switch (c) {
    case SoundClass::silence: return "silence";
    case SoundClass::speech: return "speech";
    case SoundClass::music: return "music";
    case SoundClass::traffic: return "traffic";
    case SoundClass::water: return "water";
    case SoundClass::other: return "other";
  }
  return "?";
}

SoundClass sound_class_from_string(std::string_view s) {
  for (auto c : {SoundClass::silence, SoundClass::speech, SoundClass::music, SoundClass::traffic,
                 SoundClass::water, SoundClass::other})
    if (to_string(c) == s) return c;
  throw DataError("unknown sound class '" + std::string(s) + "'");
}

bool is_ambient(SoundClass c) { return c != SoundClass::silence && c != SoundClass::speech; }

double SoundTrace::total_duration_s() const {
  double t = 0;
  for (const auto& s : segments) t += s.duration_s;
  return t;
}

double SoundTrace::seconds_of(SoundClass c) const {
  double t = 0;
  for (const auto& s : segments)
    if (s.sound == c) t += s.duration_s;
  return t;
}

void SoundTrace::validate(std::optional<double> expected_total_s) const {
  double t = 0;
  for (std::size_t i = 0; i < segments.size(); ++i) {
    const auto& s = segments[i];
    if (!(s.duration_s > 0)) throw DataError("trace segment " + std::to_string(i) + " has non-positive duration");
    if (std::abs(s.start_s - t) > 1e-6 * std::max(1.0, t))
      throw DataError("trace segment " + std::to_string(i) + " starts at " + std::to_string(s.start_s) +
                      " s, expected " + std::to_string(t) + " s");
    t += s.duration_s;
  }
  if (expected_total_s && std::abs(t - *expected_total_s) > 1e-6 * std::max(1.0, t))
    throw DataError("trace covers " + std::to_string(t) + " s, expected " + std::to_string(*expected_total_s) + " s");
}

SoundTrace make_day_trace(const DayTraceSpec& spec) {
  const double active_h = spec.day_h - spec.silence_h;
  if (spec.speech_h < 0 || spec.silence_h < 0 || spec.speech_h > active_h || spec.episodes < 1)
    throw std::invalid_argument("day trace: need 0 <= speech_h <= day_h - silence_h");
  SoundTrace trace;
  double t = 0;
  auto push = [&](double dur_s, SoundClass c) {
    if (dur_s <= 0) return;
    trace.segments.push_back({t, dur_s, c, {}});
    t += dur_s;
  };
  push(spec.silence_h * 3600.0, SoundClass::silence);
  const double speech_ep = spec.speech_h * 3600.0 / spec.episodes;
  const double ambient_ep = (active_h - spec.speech_h) * 3600.0 / spec.episodes;
  constexpr SoundClass rotation[] = {SoundClass::music, SoundClass::traffic, SoundClass::water, SoundClass::other};
  for (int e = 0; e < spec.episodes; ++e) {
    push(speech_ep, SoundClass::speech);
    push(ambient_ep, rotation[e % 4]);
  }
  return trace;
}

std::string trace_to_csv(const SoundTrace& trace) {
  std::ostringstream os;
  os.precision(17);
  os << "start_s,duration_s,class,label\n";
  for (const auto& s : trace.segments)
    os << s.start_s << ',' << s.duration_s << ',' << to_string(s.sound) << ',' << s.label << '\n';
  return os.str();
}

SoundTrace trace_from_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw DataError("empty trace CSV");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "start_s,duration_s,class,label") throw DataError("trace CSV header mismatch: '" + line + "'");
  SoundTrace trace;
  std::size_t lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cols.push_back(cell);
    if (!line.empty() && line.back() == ',') cols.emplace_back();
    if (cols.size() != 4) throw DataError("trace CSV line " + std::to_string(lineno) + ": expected 4 columns");
    try {
      trace.segments.push_back({std::stod(cols[0]), std::stod(cols[1]), sound_class_from_string(cols[2]), cols[3]});
    } catch (const std::invalid_argument&) {
      throw DataError("trace CSV line " + std::to_string(lineno) + ": bad number");
    }
  }
  trace.validate();
  return trace;
}

SoundTrace read_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open trace " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return trace_from_csv(ss.str());
}

void write_trace(const std::filesystem::path& path, const SoundTrace& trace) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write trace " + path.string());
  out << trace_to_csv(trace);
}

}  // namespace dspear::audio
