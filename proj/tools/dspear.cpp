#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "dspear/audio_io.hpp"
#include "dspear/corpus.hpp"
#include "dspear/energysim.hpp"
#include "dspear/errors.hpp"
#include "dspear/kv_config.hpp"
#include "dspear/model_io.hpp"
#include "dspear/orchestrator.hpp"
#include "dspear/synth.hpp"
#include "report.hpp"

namespace fs = std::filesystem;
using namespace dspear;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

// Keys the CLI reads on top of the orchestrator's own.
const std::vector<std::string> kCliKeys = {
    "seed",        "models",      "output_dir",  "constants",   "variant",     "trace",
    "offload.mem_limit_mb", "offload.mem_static_mb", "offload.plp_kb", "offload.tau_s", "offload.gamma_s",
    "profile.*",   "synthetic.*", "train.*",
};

struct Settings {
  KvConfig file;

  // flags > file > defaults
  template <typename T>
  T pick(const CLI::Option* flag, const T& flag_value, const std::string& key, const T& fallback) const {
    if (flag && flag->count() > 0) return flag_value;
    if (!file.has(key)) return fallback;
    if constexpr (std::is_same_v<T, std::string>) return file.get_string(key, fallback);
    else if constexpr (std::is_same_v<T, double>) return file.get_double(key, fallback);
    else if constexpr (std::is_same_v<T, bool>) return file.get_bool(key, fallback);
    else return static_cast<T>(file.get_int(key, static_cast<long>(fallback)));
  }
};

Settings load_settings(const std::string& config_path) {
  Settings s;
  std::string path = config_path;
  if (path.empty())
    if (const char* env = std::getenv("DSPEAR_CONFIG"); env && *env) path = env;
  s.file = path.empty() ? KvConfig::parse("version = 1") : KvConfig::load(path);
  auto allowed = kCliKeys;
  for (const auto& k : pipelines::OrchestratorConfig::known_keys()) allowed.push_back(k);
  s.file.require_known(allowed);
  return s;
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  out << text;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void require_exists(const fs::path& p, const char* what) {
  if (!fs::exists(p)) throw ConfigError(std::string(what) + " not found: " + p.string());
}

sim::PowerTable power_table(const Settings& s, const CLI::Option* flag, const std::string& flag_value) {
  const auto path = s.pick<std::string>(flag, flag_value, "constants", "");
  if (path.empty()) return sim::PowerTable::defaults();
  require_exists(path, "constants file");
  return sim::PowerTable::load(path);
}

sim::OffloadParams offload_params(const Settings& s) {
  sim::OffloadParams p;
  constexpr double kMiB = 1024.0 * 1024.0;
  p.mem_limit_bytes = s.file.get_double("offload.mem_limit_mb", p.mem_limit_bytes / kMiB) * kMiB;
  p.mem_static_bytes = s.file.get_double("offload.mem_static_mb", p.mem_static_bytes / kMiB) * kMiB;
  p.plp_bytes_per_window = s.file.get_double("offload.plp_kb", p.plp_bytes_per_window / 1024.0) * 1024.0;
  p.tau_s = s.file.get_double("offload.tau_s", p.tau_s);
  p.gamma_s = s.file.get_double("offload.gamma_s", p.gamma_s);
  p.validate();
  return p;
}

sim::OptimizationProfile profile(const Settings& s) {
  sim::OptimizationProfile p;
  const auto& f = s.file;
  p.neutral_fraction = f.get_double("profile.neutral_fraction", p.neutral_fraction);
  p.sim_save_ambient = f.get_double("profile.sim_save_ambient", p.sim_save_ambient);
  p.sim_save_speaker = f.get_double("profile.sim_save_speaker", p.sim_save_speaker);
  p.sim_save_emotion = f.get_double("profile.sim_save_emotion", p.sim_save_emotion);
  p.speaker_models = f.get_double("profile.speaker_models", p.speaker_models);
  p.speaker_models_gender_filtered = f.get_double("profile.speaker_models_gender_filtered", p.speaker_models_gender_filtered);
  p.already_awake_discount = f.get_double("profile.already_awake_discount", p.already_awake_discount);
  p.background_budget_fraction = f.get_double("profile.background_budget_fraction", p.background_budget_fraction);
  p.validate();
  return p;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

std::vector<double> parse_doubles(const std::string& s, const char* what) {
  std::vector<double> out;
  for (const auto& item : split_list(s)) {
    try {
      out.push_back(std::stod(item));
    } catch (const std::exception&) {
      throw ConfigError(std::string(what) + ": not a number '" + item + "'");
    }
  }
  if (out.empty()) throw ConfigError(std::string(what) + ": empty list");
  return out;
}

std::vector<sim::SystemVariant> parse_variants(const std::string& s) {
  if (s == "all") return {sim::kAllVariants.begin(), sim::kAllVariants.end()};
  std::vector<sim::SystemVariant> out;
  for (const auto& item : split_list(s)) {
    try {
      out.push_back(sim::variant_from_string(item));
    } catch (const std::exception&) {
      throw ConfigError("unknown variant '" + item + "'");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// train

struct TrainArgs {
  std::string corpus, kind = "all", out, spec;
  bool synthetic = false;
  std::size_t ambient_components = 0, speaker_components = 0, emotion_components = 0;
};

corpus::SyntheticSpec synthetic_spec(const Settings& s, const std::string& spec_path, std::uint64_t seed) {
  KvConfig cfg = s.file;
  if (!spec_path.empty()) {
    require_exists(spec_path, "synthetic spec");
    cfg = KvConfig::load(spec_path);
    cfg.require_known({"synthetic.*", "seed"});
  }
  corpus::SyntheticSpec spec;
  spec.seed = seed;
  spec.speakers = static_cast<std::size_t>(cfg.get_int("synthetic.speakers", static_cast<long>(spec.speakers)));
  spec.speaker_seconds = cfg.get_double("synthetic.speaker_seconds", spec.speaker_seconds);
  spec.ambient_seconds = cfg.get_double("synthetic.ambient_seconds", spec.ambient_seconds);
  spec.filter_speech_seconds = cfg.get_double("synthetic.filter_speech_seconds", spec.filter_speech_seconds);
  spec.filter_ambient_seconds = cfg.get_double("synthetic.filter_ambient_seconds", spec.filter_ambient_seconds);
  spec.emotion_voices = static_cast<std::size_t>(cfg.get_int("synthetic.emotion_voices", static_cast<long>(spec.emotion_voices)));
  spec.emotion_seconds = cfg.get_double("synthetic.emotion_seconds", spec.emotion_seconds);
  if (spec.speakers < 1 || spec.emotion_voices < 1) throw ConfigError("synthetic spec needs at least one voice");
  return spec;
}

int cmd_train(const Settings& s, const TrainArgs& a, std::uint64_t seed) {
  static const std::vector<std::string> kinds = {"all", "speech_filter", "ambient", "speaker", "emotion"};
  if (std::find(kinds.begin(), kinds.end(), a.kind) == kinds.end()) throw ConfigError("unknown model kind '" + a.kind + "'");
  if (a.synthetic == !a.corpus.empty()) throw ConfigError("train needs exactly one of --corpus or --synthetic");
  if (!a.synthetic && a.kind == "all") throw ConfigError("--kind is required with --corpus");

  corpus::TrainOptions opt;
  opt.seed = seed;
  opt.ambient_components = s.file.get_int("train.ambient_components", static_cast<long>(opt.ambient_components));
  opt.speaker_components = s.file.get_int("train.speaker_components", static_cast<long>(opt.speaker_components));
  opt.emotion_components = s.file.get_int("train.emotion_components", static_cast<long>(opt.emotion_components));
  opt.map_relevance = s.file.get_double("train.map_relevance", opt.map_relevance);
  if (a.ambient_components) opt.ambient_components = a.ambient_components;
  if (a.speaker_components) opt.speaker_components = a.speaker_components;
  if (a.emotion_components) opt.emotion_components = a.emotion_components;

  std::vector<corpus::TrainedEntry> entries;
  auto train_kind = [&](const std::string& kind, const std::vector<corpus::ClassClips>& classes) {
    std::vector<corpus::TrainedEntry> part;
    if (kind == "speech_filter") part = corpus::train_speech_filter(classes, opt);
    else if (kind == "ambient") part = corpus::train_ambient(classes, opt);
    else if (kind == "speaker") part = corpus::train_speakers(classes, opt);
    else part = corpus::train_emotions(classes, opt);
    entries.insert(entries.end(), part.begin(), part.end());
  };
  if (a.synthetic) {
    const auto spec = synthetic_spec(s, a.spec, seed);
    const bool all = a.kind == "all";
    if (all || a.kind == "speech_filter") train_kind("speech_filter", corpus::synthetic_speech_filter_corpus(spec));
    if (all || a.kind == "ambient") train_kind("ambient", corpus::synthetic_ambient_corpus(spec));
    if (all || a.kind == "speaker") train_kind("speaker", corpus::synthetic_speaker_corpus(spec));
    if (all || a.kind == "emotion") train_kind("emotion", corpus::synthetic_emotion_corpus(spec));
  } else {
    if (!fs::is_directory(a.corpus)) throw DataError("corpus directory not found: " + a.corpus);
    train_kind(a.kind, corpus::read_corpus_dir(a.corpus));
  }

  const fs::path out = s.pick<std::string>(nullptr, "", "models", a.out);
  if (out.empty()) throw ConfigError("train needs --out");
  models::ModelBundle bundle;
  if (fs::exists(out / "manifest.json")) bundle = models::ModelBundle::load(out);
  corpus::add_to_bundle(bundle, entries);
  bundle.check_budget();
  bundle.save(out);

  std::cout.precision(6);
  for (const auto& e : entries) {
    std::cout << e.name << '\t' << models::to_string(e.placement) << '\t';
    if (const auto* g = std::get_if<models::GmmModel>(&e.model)) {
      std::cout << "loglik_per_frame=" << e.loglik_per_frame << " components=" << g->n_components();
      if (!g->gender.empty()) std::cout << " gender=" << g->gender;
    } else {
      std::cout << "train_accuracy=" << e.train_accuracy;
    }
    std::cout << " observations=" << e.observations << '\n';
  }
  std::cout << "wrote " << entries.size() << " models to " << out.string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// run

struct RunArgs {
  std::string audio, models, out, truth, disable, constants;
  int threads = 1;
  bool naive = false, resample = false;
};

pipelines::OrchestratorConfig run_config(const Settings& s, const RunArgs& a, const CLI::App& app) {
  auto cfg = a.naive ? pipelines::OrchestratorConfig::naive() : pipelines::OrchestratorConfig{};
  cfg.apply(s.file);
  if (app.get_option("--threads")->count()) {
    if (a.threads != 1 && a.threads != 2) throw ConfigError("threads must be 1 or 2");
    cfg.two_threads = a.threads == 2;
  }
  for (const auto& p : split_list(a.disable)) {
    if (p == "ambient") cfg.enabled.ambient = false;
    else if (p == "speaker_count") cfg.enabled.speaker_count = false;
    else if (p == "emotion") cfg.enabled.emotion = false;
    else if (p == "speaker_id") cfg.enabled.speaker_id = false;
    else throw ConfigError("unknown pipeline '" + p + "'");
  }
  cfg.validate();
  return cfg;
}

int cmd_run(const Settings& s, const RunArgs& a, const CLI::App& app) {
  const auto cfg = run_config(s, a, app);
  const fs::path models_dir = s.pick<std::string>(app.get_option("--models"), a.models, "models", "");
  const fs::path out = s.pick<std::string>(app.get_option("--out"), a.out, "output_dir", "");
  if (models_dir.empty()) throw ConfigError("run needs --models");
  if (out.empty()) throw ConfigError("run needs --out");
  require_exists(models_dir, "model bundle");
  const auto table = power_table(s, app.get_option("--constants"), a.constants);
  const auto bundle = models::ModelBundle::load(models_dir);
  pipelines::check_bundle(bundle, cfg);

  const auto stream = audio::read_wav(a.audio, {a.resample});
  const auto r = pipelines::orchestrate(stream, bundle, cfg);

  fs::create_directories(out);
  write_text(out / "events.jsonl", pipelines::events_to_jsonl(r.events));
  write_text(out / "invocations.csv", sim::invocations_to_csv(r.invocations, table));
  write_text(out / "gate_stats.csv", pipelines::gate_stats_csv(r.gate_stats));
  if (!a.truth.empty()) {
    const auto trace = audio::read_trace(a.truth);
    audio::write_trace(out / "truth.csv", trace);
  }

  std::map<std::string, std::size_t> by_kind;
  for (const auto& e : r.events) ++by_kind[std::string(pipelines::to_string(e.kind))];
  std::cout << "events " << r.events.size() << ':';
  for (const auto& [k, n] : by_kind) std::cout << ' ' << k << '=' << n;
  std::cout << " duration_s=" << r.duration_s << '\n';
  return 0;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArgs {
  std::string out, kind = "random";
  double seconds = 240.0;
  std::size_t speakers = 6;
};

int cmd_synth(const SynthArgs& a, std::uint64_t seed) {
  if (a.out.empty()) throw ConfigError("synth needs --out");
  if (!(a.seconds > 0)) throw ConfigError("synth needs positive --seconds");
  const auto voices = synth::make_speakers(a.speakers, seed);
  audio::SoundTrace trace;
  if (a.kind == "random") trace = synth::make_random_trace(voices, a.seconds, seed + 1);
  else if (a.kind == "conversation") trace = synth::make_conversation_trace(voices, a.seconds, seed + 1);
  else if (a.kind == "silence") trace.segments.push_back({0.0, a.seconds, audio::SoundClass::silence, {}});
  else throw ConfigError("unknown synth kind '" + a.kind + "'");
  const auto stream = synth::render_trace(trace, voices, seed + 2);
  const fs::path out = a.out;
  fs::create_directories(out);
  audio::write_wav(out / "audio.wav", stream);
  audio::write_trace(out / "truth.csv", trace);
  std::cout << "wrote " << (out / "audio.wav").string() << " (" << stream.duration_s() << " s, "
            << trace.segments.size() << " segments)\n";
  return 0;
}

// ---------------------------------------------------------------------------
// simulate / sweep

struct SimulateArgs {
  std::string trace, variant, out, workload = "full", invocations, constants;
  double speech_h = 4.5, silence_h = 8.0, duration_s = 0.0;
};

int cmd_simulate(const Settings& s, const SimulateArgs& a, const CLI::App& app) {
  const auto variant_name = s.pick<std::string>(app.get_option("--variant"), a.variant, "variant", "dsp_cpu_optimized");
  const auto variants = parse_variants(variant_name);
  if (variants.size() != 1) throw ConfigError("simulate takes a single variant");
  const auto variant = variants.front();
  const auto table = power_table(s, app.get_option("--constants"), a.constants);
  const auto params = offload_params(s);
  sim::SimOptions opt;
  opt.profile = profile(s);
  if (a.workload == "speaker_count") opt.workload = sim::Workload::speaker_counting_only();
  else if (a.workload != "full") throw ConfigError("unknown workload '" + a.workload + "'");

  sim::SimResult r;
  double speech_h = a.speech_h;
  const auto trace_path = s.pick<std::string>(app.get_option("--trace"), a.trace, "trace", "");
  if (!a.invocations.empty()) {
    if (!(a.duration_s > 0)) throw ConfigError("--invocations needs a positive --duration");
    const auto counts = sim::invocations_from_csv(read_text(a.invocations));
    r = sim::simulate_invocations(counts, a.duration_s, variant, table, params, opt.profile);
    speech_h = 0.0;
  } else {
    audio::SoundTrace trace;
    if (!trace_path.empty()) {
      require_exists(trace_path, "trace");
      trace = audio::read_trace(trace_path);
    } else {
      if (!(a.speech_h >= 0 && a.silence_h >= 0 && a.speech_h + a.silence_h <= 24.0))
        throw ConfigError("speech and silence hours must fit in a day");
      trace = audio::make_day_trace({a.speech_h, a.silence_h, 24.0, 32});
    }
    trace.validate();
    speech_h = trace.seconds_of(audio::SoundClass::speech) / 3600.0;
    r = sim::simulate_day(trace, variant, table, params, opt);
  }

  const fs::path out = s.pick<std::string>(app.get_option("--out"), a.out, "output_dir", "");
  if (!out.empty()) {
    const std::string v(sim::to_string(variant));
    write_text(out / ("ledger_" + v + ".json"), sim::ledger_to_json(r));
    write_text(out / ("lifetime_" + v + ".csv"), sim::lifetime_table_csv({{variant, speech_h, r.lifetime_h}}));
  }
  std::cout << sim::to_string(variant) << " lifetime_h=" << r.lifetime_h << " total_j=" << r.ledger.total_j()
            << " wakeups=" << r.ledger.wakeup_count << '\n';
  return 0;
}

struct SweepArgs {
  std::string hours = "0,1,2,3,4,4.5,5,6,7,8,9,10,11,12,13,14,15,16", variants = "all", out, constants;
  std::string mem_mb = "2,4,6,8,10,12,14,16", savings = "0,0.1,0.2,0.3,0.4";
  double silence_h = 8.0;
};

int cmd_sweep(const Settings& s, const SweepArgs& a, const CLI::App& app) {
  const auto table = power_table(s, app.get_option("--constants"), a.constants);
  const auto params = offload_params(s);
  sim::SimOptions opt;
  opt.profile = profile(s);
  const auto hours = parse_doubles(a.hours, "--hours");
  for (double h : hours)
    if (h < 0 || h > 16 || h + a.silence_h > 24) throw ConfigError("speech hours must lie in [0, 16]");
  const auto rows = sim::sweep_speech_hours(hours, parse_variants(a.variants), table, params, opt, a.silence_h);
  // A memory limit in the config file replaces the default list; --mem-mb wins over both.
  std::string mem_list = a.mem_mb;
  if (app.get_option("--mem-mb")->count() == 0 && s.file.has("offload.mem_limit_mb"))
    mem_list = s.file.get_string("offload.mem_limit_mb", mem_list);
  std::vector<double> mem;
  for (double m : parse_doubles(mem_list, "--mem-mb")) mem.push_back(m * 1024.0 * 1024.0);
  const auto wake = sim::wakeup_time_vs_memory(mem, parse_doubles(a.savings, "--savings"), params);

  const fs::path out = s.pick<std::string>(app.get_option("--out"), a.out, "output_dir", "");
  if (out.empty()) {
    std::cout << sim::lifetime_table_csv(rows);
  } else {
    write_text(out / "lifetime.csv", sim::lifetime_table_csv(rows));
    write_text(out / "wakeup.csv", sim::wakeup_table_csv(wake));
    std::cout << "wrote " << rows.size() << " lifetime rows and " << wake.size() << " wake-up rows to "
              << out.string() << '\n';
  }
  return 0;
}

int cmd_report(const std::string& dir, const std::string& out) {
  const fs::path target = out.empty() ? fs::path(dir) / "report" : fs::path(out);
  const auto r = cli::write_report(dir, target);
  for (const auto& p : r.written) std::cout << "wrote " << p.string() << '\n';
  std::cout << "runs " << r.runs << " simulations " << r.simulations << '\n';
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous audio sensing pipelines with DSP offloading"};
  app.require_subcommand(1);
  std::string config_path;
  std::uint64_t seed_flag = 42;
  app.add_option("--config", config_path, "Config file (default: $DSPEAR_CONFIG)");
  auto* seed_opt = app.add_option("--seed", seed_flag, "Random seed (default 42)");

  TrainArgs ta;
  auto* train = app.add_subcommand("train", "Train models from a corpus directory or synthetic data");
  train->add_option("--corpus", ta.corpus, "Directory laid out as <class>/*.wav");
  train->add_flag("--synthetic", ta.synthetic, "Use the built-in synthetic corpora");
  train->add_option("--spec", ta.spec, "Synthetic corpus spec (key = value)");
  train->add_option("--kind", ta.kind, "all, speech_filter, ambient, speaker or emotion");
  train->add_option("--out", ta.out, "Model bundle directory (merged if present)");
  train->add_option("--ambient-components", ta.ambient_components);
  train->add_option("--speaker-components", ta.speaker_components);
  train->add_option("--emotion-components", ta.emotion_components);

  RunArgs ra;
  auto* run = app.add_subcommand("run", "Run the pipelines over a WAV file");
  run->add_option("audio", ra.audio, "Mono 16-bit PCM WAV")->required()->check(CLI::ExistingFile);
  run->add_option("--models", ra.models, "Model bundle directory");
  run->add_option("--out", ra.out, "Output directory");
  run->add_option("--truth", ra.truth, "Ground-truth trace CSV copied next to the events")->check(CLI::ExistingFile);
  run->add_option("--threads", ra.threads, "1 or 2");
  run->add_option("--disable", ra.disable, "Comma-separated pipelines to switch off");
  run->add_option("--constants", ra.constants, "Power constants file");
  run->add_flag("--naive", ra.naive, "No similarity detectors, neutral gate, gender filter or prior");
  run->add_flag("--resample", ra.resample, "Accept non-8 kHz input");

  SynthArgs ya;
  auto* synth_cmd = app.add_subcommand("synth", "Render a synthetic WAV and its ground-truth trace");
  synth_cmd->add_option("--out", ya.out, "Output directory")->required();
  synth_cmd->add_option("--seconds", ya.seconds);
  synth_cmd->add_option("--kind", ya.kind, "random, conversation or silence");
  synth_cmd->add_option("--speakers", ya.speakers);

  SimulateArgs sa;
  auto* simulate = app.add_subcommand("simulate", "Simulate one day of energy use");
  simulate->add_option("--trace", sa.trace, "Sound trace CSV");
  simulate->add_option("--speech-hours", sa.speech_h, "Speech hours of a generated day (default 4.5)");
  simulate->add_option("--silence-hours", sa.silence_h, "Silence hours of a generated day (default 8)");
  simulate->add_option("--variant", sa.variant, "cpu_only_naive, cpu_only_optimized, dsp_cpu_naive or dsp_cpu_optimized");
  simulate->add_option("--workload", sa.workload, "full or speaker_count");
  simulate->add_option("--invocations", sa.invocations, "Invocation CSV from a run (coupled mode)");
  simulate->add_option("--duration", sa.duration_s, "Audio seconds behind --invocations");
  simulate->add_option("--constants", sa.constants, "Power constants file");
  simulate->add_option("--out", sa.out, "Directory for the ledger and lifetime row");

  SweepArgs wa;
  auto* sweep = app.add_subcommand("sweep", "Lifetime against speech hours and wake-up interval against memory");
  sweep->add_option("--hours", wa.hours, "Comma-separated speech hours");
  sweep->add_option("--variants", wa.variants, "Comma-separated variants or 'all'");
  sweep->add_option("--silence-hours", wa.silence_h);
  sweep->add_option("--mem-mb", wa.mem_mb, "Comma-separated DSP memory limits in MB");
  sweep->add_option("--savings", wa.savings, "Comma-separated similarity savings fractions");
  sweep->add_option("--constants", wa.constants, "Power constants file");
  sweep->add_option("--out", wa.out, "Output directory");

  std::string report_dir, report_out;
  auto* report = app.add_subcommand("report", "Collect outputs into summary tables");
  report->add_option("dir", report_dir, "Directory holding run and simulation outputs")->required();
  report->add_option("--out", report_out, "Destination (default <dir>/report)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    const auto settings = load_settings(config_path);
    const auto seed = settings.pick<std::uint64_t>(seed_opt, seed_flag, "seed", 42);
    if (*train) return cmd_train(settings, ta, seed);
    if (*run) return cmd_run(settings, ra, *run);
    if (*synth_cmd) return cmd_synth(ya, seed);
    if (*simulate) return cmd_simulate(settings, sa, *simulate);
    if (*sweep) return cmd_sweep(settings, wa, *sweep);
    if (*report) return cmd_report(report_dir, report_out);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
