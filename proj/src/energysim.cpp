#include "dspear/energysim.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "dspear/errors.hpp"

namespace dspear::sim {

namespace {

std::size_t idx(Processor p) { return p == Processor::dsp ? 0 : 1; }

constexpr double kMilli = 1e-3;

struct PlatformKey {
  const char* key;
  double PowerTable::*field;
};

constexpr PlatformKey kPlatformKeys[] = {
    {"platform.cpu_wakelock_mw", &PowerTable::cpu_wakelock_mw},
    {"platform.cpu_mic_mw", &PowerTable::cpu_mic_mw},
    {"platform.dsp_mic_mw", &PowerTable::dsp_mic_mw},
    {"platform.cpu_standby_mw", &PowerTable::cpu_standby_mw},
    {"platform.wakeup_power_mw", &PowerTable::wakeup_power_mw},
    {"platform.wakeup_s", &PowerTable::wakeup_s},
    {"platform.idle_tail_s", &PowerTable::idle_tail_s},
    {"platform.battery_mah", &PowerTable::battery_mah},
    {"platform.battery_v", &PowerTable::battery_v},
};

// Accumulates stage energies into the processor-specific ledger fields.
struct Charger {
  const PowerTable& table;
  EnergyLedger& ledger;
  void operator()(const std::string& stage, Processor p, double seconds) const {
    const double j = stage_energy(table, stage, p, seconds);
    (p == Processor::dsp ? ledger.dsp_compute_j : ledger.cpu_compute_j) += j;
  }
};

void charge_base(const PowerTable& t, bool dsp, double duration_s, EnergyLedger& l) {
  if (dsp) {
    l.standby_j += t.cpu_standby_mw * kMilli * duration_s;
    l.mic_j += t.dsp_mic_mw * kMilli * duration_s;
  } else {
    l.cpu_awake_j += t.cpu_wakelock_mw * kMilli * duration_s;
    l.mic_j += t.cpu_mic_mw * kMilli * duration_s;
  }
}

void charge_wakeups(const PowerTable& t, const OptimizationProfile& prof, std::size_t n, double cpu_busy_s,
                    EnergyLedger& l) {
  const double d = prof.already_awake_discount;
  l.cpu_awake_j += d * t.cpu_wakelock_mw * kMilli * cpu_busy_s;
  l.wakeups_j += d * t.wakeup_power_mw * kMilli * t.wakeup_s * static_cast<double>(n);
  l.idle_tail_j += d * t.cpu_wakelock_mw * kMilli * t.idle_tail_s * static_cast<double>(n);
  l.wakeup_count += n;
}

void finish(const OptimizationProfile& prof, EnergyLedger& l) {
  const double f = prof.background_budget_fraction;
  l.background_j = 0.0;
  l.background_j = l.total_j() * f / (1.0 - f);
}

OffloadParams params_for(SystemVariant v, const OffloadParams& p, const OptimizationProfile& prof) {
  OffloadParams q = p;
  q.sim_save_emotion = is_optimized(v) ? prof.sim_save_emotion : 0.0;
  q.sim_save_speaker = is_optimized(v) ? prof.sim_save_speaker : 0.0;
  return q;
}

}  // namespace

std::string_view to_string(Processor p) { return p == Processor::dsp ? "dsp" : "cpu"; }

const std::vector<std::string>& stage_names() {
  static const std::vector<std::string> names = {"silence_filter", "speech_filter", "ambient_features",
                                                 "ambient_gmm",    "speaker_count", "plp",
                                                 "gmm"};
  return names;
}

const StageCost& PowerTable::cost(const std::string& stage, Processor p) const {
  const auto it = stages.find(stage);
  if (it == stages.end()) throw std::invalid_argument("unknown stage '" + stage + "'");
  return it->second[idx(p)];
}

double PowerTable::average_mw(const std::string& stage, Processor p) const {
  const auto& c = cost(stage, p);
  return c.power_mw * c.runtime_ms_per_s * kMilli;
}

void PowerTable::validate() const {
  for (const auto& s : stage_names()) {
    const auto it = stages.find(s);
    if (it == stages.end()) throw ConfigError("power table lacks stage '" + s + "'");
    for (auto p : {Processor::dsp, Processor::cpu}) {
      const auto& c = it->second[idx(p)];
      if (!(c.runtime_ms_per_s > 0.0) || !(c.power_mw > 0.0))
        throw ConfigError("power table entry " + s + "." + std::string(to_string(p)) + " must be positive");
    }
  }
  for (const auto& k : kPlatformKeys)
    if (!(this->*k.field > 0.0)) throw ConfigError(std::string(k.key) + " must be positive");
}

PowerTable PowerTable::defaults() {
  PowerTable t;
  auto set = [&](const char* s, StageCost dsp, StageCost cpu) { t.stages[s] = {dsp, cpu}; };
  set("silence_filter", {45.80, 1.84}, {7.82, 12.23});
  set("speech_filter", {66.42, 2.54}, {11.20, 17.61});
  set("speaker_count", {280, 75}, {185, 1600});
  set("plp", {250, 37}, {102.5, 1600});
  set("gmm", {360, 37}, {30, 1600});
  set("ambient_features", {67, 100}, {6, 1600});
  set("ambient_gmm", {20, 37}, {2, 1600});
  return t;
}

PowerTable PowerTable::from_config(const KvConfig& cfg) {
  std::vector<std::string> allowed;
  for (const auto& k : kPlatformKeys) allowed.emplace_back(k.key);
  for (const auto& s : stage_names())
    for (const char* p : {"dsp", "cpu"})
      for (const char* f : {"runtime_ms_per_s", "power_mw"}) allowed.push_back(s + "." + p + "." + f);
  cfg.require_known(allowed);

  PowerTable t;
  for (const auto& s : stage_names()) {
    auto& entry = t.stages[s];
    for (auto p : {Processor::dsp, Processor::cpu}) {
      const std::string base = s + "." + std::string(to_string(p)) + ".";
      entry[idx(p)] = {cfg.get_double(base + "runtime_ms_per_s"), cfg.get_double(base + "power_mw")};
    }
  }
  for (const auto& k : kPlatformKeys) t.*k.field = cfg.get_double(k.key, t.*k.field);
  t.validate();
  return t;
}

PowerTable PowerTable::load(const std::filesystem::path& path) { return from_config(KvConfig::load(path)); }

std::string PowerTable::to_text() const {
  std::ostringstream os;
  os.precision(17);
  os << "version = " << KvConfig::kVersion << '\n';
  for (const auto& [s, e] : stages)
    for (auto p : {Processor::dsp, Processor::cpu}) {
      os << s << '.' << to_string(p) << ".runtime_ms_per_s = " << e[idx(p)].runtime_ms_per_s << '\n';
      os << s << '.' << to_string(p) << ".power_mw = " << e[idx(p)].power_mw << '\n';
    }
  for (const auto& k : kPlatformKeys) os << k.key << " = " << this->*k.field << '\n';
  return os.str();
}

double stage_energy(const PowerTable& table, const std::string& stage, Processor p, double seconds) {
  if (seconds < 0.0) throw std::invalid_argument("negative duration");
  const auto& c = table.cost(stage, p);
  return c.power_mw * kMilli * (c.runtime_ms_per_s * kMilli) * seconds;
}

void OffloadParams::validate() const {
  if (!(sim_save_emotion >= 0.0 && sim_save_emotion <= 1.0) || !(sim_save_speaker >= 0.0 && sim_save_speaker <= 1.0))
    throw ConfigError("similarity savings must lie in [0, 1]");
  if (mem_static_bytes > mem_limit_bytes) throw ConfigError("static memory exceeds the memory limit");
  if (!(plp_bytes_per_window > 0.0)) throw ConfigError("PLP bytes per window must be positive");
  if (!(tau_s > 0.0)) throw ConfigError("tau must be positive");
  if (gamma_s < 0.0) throw ConfigError("gamma must be non-negative");
}

double buffer_fill_s(const OffloadParams& p) {
  p.validate();
  return (p.mem_limit_bytes - p.mem_static_bytes) / p.plp_bytes_per_window *
         (1.0 + std::min(p.sim_save_emotion, p.sim_save_speaker)) * p.tau_s;
}

double delta_t(const OffloadParams& p) { return p.gamma_s + buffer_fill_s(p); }

std::string_view to_string(SystemVariant v) {
  switch (v) {
    case SystemVariant::cpu_only_naive: return "cpu_only_naive";
    case SystemVariant::cpu_only_optimized: return "cpu_only_optimized";
    case SystemVariant::dsp_cpu_naive: return "dsp_cpu_naive";
    case SystemVariant::dsp_cpu_optimized: return "dsp_cpu_optimized";
  }
  return "?";
}

SystemVariant variant_from_string(std::string_view s) {
  for (auto v : kAllVariants)
    if (to_string(v) == s) return v;
  throw ConfigError("unknown variant '" + std::string(s) + "'");
}

bool uses_dsp(SystemVariant v) {
  return v == SystemVariant::dsp_cpu_naive || v == SystemVariant::dsp_cpu_optimized;
}

bool is_optimized(SystemVariant v) {
  return v == SystemVariant::cpu_only_optimized || v == SystemVariant::dsp_cpu_optimized;
}

void OptimizationProfile::validate() const {
  for (double f : {neutral_fraction, sim_save_ambient, sim_save_speaker, sim_save_emotion, already_awake_discount})
    if (!(f >= 0.0 && f <= 1.0)) throw ConfigError("optimization fractions must lie in [0, 1]");
  if (!(background_budget_fraction >= 0.0 && background_budget_fraction < 1.0))
    throw ConfigError("background budget must lie in [0, 1)");
}

double EnergyLedger::total_j() const {
  double total = 0.0;
  for (const auto& [name, j] : components()) total += j;
  return total;
}

std::map<std::string, double> EnergyLedger::components() const {
  return {{"mic", mic_j},           {"standby", standby_j},         {"cpu_awake", cpu_awake_j},
          {"dsp_compute", dsp_compute_j}, {"cpu_compute", cpu_compute_j}, {"wakeups", wakeups_j},
          {"idle_tail", idle_tail_j}, {"background", background_j}};
}

double lifetime_hours(const PowerTable& table, double joules, double duration_s) {
  if (!(joules > 0.0) || !(duration_s > 0.0)) throw std::invalid_argument("lifetime needs positive energy and time");
  return table.battery_joules() / (joules / duration_s) / 3600.0;
}

SimResult simulate_day(const audio::SoundTrace& trace, SystemVariant variant, const PowerTable& table,
                       const OffloadParams& params, const SimOptions& options) {
  try {
    trace.validate();
  } catch (const DataError& e) {
    throw DataError(std::string("inconsistent trace: ") + e.what());
  }
  if (trace.segments.empty()) throw DataError("inconsistent trace: no segments");
  table.validate();
  const auto& prof = options.profile;
  const auto& wl = options.workload;
  prof.validate();

  const bool dsp = uses_dsp(variant);
  const bool opt = is_optimized(variant);
  const Processor host = dsp ? Processor::dsp : Processor::cpu;
  const double total_s = trace.total_duration_s();
  const double speech_s = trace.seconds_of(audio::SoundClass::speech);
  const double ambient_s = total_s - speech_s - trace.seconds_of(audio::SoundClass::silence);

  SimResult res;
  res.variant = variant;
  auto& l = res.ledger;
  l.duration_s = total_s;
  const Charger charge{table, l};
  charge_base(table, dsp, total_s, l);

  if (wl.admission_filters) {
    charge("silence_filter", host, total_s);
    charge("speech_filter", host, speech_s + ambient_s);
  }
  if (wl.ambient) {
    charge("ambient_features", host, ambient_s);
    const double models = prof.ambient_models * (opt ? 1.0 - prof.sim_save_ambient : 1.0);
    charge("ambient_gmm", host, ambient_s * models);
  }
  if (wl.speaker_count) charge("speaker_count", host, speech_s);
  if (wl.emotion || wl.speaker_id) charge("plp", host, speech_s);

  // GMM evaluations per speech second.
  double gate_models = 0.0, cpu_models = 0.0;
  if (opt) {
    const double se = 1.0 - prof.sim_save_emotion;
    if (wl.emotion) {
      gate_models = se * prof.emotion_gate_models;
      cpu_models += se * (1.0 - prof.neutral_fraction) * prof.emotion_nonneutral_models;
    }
    if (wl.speaker_id) cpu_models += (1.0 - prof.sim_save_speaker) * prof.speaker_models_gender_filtered;
  } else {
    if (wl.emotion) cpu_models += prof.emotion_models_naive;
    if (wl.speaker_id) cpu_models += prof.speaker_models;
  }
  charge("gmm", host, speech_s * gate_models);
  charge("gmm", Processor::cpu, speech_s * cpu_models);

  if (dsp && cpu_models > 0.0) {
    const auto q = params_for(variant, params, prof);
    const double fill = std::max(buffer_fill_s(q), q.tau_s);
    const double bytes_per_s = q.plp_bytes_per_window / q.tau_s;
    double buffered = 0.0, last_wake = 0.0, gamma_sum = 0.0;
    std::size_t wakes = 0, gammas = 0;
    l.buffer_timeline.push_back({0.0, 0.0});
    for (const auto& seg : trace.segments) {
      if (seg.sound != audio::SoundClass::speech) continue;
      double used = 0.0;
      while (buffered + (seg.duration_s - used) >= fill) {
        used += fill - buffered;
        const double t = seg.start_s + used;
        l.buffer_timeline.push_back({t, fill * bytes_per_s});
        l.buffer_timeline.push_back({t, 0.0});
        gamma_sum += (t - last_wake) - fill;
        ++gammas;
        last_wake = t;
        buffered = 0.0;
        ++wakes;
      }
      buffered += seg.duration_s - used;
      l.buffer_timeline.push_back({seg.start_s + seg.duration_s, buffered * bytes_per_s});
    }
    if (buffered > 0.0) {
      ++wakes;  // final flush at the end of the day
      l.buffer_timeline.push_back({total_s, 0.0});
    }
    l.mean_gamma_s = gammas ? gamma_sum / static_cast<double>(gammas) : 0.0;
    const double busy_s = speech_s * cpu_models * table.cost("gmm", Processor::cpu).runtime_ms_per_s * kMilli;
    charge_wakeups(table, prof, wakes, busy_s, l);
  }
  finish(prof, l);
  res.lifetime_h = lifetime_hours(table, l.total_j(), total_s);
  return res;
}

std::vector<LifetimeRow> sweep_speech_hours(const std::vector<double>& hours,
                                            const std::vector<SystemVariant>& variants, const PowerTable& table,
                                            const OffloadParams& params, const SimOptions& options,
                                            double silence_h) {
  std::vector<LifetimeRow> rows;
  for (double h : hours) {
    if (h > 24.0 - silence_h || h < 0.0)
      throw std::invalid_argument("speech hours must lie in [0, " + std::to_string(24.0 - silence_h) + "]");
    const auto trace = audio::make_day_trace({h, silence_h, 24.0, 32});
    for (auto v : variants) rows.push_back({v, h, simulate_day(trace, v, table, params, options).lifetime_h});
  }
  return rows;
}

std::vector<WakeupRow> wakeup_time_vs_memory(const std::vector<double>& mem_limits,
                                             const std::vector<double>& savings, const OffloadParams& base) {
  std::vector<WakeupRow> rows;
  for (double m : mem_limits) {
    if (!(m > 0.0)) throw std::invalid_argument("memory limits must be positive");
    for (double s : savings) {
      OffloadParams p = base;
      p.mem_limit_bytes = m;
      p.sim_save_emotion = s;
      p.sim_save_speaker = s;
      rows.push_back({m, s, delta_t(p)});
    }
  }
  return rows;
}

// ---------------------------------------------------------------------------

const std::vector<InvocationStage>& invocation_stages() {
  static const std::vector<InvocationStage> stages = {
      {"silence_filter", "silence_filter", 1.28}, {"speech_filter", "speech_filter", 1.28},
      {"ambient_features", "ambient_features", 1.28}, {"ambient_gmm", "ambient_gmm", 1.28},
      {"speaker_count", "speaker_count", 3.0},   {"plp", "plp", 5.0},
      {"neutral_gmm", "gmm", 5.0},               {"emotion_gmm", "gmm", 5.0},
      {"speaker_gmm", "gmm", 5.0},               {"crowd_finalize", "", 0.0},
  };
  return stages;
}

std::size_t InvocationCounts::get(const std::string& stage) const {
  const auto it = counts.find(stage);
  return it == counts.end() ? 0 : it->second;
}

void InvocationCounts::add(const std::string& stage, std::size_t n) {
  if (n) counts[stage] += n;
}

void InvocationCounts::merge(const InvocationCounts& other) {
  for (const auto& [k, v] : other.counts) add(k, v);
}

std::string invocations_to_csv(const InvocationCounts& counts, const PowerTable& table) {
  std::ostringstream os;
  os.precision(10);
  os << "stage,count,unit_runtime_ms_dsp,unit_runtime_ms_cpu\n";
  for (const auto& st : invocation_stages()) {
    double dsp_ms = 0.0, cpu_ms = 0.0;
    if (!st.power_stage.empty()) {
      dsp_ms = table.cost(st.power_stage, Processor::dsp).runtime_ms_per_s * st.unit_seconds;
      cpu_ms = table.cost(st.power_stage, Processor::cpu).runtime_ms_per_s * st.unit_seconds;
    }
    os << st.name << ',' << counts.get(st.name) << ',' << dsp_ms << ',' << cpu_ms << '\n';
  }
  return os.str();
}

InvocationCounts invocations_from_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line.rfind("stage,count", 0) != 0) throw DataError("invocation CSV header mismatch");
  InvocationCounts c;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string stage, count;
    if (!std::getline(ls, stage, ',') || !std::getline(ls, count, ','))
      throw DataError("invocation CSV: malformed line '" + line + "'");
    const auto& known = invocation_stages();
    if (std::none_of(known.begin(), known.end(), [&](const InvocationStage& s) { return s.name == stage; }))
      throw DataError("invocation CSV: unknown stage '" + stage + "'");
    try {
      c.add(stage, static_cast<std::size_t>(std::stoull(count)));
    } catch (const std::exception&) {
      throw DataError("invocation CSV: bad count in '" + line + "'");
    }
  }
  return c;
}

SimResult simulate_invocations(const InvocationCounts& counts, double duration_s, SystemVariant variant,
                               const PowerTable& table, const OffloadParams& params,
                               const OptimizationProfile& profile) {
  if (!(duration_s > 0.0)) throw DataError("coupled simulation needs a positive duration");
  table.validate();
  profile.validate();
  const bool dsp = uses_dsp(variant);
  SimResult res;
  res.variant = variant;
  auto& l = res.ledger;
  l.duration_s = duration_s;
  const Charger charge{table, l};
  charge_base(table, dsp, duration_s, l);

  double cpu_busy_s = 0.0;
  for (const auto& st : invocation_stages()) {
    if (st.power_stage.empty()) continue;
    const double seconds = static_cast<double>(counts.get(st.name)) * st.unit_seconds;
    const bool on_cpu = !dsp || st.name == "emotion_gmm" || st.name == "speaker_gmm";
    charge(st.power_stage, on_cpu ? Processor::cpu : Processor::dsp, seconds);
    if (dsp && on_cpu) cpu_busy_s += seconds * table.cost(st.power_stage, Processor::cpu).runtime_ms_per_s * kMilli;
  }
  if (dsp && cpu_busy_s > 0.0) {
    const auto q = params_for(variant, params, profile);
    const double fill = std::max(buffer_fill_s(q), q.tau_s);
    const double speech_s = static_cast<double>(counts.get("plp")) * 5.0;
    const auto wakes = static_cast<std::size_t>(std::ceil(speech_s / fill));
    charge_wakeups(table, profile, wakes, cpu_busy_s, l);
  }
  finish(profile, l);
  res.lifetime_h = lifetime_hours(table, l.total_j(), duration_s);
  return res;
}

// ---------------------------------------------------------------------------

std::string ledger_to_json(const SimResult& r) {
  nlohmann::json j;
  j["variant"] = to_string(r.variant);
  j["lifetime_h"] = r.lifetime_h;
  j["duration_s"] = r.ledger.duration_s;
  j["total_j"] = r.ledger.total_j();
  j["components_j"] = r.ledger.components();
  j["wakeup_count"] = r.ledger.wakeup_count;
  j["mean_gamma_s"] = r.ledger.mean_gamma_s;
  auto tl = nlohmann::json::array();
  for (const auto& b : r.ledger.buffer_timeline) tl.push_back({b.t_s, b.bytes});
  j["buffer_timeline"] = tl;
  return j.dump(2);
}

SimResult ledger_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    SimResult r;
    r.variant = variant_from_string(j.at("variant").get<std::string>());
    r.lifetime_h = j.at("lifetime_h").get<double>();
    auto& l = r.ledger;
    l.duration_s = j.at("duration_s").get<double>();
    const auto& c = j.at("components_j");
    l.mic_j = c.at("mic").get<double>();
    l.standby_j = c.at("standby").get<double>();
    l.cpu_awake_j = c.at("cpu_awake").get<double>();
    l.dsp_compute_j = c.at("dsp_compute").get<double>();
    l.cpu_compute_j = c.at("cpu_compute").get<double>();
    l.wakeups_j = c.at("wakeups").get<double>();
    l.idle_tail_j = c.at("idle_tail").get<double>();
    l.background_j = c.at("background").get<double>();
    l.wakeup_count = j.at("wakeup_count").get<std::size_t>();
    l.mean_gamma_s = j.at("mean_gamma_s").get<double>();
    for (const auto& b : j.at("buffer_timeline")) l.buffer_timeline.push_back({b.at(0).get<double>(), b.at(1).get<double>()});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("ledger JSON: ") + e.what());
  }
}

std::string lifetime_table_csv(const std::vector<LifetimeRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "variant,speech_h,lifetime_h\n";
  for (const auto& r : rows) os << to_string(r.variant) << ',' << r.speech_h << ',' << r.lifetime_h << '\n';
  return os.str();
}

std::vector<LifetimeRow> lifetime_table_from_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "variant,speech_h,lifetime_h") throw DataError("lifetime CSV header mismatch");
  std::vector<LifetimeRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string v, h, life;
    std::getline(ls, v, ',');
    std::getline(ls, h, ',');
    std::getline(ls, life, ',');
    try {
      rows.push_back({variant_from_string(v), std::stod(h), std::stod(life)});
    } catch (const std::exception&) {
      throw DataError("lifetime CSV: malformed line '" + line + "'");
    }
  }
  return rows;
}

std::string wakeup_table_csv(const std::vector<WakeupRow>& rows) {
  std::ostringstream os;
  os.precision(10);
  os << "mem_limit_bytes,savings,delta_t_s,minutes\n";
  for (const auto& r : rows) os << r.mem_limit_bytes << ',' << r.savings << ',' << r.delta_t_s << ',' << r.minutes() << '\n';
  return os.str();
}

std::vector<WakeupRow> wakeup_table_from_csv(std::string_view text) {
  std::istringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line) || line != "mem_limit_bytes,savings,delta_t_s,minutes")
    throw DataError("wakeup CSV header mismatch");
  std::vector<WakeupRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string m, s, d;
    std::getline(ls, m, ',');
    std::getline(ls, s, ',');
    std::getline(ls, d, ',');
    try {
      rows.push_back({std::stod(m), std::stod(s), std::stod(d)});
    } catch (const std::exception&) {
      throw DataError("wakeup CSV: malformed line '" + line + "'");
    }
  }
  return rows;
}

}  // namespace dspear::sim
