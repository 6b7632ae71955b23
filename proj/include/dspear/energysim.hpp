#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "dspear/audio_io.hpp"
#include "dspear/kv_config.hpp"

namespace dspear::sim {

enum class Processor { dsp, cpu };
std::string_view to_string(Processor p);

struct StageCost {
  double runtime_ms_per_s = 0.0;  // processing time per second of audio (or per model for GMM stages)
  double power_mw = 0.0;          // draw while the stage executes
};

// Stage names: silence_filter, speech_filter, ambient_features, ambient_gmm,
// speaker_count, plp, gmm.
const std::vector<std::string>& stage_names();

struct PowerTable {
  std::map<std::string, std::array<StageCost, 2>> stages;  // [dsp, cpu]

  double cpu_wakelock_mw = 295.0;
  double cpu_mic_mw = 47.0;
  double dsp_mic_mw = 4.0;
  double cpu_standby_mw = 30.0;
  double wakeup_power_mw = 383.0;
  double wakeup_s = 3.5;
  double idle_tail_s = 15.0;
  double battery_mah = 2300.0;
  double battery_v = 3.7;

  double cpu_wakelock_mic_mw() const { return cpu_wakelock_mw + cpu_mic_mw; }
  double battery_joules() const { return battery_mah * 3.6 * battery_v; }
  const StageCost& cost(const std::string& stage, Processor p) const;
  // Average draw of a stage that runs continuously on `p`.
  double average_mw(const std::string& stage, Processor p) const;

  // Throws ConfigError on missing stages or non-positive values.
  void validate() const;

  static PowerTable defaults();
  static PowerTable from_config(const KvConfig& cfg);
  static PowerTable load(const std::filesystem::path& path);
  std::string to_text() const;
};

// Joules spent running `stage` on `p` over `seconds` of audio.
double stage_energy(const PowerTable& table, const std::string& stage, Processor p, double seconds);

struct OffloadParams {
  double gamma_s = 0.0;
  double mem_limit_bytes = 8.0 * 1024 * 1024;
  double mem_static_bytes = 1.28 * 1024 * 1024;
  double plp_bytes_per_window = 64.0 * 1024;
  double sim_save_emotion = 0.0;
  double sim_save_speaker = 0.0;
  double tau_s = 5.0;

  void validate() const;
};

// Seconds between two DSP-to-CPU hand-offs.
double delta_t(const OffloadParams& p);
// Speech seconds the DSP can buffer before it must wake the CPU.
double buffer_fill_s(const OffloadParams& p);

enum class SystemVariant { cpu_only_naive, cpu_only_optimized, dsp_cpu_naive, dsp_cpu_optimized };
std::string_view to_string(SystemVariant v);
SystemVariant variant_from_string(std::string_view s);
bool uses_dsp(SystemVariant v);
bool is_optimized(SystemVariant v);
inline constexpr std::array<SystemVariant, 4> kAllVariants = {
    SystemVariant::cpu_only_naive, SystemVariant::cpu_only_optimized, SystemVariant::dsp_cpu_naive,
    SystemVariant::dsp_cpu_optimized};

struct OptimizationProfile {
  double neutral_fraction = 0.6;
  double sim_save_ambient = 0.5;
  double sim_save_speaker = 0.4;
  double sim_save_emotion = 0.2;
  double emotion_gate_models = 2;
  double emotion_nonneutral_models = 8;
  double emotion_models_naive = 14;
  double speaker_models = 22;
  double speaker_models_gender_filtered = 11;
  double ambient_models = 4;
  double already_awake_discount = 0.5;  // share of wake-up energy actually paid
  double background_budget_fraction = 0.0;

  void validate() const;
};

// Which pipelines the simulated day runs.
struct Workload {
  bool admission_filters = true;
  bool ambient = true;
  bool speaker_count = true;
  bool emotion = true;
  bool speaker_id = true;

  static Workload full() { return {}; }
  static Workload speaker_counting_only() { return {false, false, true, false, false}; }
};

struct SimOptions {
  OptimizationProfile profile;
  Workload workload;
};

struct BufferSample {
  double t_s = 0.0;
  double bytes = 0.0;
};

struct EnergyLedger {
  double mic_j = 0.0;
  double standby_j = 0.0;
  double cpu_awake_j = 0.0;  // wake lock held by the CPU
  double dsp_compute_j = 0.0;
  double cpu_compute_j = 0.0;
  double wakeups_j = 0.0;
  double idle_tail_j = 0.0;
  double background_j = 0.0;
  std::size_t wakeup_count = 0;
  double mean_gamma_s = 0.0;
  double duration_s = 0.0;
  std::vector<BufferSample> buffer_timeline;

  double total_j() const;
  std::map<std::string, double> components() const;
};

struct SimResult {
  SystemVariant variant = SystemVariant::dsp_cpu_optimized;
  EnergyLedger ledger;
  double lifetime_h = 0.0;
};

double lifetime_hours(const PowerTable& table, double joules, double duration_s);

// Analytic mode: the trace classes are taken as ground truth.
SimResult simulate_day(const audio::SoundTrace& trace, SystemVariant variant, const PowerTable& table,
                       const OffloadParams& params, const SimOptions& options = {});

struct LifetimeRow {
  SystemVariant variant;
  double speech_h;
  double lifetime_h;
};

// Silence is fixed at `silence_h`; throws std::invalid_argument above 16 h of speech.
std::vector<LifetimeRow> sweep_speech_hours(const std::vector<double>& hours,
                                            const std::vector<SystemVariant>& variants, const PowerTable& table,
                                            const OffloadParams& params, const SimOptions& options = {},
                                            double silence_h = 8.0);

struct WakeupRow {
  double mem_limit_bytes;
  double savings;
  double delta_t_s;
  double minutes() const { return delta_t_s / 60.0; }
};

// Both savings fractions set to each value of `savings`.
std::vector<WakeupRow> wakeup_time_vs_memory(const std::vector<double>& mem_limits,
                                             const std::vector<double>& savings, const OffloadParams& base = {});

// ---------------------------------------------------------------------------
// Coupled mode: invocation counts recorded by an orchestrator run.

struct InvocationStage {
  std::string name;
  std::string power_stage;  // PowerTable key, empty when free
  double unit_seconds;      // audio seconds per invocation
};

// silence_filter, speech_filter, ambient_features, ambient_gmm, speaker_count,
// plp, neutral_gmm, emotion_gmm, speaker_gmm, crowd_finalize.
const std::vector<InvocationStage>& invocation_stages();

struct InvocationCounts {
  std::map<std::string, std::size_t> counts;

  std::size_t get(const std::string& stage) const;
  void add(const std::string& stage, std::size_t n = 1);
  void merge(const InvocationCounts& other);
  bool operator==(const InvocationCounts&) const = default;
};

std::string invocations_to_csv(const InvocationCounts& counts, const PowerTable& table);
InvocationCounts invocations_from_csv(std::string_view text);

SimResult simulate_invocations(const InvocationCounts& counts, double duration_s, SystemVariant variant,
                               const PowerTable& table, const OffloadParams& params,
                               const OptimizationProfile& profile = {});

// ---------------------------------------------------------------------------

std::string ledger_to_json(const SimResult& r);
SimResult ledger_from_json(std::string_view text);
std::string lifetime_table_csv(const std::vector<LifetimeRow>& rows);
std::vector<LifetimeRow> lifetime_table_from_csv(std::string_view text);
std::string wakeup_table_csv(const std::vector<WakeupRow>& rows);
std::vector<WakeupRow> wakeup_table_from_csv(std::string_view text);

}  // namespace dspear::sim
