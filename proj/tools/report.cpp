#include "report.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "dspear/audio_io.hpp"
#include "dspear/energysim.hpp"
#include "dspear/errors.hpp"
#include "dspear/orchestrator.hpp"
#include "dspear/pipelines.hpp"

namespace fs = std::filesystem;

namespace dspear::cli {

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw DataError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void dump(const fs::path& p, const std::string& text, ReportSummary& summary) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw DataError("cannot write " + p.string());
  out << text;
  summary.written.push_back(p);
}

bool starts_with(const std::string& s, std::string_view prefix) { return s.rfind(prefix, 0) == 0; }

// Truth for the event's midpoint, or null when outside the trace.
const audio::TraceSegment* truth_at(const audio::SoundTrace& trace, double t) {
  for (const auto& s : trace.segments)
    if (t >= s.start_s && t < s.start_s + s.duration_s) return &s;
  return nullptr;
}

std::string truth_speaker(const audio::TraceSegment& s) { return s.label.substr(0, s.label.find('/')); }

std::string truth_broad_emotion(const audio::TraceSegment& s) {
  const auto slash = s.label.find('/');
  if (slash == std::string::npos) return {};
  return std::string(pipelines::broad_of(s.label.substr(slash + 1)));
}

std::string branch_of(pipelines::EventKind k) {
  switch (k) {
    case pipelines::EventKind::silence: return "silence";
    case pipelines::EventKind::ambient: return "ambient";
    default: return "speech";
  }
}

std::string truth_branch(const audio::TraceSegment& s) {
  if (s.sound == audio::SoundClass::silence) return "silence";
  return s.sound == audio::SoundClass::speech ? "speech" : "ambient";
}

using Confusion = std::map<std::tuple<std::string, std::string, std::string>, std::size_t>;

struct Tally {
  std::size_t correct = 0;
  std::size_t total = 0;
};

struct RunTables {
  Confusion confusion[4];  // branch, ambient, speaker, emotion
  std::map<std::string, Tally> accuracy;
};

constexpr const char* kConfusionNames[] = {"branch", "ambient", "speaker", "emotion"};

void score_run(const std::string& run, const std::vector<pipelines::InferenceEvent>& events,
               const audio::SoundTrace& trace, RunTables& tables) {
  auto add = [&](int which, const std::string& detector, const std::string& truth, const std::string& pred) {
    if (truth.empty()) return;
    ++tables.confusion[which][{run, truth, pred}];
    if (detector.empty()) return;
    auto& t = tables.accuracy[run + '\n' + detector];
    ++t.total;
    if (truth == pred) ++t.correct;
  };
  for (const auto& e : events) {
    if (e.provenance == pipelines::Provenance::gated_out) continue;
    const auto* seg = truth_at(trace, 0.5 * (e.t_start + e.t_end));
    if (!seg) continue;
    if (e.kind != pipelines::EventKind::gender && e.kind != pipelines::EventKind::speaker_count)
      add(0, "", truth_branch(*seg), branch_of(e.kind));
    switch (e.kind) {
      case pipelines::EventKind::ambient:
        if (audio::is_ambient(seg->sound)) add(1, "ambient", std::string(audio::to_string(seg->sound)), e.label);
        break;
      case pipelines::EventKind::speaker:
        if (seg->sound == audio::SoundClass::speech) add(2, "speaker", truth_speaker(*seg), e.label);
        break;
      case pipelines::EventKind::emotion:
        if (seg->sound == audio::SoundClass::speech) add(3, "emotion", truth_broad_emotion(*seg), e.label);
        break;
      default:
        break;
    }
  }
}

std::string confusion_csv(const Confusion& c) {
  std::ostringstream os;
  os << "run,truth,predicted,count\n";
  for (const auto& [k, n] : c) os << std::get<0>(k) << ',' << std::get<1>(k) << ',' << std::get<2>(k) << ',' << n << '\n';
  return os.str();
}

}  // namespace

ReportSummary write_report(const fs::path& dir, const fs::path& out) {
  if (!fs::is_directory(dir)) throw DataError("not a directory: " + dir.string());
  const auto out_abs = fs::weakly_canonical(out);

  std::vector<fs::path> files;
  for (auto it = fs::recursive_directory_iterator(dir); it != fs::recursive_directory_iterator(); ++it) {
    if (it->is_directory() && fs::weakly_canonical(it->path()) == out_abs) {
      it.disable_recursion_pending();
      continue;
    }
    if (it->is_regular_file()) files.push_back(it->path());
  }
  std::sort(files.begin(), files.end());

  ReportSummary summary;
  std::set<std::tuple<std::string, double, double>> lifetime;
  std::set<std::tuple<double, double, double>> wakeup;
  std::ostringstream ledgers;
  ledgers.precision(10);
  ledgers << "file,variant,total_j,lifetime_h,wakeups,mean_gamma_s\n";
  std::ostringstream savings;
  savings.precision(10);
  savings << "run,detector,propagated,classified,saved_fraction,accuracy\n";
  RunTables tables;
  std::vector<std::pair<std::string, std::vector<pipelines::GateStatsRow>>> gate_rows;

  for (const auto& f : files) {
    const auto name = f.filename().string();
    const auto rel = fs::relative(f, dir).string();
    if (starts_with(name, "lifetime") && f.extension() == ".csv") {
      for (const auto& r : sim::lifetime_table_from_csv(slurp(f)))
        lifetime.emplace(std::string(sim::to_string(r.variant)), r.speech_h, r.lifetime_h);
      ++summary.simulations;
    } else if (starts_with(name, "wakeup") && f.extension() == ".csv") {
      for (const auto& r : sim::wakeup_table_from_csv(slurp(f))) wakeup.emplace(r.mem_limit_bytes, r.savings, r.delta_t_s);
    } else if (starts_with(name, "ledger") && f.extension() == ".json") {
      const auto r = sim::ledger_from_json(slurp(f));
      ledgers << rel << ',' << sim::to_string(r.variant) << ',' << r.ledger.total_j() << ',' << r.lifetime_h << ','
              << r.ledger.wakeup_count << ',' << r.ledger.mean_gamma_s << '\n';
    } else if (name == "events.jsonl") {
      const auto run_dir = f.parent_path();
      const auto run = fs::relative(run_dir, dir).string();
      const auto events = pipelines::events_from_jsonl(slurp(f));
      if (fs::exists(run_dir / "invocations.csv")) (void)sim::invocations_from_csv(slurp(run_dir / "invocations.csv"));
      if (fs::exists(run_dir / "truth.csv")) score_run(run, events, audio::trace_from_csv(slurp(run_dir / "truth.csv")), tables);
      if (fs::exists(run_dir / "gate_stats.csv"))
        gate_rows.emplace_back(run, pipelines::gate_stats_from_csv(slurp(run_dir / "gate_stats.csv")));
      ++summary.runs;
    }
  }
  if (summary.runs == 0 && summary.simulations == 0 && wakeup.empty())
    throw DataError("no run or simulation outputs under " + dir.string());

  fs::create_directories(out);
  if (!lifetime.empty()) {
    std::vector<sim::LifetimeRow> rows;
    for (const auto& [v, h, l] : lifetime) rows.push_back({sim::variant_from_string(v), h, l});
    dump(out / "lifetime_vs_speech.csv", sim::lifetime_table_csv(rows), summary);
  }
  if (!wakeup.empty()) {
    std::vector<sim::WakeupRow> rows;
    for (const auto& [m, s, d] : wakeup) rows.push_back({m, s, d});
    dump(out / "wakeup_vs_memory.csv", sim::wakeup_table_csv(rows), summary);
  }
  if (ledgers.str().find('\n') + 1 < ledgers.str().size()) dump(out / "ledgers.csv", ledgers.str(), summary);
  if (summary.runs > 0) {
    for (const auto& [run, rows] : gate_rows)
      for (const auto& r : rows) {
        savings << run << ',' << r.detector << ',' << r.propagated << ',' << r.classified << ',' << r.saved_fraction()
                << ',';
        if (const auto it = tables.accuracy.find(run + '\n' + r.detector); it != tables.accuracy.end() && it->second.total)
          savings << static_cast<double>(it->second.correct) / static_cast<double>(it->second.total);
        savings << '\n';
      }
    dump(out / "savings_vs_accuracy.csv", savings.str(), summary);
    for (int i = 0; i < 4; ++i)
      if (!tables.confusion[i].empty())
        dump(out / ("confusion_" + std::string(kConfusionNames[i]) + ".csv"), confusion_csv(tables.confusion[i]), summary);
  }
  return summary;
}

}  // namespace dspear::cli
