// Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include "dspear/corpus.hpp"
#include "dspear/energysim.hpp"
#include "dspear/orchestrator.hpp"
#include "dspear/spectral.hpp"
#include "oracles.hpp"

using namespace dspear;
using clk = std::chrono::steady_clock;

namespace {

int failures = 0;

double since(clk::time_point t) { return std::chrono::duration<double>(clk::now() - t).count(); }

void report(int n, bool ok, const std::string& detail) {
  std::printf("criterion %d: %s  %s\n", n, ok ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---------------------------------------------------------------------------

void criterion1() {
  sim::OffloadParams p;
  const double plain = sim::delta_t(p);
  p.sim_save_emotion = p.sim_save_speaker = 0.4;
  const double saved = sim::delta_t(p);
  const bool ok = std::abs(plain - 540.0) <= 60.0 && std::abs(saved - 780.0) <= 90.0;
  report(1, ok, fmt("dt(8MB,0%%) = %.1f s [480, 600]; dt(8MB,40%%) = %.1f s [690, 870]", plain, saved));
}

void criterion2() {
  const auto t = sim::PowerTable::defaults();
  sim::SimOptions opt;
  opt.workload = sim::Workload::speaker_counting_only();
  const auto day = audio::make_day_trace({24.0, 0.0, 24.0, 1});
  const double cpu = sim::simulate_day(day, sim::SystemVariant::cpu_only_naive, t, {}, opt).lifetime_h;
  const double dsp = sim::simulate_day(day, sim::SystemVariant::dsp_cpu_naive, t, {}, opt).lifetime_h;
  const bool ok = cpu >= 13 && cpu <= 14 && dsp >= 150 && dsp <= 160;
  report(2, ok, fmt("speaker counting: cpu %.2f h [13, 14]; dsp %.2f h [150, 160]", cpu, dsp));
}

double lifetime(sim::SystemVariant v, double speech_h) {
  static const auto t = sim::PowerTable::defaults();
  return sim::simulate_day(audio::make_day_trace({speech_h, 8.0, 24.0, 32}), v, t, {}).lifetime_h;
}

void criterion3() {
  const auto t0 = clk::now();
  using V = sim::SystemVariant;
  const double opt45 = lifetime(V::dsp_cpu_optimized, 4.5);
  const double drop_dsp = 1.0 - lifetime(V::dsp_cpu_optimized, 12) / opt45;
  const double drop_cpu = 1.0 - lifetime(V::cpu_only_optimized, 12) / lifetime(V::cpu_only_optimized, 4.5);

  // Crossover of dsp_cpu_naive below cpu_only_optimized on a 0.05 h grid.
  std::vector<double> hours;
  for (int i = 0; i <= 320; ++i) hours.push_back(0.05 * i);
  const auto rows = sim::sweep_speech_hours(hours, {V::dsp_cpu_naive, V::cpu_only_optimized},
                                            sim::PowerTable::defaults(), {});
  std::map<double, std::pair<double, double>> by_h;
  for (const auto& r : rows) (r.variant == V::dsp_cpu_naive ? by_h[r.speech_h].first : by_h[r.speech_h].second) = r.lifetime_h;
  double cross = -1, prev_h = 0, prev_d = 0;
  bool first = true;
  for (const auto& [h, lv] : by_h) {
    const double d = lv.first - lv.second;
    if (!first && prev_d > 0 && d <= 0) {
      cross = prev_h + (h - prev_h) * prev_d / (prev_d - d);
      break;
    }
    prev_h = h;
    prev_d = d;
    first = false;
  }
  const double secs = since(t0);
  const bool ok = std::abs(opt45 / 60.0 - 1.0) <= 0.15 && std::abs(drop_dsp - 0.58) <= 0.08 &&
                  std::abs(drop_cpu - 0.41) <= 0.08 && cross > 0 && std::abs(cross - 8.0) <= 1.5 && secs < 60;
  report(3, ok,
         fmt("dsp_opt@4.5h %.2f h [51, 69]; drop 4.5->12h dsp %.1f%% [50, 66], cpu_opt %.1f%% [33, 49]; "
             "crossover %.2f h [6.5, 9.5]; sweep %.2f s",
             opt45, 100 * drop_dsp, 100 * drop_cpu, cross, secs));
}

void criterion4() {
  using V = sim::SystemVariant;
  const double opt = lifetime(V::dsp_cpu_optimized, 4.5);
  const double r_naive = opt / lifetime(V::dsp_cpu_naive, 4.5);
  const double r_cpu_opt = opt / lifetime(V::cpu_only_optimized, 4.5);
  const double r_cpu_naive = opt / lifetime(V::cpu_only_naive, 4.5);
  const bool ok = r_naive >= 2 && r_naive <= 3 && r_cpu_opt >= 3 && r_cpu_opt <= 7 && r_cpu_naive >= 3 && r_cpu_naive <= 7;
  report(4, ok,
         fmt("opt/naive dsp %.2f [2, 3]; opt dsp / cpu_only_optimized %.2f, / cpu_only_naive %.2f [3, 7]", r_naive,
             r_cpu_opt, r_cpu_naive));
}

// ---------------------------------------------------------------------------

struct Trained {
  models::ModelBundle bundle;
  corpus::SyntheticSpec spec;
};

void criterion5(Trained& tr) {
  const auto t0 = clk::now();
  const corpus::TrainOptions opt;
  corpus::add_to_bundle(tr.bundle, corpus::train_speech_filter(corpus::synthetic_speech_filter_corpus(tr.spec), opt));
  corpus::add_to_bundle(tr.bundle, corpus::train_speakers(corpus::synthetic_speaker_corpus(tr.spec), opt));

  // Speech filter on held-out voices and ambient renders.
  std::size_t f_ok = 0, f_n = 0;
  const auto tree = tr.bundle.tree("speech_filter");
  for (const auto& v : synth::make_speakers(6, 777, "held")) {
    for (const auto& w : corpus::ambient_windows(synth::render_speech(v, 12.8, 31))) {
      f_ok += gate::speech_gate(w.filter_vector, tree) == gate::Branch::speech;
      ++f_n;
    }
  }
  std::uint64_t seed = 900;
  for (auto cls : pipelines::kAmbientClasses) {
    for (const auto& w : corpus::ambient_windows(synth::render_ambient(audio::sound_class_from_string(cls), 19.2, seed++))) {
      f_ok += gate::speech_gate(w.filter_vector, tree) == gate::Branch::ambient;
      ++f_n;
    }
  }
  const double filter_acc = static_cast<double>(f_ok) / static_cast<double>(f_n);

  // Speaker identification on held-out speech of the six training voices.
  std::size_t s_ok = 0, s_n = 0;
  const auto voices = corpus::synthetic_voices(tr.spec);
  for (std::size_t i = 0; i < voices.size(); ++i) {
    const auto x = synth::render_speech(voices[i], 15.5, 5000 + i);
    const auto wins = corpus::plp_windows(x);
    for (std::size_t k = 0; k < wins.size(); ++k) {
      const std::span<const double> head(x.data() + k * 40000, 24000);
      const auto cw = audio::make_window(audio::WindowKind::speaker_count, head, 0);
      const auto g = pipelines::gender_estimate(features::mean_pitch(cw));
      const auto r = pipelines::speaker_identify(wins[k], tr.bundle, nullptr, g);
      s_ok += r.speaker == voices[i].id;
      ++s_n;
    }
  }
  const double spk_acc = static_cast<double>(s_ok) / static_cast<double>(s_n);

  // Average error in speaker count over 1-6 speaker conversations.
  pipelines::OrchestratorConfig cfg;
  cfg.enabled = {false, true, false, false};
  const auto pool = synth::make_speakers(6, 4242, "c");
  double aecd = 0;
  int convs = 0;
  std::ostringstream counts;
  for (std::size_t k = 1; k <= 6; ++k) {
    const std::vector<synth::VoiceSpec> who(pool.begin(), pool.begin() + static_cast<long>(k));
    for (int rep = 0; rep < 3; ++rep) {
      const auto trace = synth::make_conversation_trace(who, 120, 100 * k + rep, 4.0, 15.0);
      const auto r = pipelines::orchestrate(synth::render_trace(trace, pool, 7 * k + rep), tr.bundle, cfg);
      int est = 0;
      for (const auto& e : r.events)
        if (e.kind == pipelines::EventKind::speaker_count) est = e.count;
      aecd += std::abs(est - static_cast<int>(k));
      ++convs;
      counts << (rep ? "," : " ") << est;
    }
  }
  aecd /= convs;

  // Neutral gate on two-cluster valence data: train on 40 windows per class, test on 100.
  const auto windows = corpus::valence_clusters(140, 498, 1.5, 7);
  Matrix pooled, neutral, filler;
  std::size_t used_n = 0, used_f = 0;
  std::vector<const corpus::ValenceWindow*> test;
  for (const auto& w : windows) {
    auto& used = w.neutral ? used_n : used_f;
    if (used < 40) {
      ++used;
      for (std::size_t r = 0; r < w.frames.rows(); ++r) {
        pooled.append_row(w.frames.row(r));
        (w.neutral ? neutral : filler).append_row(w.frames.row(r));
      }
    } else {
      test.push_back(&w);
    }
  }
  const auto bg = models::gmm_train_em(pooled, 32, 42, {40, 1e-4, 1e-4}).model;
  const auto gn = models::gmm_map_adapt(bg, neutral, 16), gf = models::gmm_map_adapt(bg, filler, 16);
  std::size_t tp = 0, tn = 0, np = 0, nn = 0;
  for (const auto* w : test) {
    const bool says_neutral = gate::neutral_gate(w->frames, gn, gf).valence == gate::Valence::neutral;
    if (w->neutral) {
      ++np;
      tp += says_neutral;
    } else {
      ++nn;
      tn += !says_neutral;
    }
  }
  const double balanced = 0.5 * (static_cast<double>(tp) / np + static_cast<double>(tn) / nn);

  const double secs = since(t0);
  const bool ok = filter_acc >= 0.90 && spk_acc >= 0.90 && aecd <= 1.5 && balanced >= 0.75 && secs < 300;
  report(5, ok,
         fmt("speech filter %.1f%% (n=%zu) [>=90]; speaker id %.1f%% (n=%zu) [>=90]; AECD %.2f [<=1.5] "
             "(estimates%s); neutral gate balanced %.1f%% [>=75]; %.0f s incl. training [<300]",
             100 * filter_acc, f_n, 100 * spk_acc, s_n, aecd, counts.str().c_str(), 100 * balanced, secs));
}

// ---------------------------------------------------------------------------

void criterion6() {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> g;

  double fft_err = 0, dct_err = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<features::Complex> x(256);
    for (auto& v : x) v = {g(rng), g(rng)};
    auto fast = x;
    features::fft_inplace(fast);
    const auto slow = oracle::dft(x);
    for (std::size_t k = 0; k < x.size(); ++k) fft_err = std::max(fft_err, std::abs(fast[k] - slow[k]));
    std::vector<double> y(24);
    for (auto& v : y) v = g(rng);
    const auto d = features::Dct(24, 20)(y);
    const auto ds = oracle::dct2(y, 20);
    for (std::size_t k = 0; k < 20; ++k) dct_err = std::max(dct_err, std::abs(d[k] - ds[k]));
  }

  double yin_err = 0;
  for (double f = 80; f <= 400; f += 5) {
    std::vector<double> frame(256);
    for (std::size_t i = 0; i < frame.size(); ++i) frame[i] = 0.5 * std::sin(2 * std::numbers::pi * f * i / 8000.0);
    const auto p = features::yin_pitch(frame);
    yin_err = std::max(yin_err, p ? std::abs(*p - f) / f : 1.0);
  }

  double ll_err = 0;
  std::uniform_int_distribution<int> kd(1, 5), nd(1, 20), dd(1, 8);
  std::uniform_real_distribution<double> u(0.2, 1.5);
  for (int trial = 0; trial < 200; ++trial) {
    const auto k = static_cast<std::size_t>(kd(rng)), dim = static_cast<std::size_t>(dd(rng));
    models::GmmModel m;
    m.weights.resize(k);
    double s = 0;
    for (auto& w : m.weights) s += (w = u(rng));
    for (auto& w : m.weights) w /= s;
    m.means = Matrix(k, dim);
    m.variances = Matrix(k, dim);
    for (auto& v : m.means.data()) v = g(rng);
    for (auto& v : m.variances.data()) v = u(rng);
    oracle::Gmm o{m.weights, {}, {}};
    for (std::size_t c = 0; c < k; ++c) {
      o.means.emplace_back(m.means.row(c).begin(), m.means.row(c).end());
      o.variances.emplace_back(m.variances.row(c).begin(), m.variances.row(c).end());
    }
    Matrix x(static_cast<std::size_t>(nd(rng)), dim);
    std::vector<std::vector<double>> xs;
    for (std::size_t r = 0; r < x.rows(); ++r) {
      for (std::size_t d = 0; d < dim; ++d) x(r, d) = 1.5 * g(rng);
      xs.emplace_back(x.row(r).begin(), x.row(r).end());
    }
    ll_err = std::max(ll_err, std::abs(models::gmm_loglik(m, x) - oracle::gmm_loglik(o, xs)));
  }

  int monotone = 0;
  for (int trial = 0; trial < 50; ++trial) {
    const std::size_t dim = 1 + trial % 5, k = 1 + trial % 4;
    Matrix x(300, dim);
    std::vector<std::vector<double>> centres(k, std::vector<double>(dim));
    for (auto& c : centres)
      for (auto& v : c) v = 3 * g(rng);
    for (std::size_t r = 0; r < x.rows(); ++r)
      for (std::size_t d = 0; d < dim; ++d) x(r, d) = centres[r % k][d] + g(rng);
    const auto res = models::gmm_train_em(x, k, 100 + trial);
    bool ok = true;
    for (std::size_t i = 1; i < res.loglik_history.size(); ++i)
      ok = ok && res.loglik_history[i] >= res.loglik_history[i - 1] - 1e-9 * std::abs(res.loglik_history[i - 1]);
    monotone += ok;
  }

  const bool ok = fft_err < 1e-6 && dct_err < 1e-6 && yin_err < 0.02 && ll_err < 1e-8 && monotone == 50;
  report(6, ok,
         fmt("fft %.1e, dct %.1e [<1e-6]; yin max rel err %.3f%% [<2%%]; gmm_loglik %.1e [<1e-8]; EM monotone %d/50",
             fft_err, dct_err, 100 * yin_err, ll_err, monotone));
}

// ---------------------------------------------------------------------------

struct AmbientWindow {
  corpus::AmbientWindowFeatures f;
  std::string label;
};

std::pair<double, double> ambient_run(const std::vector<AmbientWindow>& ws, const models::ModelBundle& b, double thr) {
  gate::SimilarityDetector d("ambient", std::max(thr, 0.0));
  std::size_t ok = 0;
  for (const auto& w : ws)
    ok += pipelines::ambient_classify(w.f.fingerprint, w.f.observations, b, thr >= 0 ? &d : nullptr).label == w.label;
  return {d.stats().saved_fraction(), static_cast<double>(ok) / static_cast<double>(ws.size())};
}

void criterion7(Trained& tr) {
  corpus::add_to_bundle(tr.bundle, corpus::train_ambient(corpus::synthetic_ambient_corpus(tr.spec), {}));

  // Episodic ambient stream: runs of 3-22 windows of one class.
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<AmbientWindow> ws;
  for (int e = 0; e < 40; ++e) {
    const auto cls = pipelines::kAmbientClasses[static_cast<std::size_t>(u(rng) * 4) % 4];
    const double secs = 1.28 * (3 + static_cast<int>(u(rng) * 20));
    const auto x = synth::render_ambient(audio::sound_class_from_string(cls), secs, 1000 + e);
    for (auto& f : corpus::ambient_windows(x)) ws.push_back({std::move(f), std::string(cls)});
  }

  const double base_acc = ambient_run(ws, tr.bundle, -1).second;
  bool monotone = true;
  double prev = -1;
  std::ostringstream sweep;
  for (double thr : {0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 10.0, 20.0, 40.0}) {
    const auto [saved, acc] = ambient_run(ws, tr.bundle, thr);
    monotone = monotone && saved >= prev;
    prev = saved;
    sweep << fmt(" %g:%.2f/%.2f", thr, saved, acc);
  }
  // Smallest threshold reaching half the classifications saved.
  double lo = 0, hi = 40;
  for (int i = 0; i < 30; ++i) {
    const double mid = 0.5 * (lo + hi);
    (ambient_run(ws, tr.bundle, mid).first >= 0.5 ? hi : lo) = mid;
  }
  const auto [saved50, acc50] = ambient_run(ws, tr.bundle, hi);
  const double loss = 100 * (base_acc - acc50);
  const bool ok = monotone && saved50 >= 0.5 && loss <= 6.0;
  report(7, ok,
         fmt("%zu windows; saved fraction monotone: %s; at %.2f deg saved %.1f%%, accuracy %.1f%% vs %.1f%% "
             "without the detector, loss %.1f points [<=6]; sweep thr:saved/acc%s",
             ws.size(), monotone ? "yes" : "no", hi, 100 * saved50, 100 * acc50, 100 * base_acc, loss,
             sweep.str().c_str()));
}

// ---------------------------------------------------------------------------

std::vector<std::pair<double, double>> merged(std::vector<std::pair<double, double>> iv) {
  std::sort(iv.begin(), iv.end());
  std::vector<std::pair<double, double>> out;
  for (const auto& p : iv) {
    if (!out.empty() && p.first <= out.back().second + 1e-9) out.back().second = std::max(out.back().second, p.second);
    else out.push_back(p);
  }
  return out;
}

struct Check8 {
  bool exclusive = true, gated = true, counts = true, finalize = true, threads = true;
  std::size_t windows = 0, non_neutral = 0, conversations = 0;
};

void check_stream(const pipelines::RunResult& a, const pipelines::RunResult& b, Check8& c) {
  using pipelines::EventKind;
  using pipelines::Provenance;
  // Silence and ambient spans are disjoint; what they leave is audio with the speech verdict.
  std::vector<std::pair<double, double>> claimed;
  for (const auto& e : a.events)
    if (e.kind == EventKind::silence || e.kind == EventKind::ambient) claimed.emplace_back(e.t_start, e.t_end);
  std::sort(claimed.begin(), claimed.end());
  for (std::size_t i = 1; i < claimed.size(); ++i)
    if (claimed[i].first < claimed[i - 1].second - 1e-9) c.exclusive = false;
  const auto cl = merged(claimed);
  std::vector<std::pair<double, double>> speech;
  double at = 0;
  for (const auto& [s, t] : cl) {
    if (s > at + 1e-9) speech.emplace_back(at, s);
    at = std::max(at, t);
  }
  if (a.duration_s > at + 1e-9) speech.emplace_back(at, a.duration_s);
  auto speech_in = [&](double s, double t) {
    double sum = 0;
    for (const auto& [x, y] : speech) sum += std::max(0.0, std::min(t, y) - std::max(s, x));
    return sum;
  };

  std::size_t classified_emotion = 0, non_neutral = 0;
  for (const auto& e : a.events) {
    if (e.provenance == Provenance::gated_out) continue;
    if ((e.kind == EventKind::emotion || e.kind == EventKind::speaker) && speech_in(e.t_start, e.t_end) < 5.0 - 1e-3)
      c.gated = false;
    if (e.kind == EventKind::gender && speech_in(e.t_start, e.t_end) < 3.0 - 1e-3) c.gated = false;
    if (e.kind == EventKind::emotion && e.provenance == Provenance::classified) {
      ++classified_emotion;
      non_neutral += e.label != "neutral";
    }
  }
  if (a.invocations.get("neutral_gmm") != 2 * classified_emotion || a.invocations.get("emotion_gmm") != 8 * non_neutral)
    c.counts = false;
  c.windows += classified_emotion;
  c.non_neutral += non_neutral;

  // A conversation ends once 60 s pass without speech; each is finalized exactly once.
  std::size_t convs = 0;
  double last_end = -1e18;
  for (const auto& [s, t] : speech) {
    if (s - last_end >= 60.0 - 1e-9) ++convs;
    last_end = t;
  }
  std::size_t count_events = 0;
  for (const auto& e : a.events) count_events += e.kind == EventKind::speaker_count;
  if (a.invocations.get("crowd_finalize") != convs || count_events != convs) c.finalize = false;
  c.conversations += convs;

  auto ea = a.events, eb = b.events;
  std::sort(ea.begin(), ea.end());
  std::sort(eb.begin(), eb.end());
  if (ea != eb || !(a.invocations == b.invocations) || a.gate_stats != b.gate_stats) c.threads = false;
}

void criterion8(Trained& tr) {
  const auto t0 = clk::now();
  corpus::SyntheticSpec emo = tr.spec;
  emo.emotion_voices = 2;
  emo.emotion_seconds = 6;
  corpus::TrainOptions eopt;
  eopt.emotion_components = 16;
  corpus::add_to_bundle(tr.bundle, corpus::train_emotions(corpus::synthetic_emotion_corpus(emo), eopt));

  pipelines::OrchestratorConfig one;
  auto two = one;
  two.two_threads = true;
  Check8 c;
  const auto pool = synth::make_speakers(6, tr.spec.seed);
  const auto styles = pipelines::non_neutral_emotions();
  for (std::uint64_t s = 0; s < 10; ++s) {
    // Every other speech segment carries a non-neutral emotion style.
    auto trace = synth::make_random_trace(pool, 240, 100 + s);
    std::size_t nth = 0;
    for (auto& seg : trace.segments)
      if (seg.sound == audio::SoundClass::speech && nth++ % 2 == 1)
        seg.label += "/" + styles[(s + nth) % styles.size()];
    const auto stream = synth::render_trace(trace, pool, 200 + s);
    check_stream(pipelines::orchestrate(stream, tr.bundle, one), pipelines::orchestrate(stream, tr.bundle, two), c);
  }
  // Speech followed by 61 s of silence.
  audio::AudioStream s;
  s.samples = synth::render_speech(pool[0], 12, 3);
  const auto quiet = synth::render_silence(61, 4);
  s.samples.insert(s.samples.end(), quiet.begin(), quiet.end());
  const auto r = pipelines::orchestrate(s, tr.bundle, one);
  const bool single = r.invocations.get("crowd_finalize") == 1;

  const bool ok = c.exclusive && c.gated && c.counts && c.finalize && c.threads && single && c.non_neutral > 0;
  report(8, ok,
         fmt("10 streams x 240 s: exclusive %s; speech-gated %s; %zu emotion windows (%zu non-neutral) at 2+8 "
             "evaluations %s; %zu conversations each finalized once %s; speech+61 s silence finalizes once %s; "
             "1 vs 2 threads equal %s; %.0f s",
             c.exclusive ? "yes" : "no", c.gated ? "yes" : "no", c.windows, c.non_neutral, c.counts ? "yes" : "no",
             c.conversations, c.finalize ? "yes" : "no", single ? "yes" : "no", c.threads ? "yes" : "no", since(t0)));
}

}  // namespace

int main() {
  const auto t0 = clk::now();
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  Trained tr;
  criterion5(tr);
  criterion6();
  criterion7(tr);
  criterion8(tr);
  std::printf("acceptance: %d failure(s), %.0f s\n", failures, since(t0));
  return failures ? 1 : 0;
}
