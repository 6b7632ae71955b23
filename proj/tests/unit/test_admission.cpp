#include <doctest.h>

#include <cmath>
#include <random>

#include "dspear/admission.hpp"
#include "dspear/errors.hpp"
#include "oracles.hpp"

using namespace dspear;
using namespace dspear::gate;

namespace {

constexpr double loud = 0.2, quiet = 0.001, tonal = 3.0, flat = 7.5;

models::GmmModel unit_gmm(double mean, std::size_t dim = 2) {
  models::GmmModel m;
  m.weights = {1.0};
  m.means = Matrix(1, dim, mean);
  m.variances = Matrix(1, dim, 1.0);
  return m;
}

}  // namespace

TEST_CASE("silence gate rejects until an event and holds for the hangover") {
  SilenceGate g;
  CHECK(g.step(quiet, flat).verdict == Verdict::reject);
  CHECK(g.step(loud, flat).verdict == Verdict::reject);   // loud but noise-like
  CHECK(g.step(quiet, tonal).verdict == Verdict::reject);  // tonal but quiet
  CHECK(g.step(loud, tonal).verdict == Verdict::admit);
  for (int i = 0; i < 40; ++i) CHECK(g.step(quiet, flat).verdict == Verdict::admit);
  CHECK_FALSE(g.active());
  CHECK(g.step(quiet, flat).verdict == Verdict::reject);
}

TEST_CASE("an event inside the hangover restarts it") {
  SilenceGate g({0.01, 6.5, 5});
  g.step(loud, tonal);
  for (int i = 0; i < 4; ++i) CHECK(g.step(0, 0).verdict == Verdict::admit);
  CHECK(g.step(loud, tonal).verdict == Verdict::admit);
  for (int i = 0; i < 5; ++i) CHECK(g.step(0, 0).verdict == Verdict::admit);
  CHECK(g.step(0, 0).verdict == Verdict::reject);
  g.step(loud, tonal);
  g.reset();
  CHECK(g.step(0, 0).verdict == Verdict::reject);
}

TEST_CASE("silence gate is deterministic over random frame sequences") {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> r(0, 0.03), e(2, 8);
  std::vector<std::pair<double, double>> seq(5000);
  for (auto& p : seq) p = {r(rng), e(rng)};
  SilenceGate a, b;
  for (const auto& [x, y] : seq) CHECK(a.step(x, y).verdict == b.step(x, y).verdict);
}

TEST_CASE("silence filter configuration is validated") {
  CHECK_THROWS_AS(SilenceGate({0.0, 6.5, 40}), ConfigError);
  CHECK_THROWS_AS(SilenceGate({0.01, 6.5, 0}), ConfigError);
}

TEST_CASE("speech gate follows the tree label") {
  Matrix x(10, 1);
  std::vector<int> y(10);
  for (int i = 0; i < 10; ++i) {
    x(i, 0) = i < 5 ? 1 + 0.1 * i : 8 + 0.1 * i;
    y[i] = i >= 5;
  }
  const auto tree = models::tree_train(x, y, {"speech", "ambient"});
  CHECK(speech_gate(std::vector<double>{1.5}, tree) == Branch::speech);
  CHECK(speech_gate(std::vector<double>{8.5}, tree) == Branch::ambient);
  CHECK(to_string(Branch::speech) == "speech");
}

TEST_CASE("neutral gate compares the two model likelihoods") {
  const auto neutral = unit_gmm(0.0), filler = unit_gmm(3.0);
  CHECK(neutral_gate(Matrix(10, 2, 0.2), neutral, filler).valence == Valence::neutral);
  CHECK(neutral_gate(Matrix(10, 2, 2.8), neutral, filler).valence == Valence::non_neutral);
  const auto tie = neutral_gate(Matrix(10, 2, 1.5), neutral, filler);
  CHECK(tie.neutral_loglik == tie.filler_loglik);
  CHECK(tie.valence == Valence::neutral);
  CHECK_THROWS_AS(neutral_gate(Matrix(1, 2, 0.0), neutral, unit_gmm(0.0, 3)), std::invalid_argument);
}

TEST_CASE("cosine angle matches the reference") {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  for (int i = 0; i < 100; ++i) {
    std::vector<double> a(12), b(12);
    for (auto& v : a) v = g(rng);
    for (auto& v : b) v = g(rng);
    CHECK(cosine_angle_deg(a, b) == doctest::Approx(oracle::angle_deg(a, b)).epsilon(1e-9));
  }
  CHECK(cosine_angle_deg(std::vector<double>{0, 0}, std::vector<double>{1, 0}) == 90.0);
}

TEST_CASE("similarity detector") {
  const std::vector<double> a{1, 2, 3}, near{1, 2, 3.05}, ortho{3, 0, -1}, zero{0, 0, 0};

  SUBCASE("cold start admits") {
    SimilarityDetector d("x", 15);
    CHECK(d.check(a).verdict == Verdict::admit);
  }
  SUBCASE("nothing propagates before a commit") {
    SimilarityDetector d("x", 15);
    d.check(a);
    CHECK(d.check(a).verdict == Verdict::admit);
  }
  SUBCASE("identical summary propagates the committed label") {
    SimilarityDetector d("x", 15);
    d.check(a);
    d.commit(a, "music");
    const auto v = d.check(a);
    CHECK(v.verdict == Verdict::propagate);
    CHECK(v.label == "music");
    CHECK(d.check(near).verdict == Verdict::propagate);
    CHECK(d.stats().propagated == 2);
    CHECK(d.stats().classified == 1);
    CHECK(d.stats().saved_fraction() == doctest::Approx(2.0 / 3));
  }
  SUBCASE("orthogonal summary is classified") {
    SimilarityDetector d("x", 15);
    d.commit(a, "music");
    CHECK(d.check(ortho).verdict == Verdict::admit);
  }
  SUBCASE("zero summary is always classified") {
    SimilarityDetector d("x", 45);
    d.commit(zero, "quiet");
    CHECK(d.check(zero).verdict == Verdict::admit);
  }
  SUBCASE("threshold zero propagates only bit-identical summaries") {
    SimilarityDetector d("x", 0);
    d.commit(a, "music");
    CHECK(d.check(near).verdict == Verdict::admit);
    d.commit(near, "water");
    const auto v = d.check(near);
    CHECK(v.verdict == Verdict::propagate);
    CHECK(v.label == "water");
  }
  SUBCASE("reset forgets the history") {
    SimilarityDetector d("x", 15);
    d.commit(a, "music");
    d.reset();
    CHECK_FALSE(d.has_label());
    CHECK(d.check(a).verdict == Verdict::admit);
  }
  CHECK_THROWS_AS(SimilarityDetector("x", 90), ConfigError);
  CHECK_THROWS_AS(SimilarityDetector("x", -1), ConfigError);
  SimilarityDetector d;
  CHECK_THROWS_AS(d.check(std::vector<double>{NAN}), std::invalid_argument);
}
