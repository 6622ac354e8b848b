#include "test_util.hpp"

#include "oracles.hpp"
#include "resp/corpus.hpp"
#include "resp/metrics.hpp"
#include "resp/signal.hpp"

using namespace resp;

namespace {

using Pair = std::pair<RespClass, RespClass>;

std::vector<Pair> repeat(Pair p, int n) { return std::vector<Pair>(static_cast<std::size_t>(n), p); }

std::vector<Pair> concat(std::initializer_list<std::vector<Pair>> parts) {
  std::vector<Pair> out;
  for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
  return out;
}

}  // namespace

TEST_CASE("confusion counts and perfect predictions") {
  const auto cm = confusion({{RespClass::Normal, RespClass::Normal}, {RespClass::Crackle, RespClass::Wheeze}}, LabelMode::Fabs3);
  CHECK(cm.at(0, 0) == 1);
  CHECK(cm.at(class_index(RespClass::Crackle), class_index(RespClass::Wheeze)) == 1);
  CHECK(cm.total() == 2);
  REQUIRE_ERRC(confusion({}, LabelMode::Fabs3), Errc::EmptyEvaluation);
  REQUIRE_ERRC(confusion({{RespClass::Both, RespClass::Normal}}, LabelMode::Fabs3), Errc::InvalidClass);

  const auto perfect = score(confusion(
      concat({repeat({RespClass::Normal, RespClass::Normal}, 3), repeat({RespClass::Crackle, RespClass::Crackle}, 2),
              repeat({RespClass::Both, RespClass::Both}, 1)}),
      LabelMode::Icbhi4));
  CHECK(perfect.accuracy == 1.0);
  CHECK(perfect.sensitivity == 1.0);
  CHECK(perfect.specificity == 1.0);
  CHECK(perfect.icbhi_score == 1.0);
}

TEST_CASE("exact-class and pooled sensitivity") {
  // 4 normals (3 right), 4 crackles: 2 right, 1 called wheeze, 1 called normal.
  const auto pairs = concat({repeat({RespClass::Normal, RespClass::Normal}, 3), repeat({RespClass::Normal, RespClass::Wheeze}, 1),
                             repeat({RespClass::Crackle, RespClass::Crackle}, 2),
                             repeat({RespClass::Crackle, RespClass::Wheeze}, 1),
                             repeat({RespClass::Crackle, RespClass::Normal}, 1)});
  const auto cm = confusion(pairs, LabelMode::Fabs3);
  const auto exact = score(cm);
  CHECK(exact.sensitivity == 0.5);
  CHECK(exact.specificity == 0.75);
  CHECK(exact.accuracy == 5.0 / 8.0);
  CHECK(exact.icbhi_score == 0.625);
  CHECK(score(cm, SensitivityRule::Pooled).sensitivity == 0.75);

  REQUIRE_ERRC(score(confusion(repeat({RespClass::Crackle, RespClass::Crackle}, 2), LabelMode::Fabs3)), Errc::NoNormals);
  REQUIRE_ERRC(score(confusion(repeat({RespClass::Normal, RespClass::Crackle}, 2), LabelMode::Fabs3)), Errc::NoAbnormals);
}

TEST_CASE("icbhi score is the mean of sensitivity and specificity") {
  CHECK(icbhi_score(0.7143, 0.8727) == Catch::Approx(0.7935));
  CHECK(icbhi_score(0.6207, 0.9001) == Catch::Approx(0.7604));
}

TEST_CASE("published score rows are internally consistent") {
  const auto rows = oracle::read_reported(std::string(RESP_TEST_DATA_DIR) + "/reported_scores.csv");
  REQUIRE(rows.size() >= 20);
  for (const auto& r : rows) {
    INFO(r.study << " " << r.dataset << " " << r.condition << " " << r.enhancer);
    CHECK(std::abs(icbhi_score(r.sensitivity, r.specificity) - r.icbhi) <= 0.01);
  }
}

TEST_CASE("ssnr fixtures") {
  const Waveform w(testutil::random_signal(16000, 1), kCanonicalRate);
  CHECK(ssnr(w, w) == 35.0);
  CHECK(ssnr(w, Waveform::zeros(16000)) == Catch::Approx(0.0).margin(1e-12));

  // estimate = clean +/- clean: every error sample has the clean magnitude.
  Rng rng = make_rng(2);
  Waveform est = w;
  for (std::size_t i = 0; i < est.size(); ++i) est.samples[i] = uniform01(rng) < 0.5 ? 2.0 * w[i] : 0.0;
  CHECK(ssnr(w, est) == Catch::Approx(0.0).margin(1e-9));

  Waveform noisy = w;
  for (auto& v : noisy.samples) v *= 1.0 + 1e-9;
  CHECK(ssnr(w, noisy) == 35.0);
  Waveform flipped = w;
  for (auto& v : flipped.samples) v = -10.0 * v;
  CHECK(ssnr(w, flipped) == -10.0);

  REQUIRE_ERRC(ssnr(w, Waveform::zeros(100)), Errc::LengthMismatch);
  REQUIRE_ERRC(ssnr(Waveform::zeros(1000), Waveform::zeros(1000)), Errc::SilentReference);
}

TEST_CASE("ssnr ignores frames far below the loudest one") {
  std::vector<double> x = testutil::random_signal(16384, 3);
  for (std::size_t i = 8192; i < x.size(); ++i) x[i] *= 1e-4;
  const Waveform clean(x, kCanonicalRate);
  Waveform est = clean;
  for (std::size_t i = 8192; i < x.size(); ++i) est.samples[i] = 0.0;
  // Quiet frames are skipped; every frame that counts clips at the ceiling.
  CHECK(ssnr(clean, est) == 35.0);
}

TEST_CASE("stoi: identity, scale invariance, noise floor") {
  const Waveform clean(synth_breath(RespClass::Wheeze, 3.0, 5).samples, kCanonicalRate);
  CHECK(stoi(clean, clean) >= 0.99);
  Waveform louder = clean;
  for (auto& v : louder.samples) v *= 10.0;
  CHECK(std::abs(stoi(clean, louder) - stoi(clean, clean)) <= 1e-9);

  double mean = 0.0;
  for (int s = 0; s < 20; ++s) {
    const Waveform noise(testutil::random_signal(clean.size(), 100 + s), kCanonicalRate);
    mean += stoi(clean, noise) / 20.0;
  }
  CHECK(mean <= 0.2);
  CHECK(stoi(clean, clean) == stoi(clean, clean));

  REQUIRE_ERRC(stoi(clean, Waveform::zeros(100)), Errc::LengthMismatch);
  REQUIRE_ERRC(stoi(Waveform(testutil::random_signal(3000, 1), kCanonicalRate),
                    Waveform(testutil::random_signal(3000, 2), kCanonicalRate)),
               Errc::TooShort);
}

TEST_CASE("stoi decreases as noise grows") {
  const Waveform clean(synth_breath(RespClass::Crackle, 3.0, 9).samples, kCanonicalRate);
  const Waveform noise(testutil::random_signal(clean.size(), 4), kCanonicalRate);
  double prev = 2.0;
  for (double snr : {20.0, 5.0, -5.0}) {
    const auto m = mix_at_snr(clean, noise, snr, 1);
    const double s = stoi(clean, m.noisy);
    CHECK(s < prev);
    prev = s;
  }
}

TEST_CASE("pearson examples and invariance") {
  CHECK(pearson({1, 2, 3}, {2, 4, 6}) == Catch::Approx(1.0));
  CHECK(pearson({1, 2, 3}, {3, 2, 1}) == Catch::Approx(-1.0));
  REQUIRE_ERRC(pearson({1, 2, 3}, {5, 5, 5}), Errc::DegenerateVariance);
  REQUIRE_ERRC(pearson({1, 2}, {1, 2, 3}), Errc::LengthMismatch);
  REQUIRE_ERRC(pearson({1}, {1}), Errc::TooFewPoints);
  const std::vector<double> x = testutil::random_signal(20, 1), y = testutil::random_signal(20, 2);
  std::vector<double> ax = x, ay = y;
  for (auto& v : ax) v = 3.0 * v + 7.0;
  for (auto& v : ay) v = 0.5 * v - 2.0;
  CHECK(pearson(ax, ay) == Catch::Approx(pearson(x, y)).epsilon(1e-12));
  CHECK(pearson(x, y) == Catch::Approx(oracle::pearson(x, y)).margin(1e-12));
}

TEST_CASE("welch examples") {
  const auto r = welch_t_one_tailed({2, 3, 4}, {1, 2, 3});
  CHECK(r.t == Catch::Approx(1.2247).epsilon(1e-4));
  CHECK(r.df == Catch::Approx(4.0));
  CHECK(r.p == Catch::Approx(0.144).margin(5e-4));
  const auto same = welch_t_one_tailed({1, 2, 4}, {1, 2, 4});
  CHECK(same.t == 0.0);
  CHECK(same.p == Catch::Approx(0.5));
  const auto swapped = welch_t_one_tailed({1, 2, 3}, {2, 3, 4});
  CHECK(swapped.t == Catch::Approx(-r.t));
  CHECK(swapped.p == Catch::Approx(1.0 - r.p));
  REQUIRE_ERRC(welch_t_one_tailed({1}, {1, 2}), Errc::TooFewSamples);
  REQUIRE_ERRC(welch_t_one_tailed({1, 1}, {2, 2}), Errc::DegenerateVariance);
  CHECK(welch_t_one_tailed({1, 1}, {1, 1}).p == 0.5);
}

TEST_CASE("welch matches numeric integration on random fixtures") {
  for (std::uint64_t s = 0; s < 50; ++s) {
    std::vector<double> a, b;
    oracle::welch_fixture(s, a, b);
    const auto got = welch_t_one_tailed(a, b);
    const auto want = oracle::welch(a, b);
    INFO("fixture " << s << " t " << want.t << " df " << want.df);
    CHECK(std::abs(got.t - want.t) <= 1e-6);
    CHECK(std::abs(got.df - want.df) <= 1e-6);
    CHECK(std::abs(got.p - want.p) <= 1e-6);
    CHECK(got.p > 0.0);
    CHECK(got.p < 1.0);
  }
}

TEST_CASE("welch p falls as the mean gap grows") {
  std::vector<double> a{0.1, 0.4, 0.2, 0.5}, b{0.3, 0.1, 0.2, 0.0};
  double prev = 1.0;
  for (int k = 0; k < 6; ++k) {
    const double p = welch_t_one_tailed(a, b).p;
    CHECK(p < prev);
    prev = p;
    for (auto& v : a) v += 0.1;
  }
}

TEST_CASE("sample moments") {
  CHECK(sample_mean({1, 2, 3, 4}) == 2.5);
  CHECK(sample_variance({1, 2, 3, 4}) == Catch::Approx(5.0 / 3.0));
  CHECK(sample_variance({7}) == 0.0);
  CHECK(sample_sd({2, 4}) == Catch::Approx(std::sqrt(2.0)));
}
