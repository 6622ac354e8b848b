#include "test_util.hpp"

#include "resp/spectral.hpp"

using namespace resp;

namespace {

// Full-spectrum energy of one frame from its half spectrum.
double frame_energy(const ComplexSpectrogram& s, std::size_t f) {
  const std::size_t nb = s.bins();
  double e = 0.0;
  for (std::size_t k = 0; k < nb; ++k) {
    const double p = std::norm(s.at(f, k));
    e += (k == 0 || k == nb - 1) ? p : 2.0 * p;
  }
  return e;
}

double rel_error(const std::vector<double>& a, const std::vector<double>& b, std::size_t from, std::size_t to) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = from; i < to; ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

}  // namespace

TEST_CASE("frame counts for centered and non-centered framing") {
  StftConfig nc{512, 160, 512, false};
  CHECK(nc.frames_for(160000) == 997);
  CHECK(StftConfig::classifier().frames_for(160000) == 1001);
  const auto s = stft(Waveform(testutil::random_signal(160000, 1), kCanonicalRate), nc);
  CHECK(s.frames == 997);
  CHECK(s.bins() == 257);
  REQUIRE_ERRC(stft(Waveform(std::vector<double>(100, 0.1), kCanonicalRate), nc), Errc::SignalTooShort);
  CHECK(stft(Waveform(std::vector<double>(100, 0.1), kCanonicalRate), StftConfig::classifier()).frames == 1);
  REQUIRE_ERRC(stft(Waveform({}, kCanonicalRate), StftConfig::classifier()), Errc::SignalTooShort);
}

TEST_CASE("stft configuration validation") {
  REQUIRE_ERRC((StftConfig{512, 600, 512, true}.validate()), Errc::InvalidArgument);
  REQUIRE_ERRC((StftConfig{512, 160, 256, true}.validate()), Errc::InvalidArgument);
  REQUIRE_ERRC((StftConfig{400, 160, 500, true}.validate()), Errc::InvalidArgument);
  REQUIRE_ERRC((StftConfig{0, 0, 512, true}.validate()), Errc::InvalidArgument);
}

TEST_CASE("zero signal gives a zero spectrogram and back") {
  const auto s = stft(Waveform::zeros(16000), StftConfig::enhancer());
  for (const auto& v : s.data) REQUIRE(v == cplx(0.0, 0.0));
  for (double v : istft(s).samples) REQUIRE(v == 0.0);
}

TEST_CASE("Parseval per frame against the windowed samples") {
  const StftConfig cfg{400, 160, 512, false};
  const auto x = testutil::random_signal(400 + 160 * 30, 7);
  const auto s = stft(Waveform(x, kCanonicalRate), cfg);
  const auto w = hamming_window(400);
  double lhs = 0.0, rhs = 0.0;
  for (std::size_t f = 0; f < s.frames; ++f) {
    lhs += frame_energy(s, f);
    for (std::size_t i = 0; i < 400; ++i) rhs += 512.0 * std::pow(x[f * 160 + i] * w[i], 2);
  }
  CHECK(std::abs(lhs - rhs) <= 1e-6 * rhs);
}

TEST_CASE("centered impulse lands only in frames whose window covers it") {
  const auto cfg = StftConfig::classifier();
  std::vector<double> x(16000, 0.0);
  x[0] = 1.0;
  const auto s = stft(Waveform(x, kCanonicalRate), cfg);
  const auto w = hamming_window(512);
  CHECK(frame_energy(s, 0) == Catch::Approx(512.0 * w[256] * w[256]).epsilon(1e-9));
  CHECK(frame_energy(s, 1) == Catch::Approx(512.0 * w[96] * w[96]).epsilon(1e-9));
  for (std::size_t f = 2; f < s.frames; ++f) REQUIRE(frame_energy(s, f) < 1e-20);
}

TEST_CASE("istft inverts stft for every analysis geometry") {
  const auto x = testutil::random_signal(64000, 11);
  for (const StftConfig& base : {StftConfig::classifier(), StftConfig::enhancer(), StftConfig::enhancer_fine()}) {
    for (bool centered : {true, false}) {
      StftConfig cfg = base;
      cfg.centered = centered;
      const auto y = istft(stft(Waveform(x, kCanonicalRate), cfg)).samples;
      REQUIRE(y.size() == x.size());
      const std::size_t covered = istft_covered_length(cfg, x.size());
      INFO("win " << cfg.win_len << " hop " << cfg.hop << " centered " << centered);
      CHECK(rel_error(y, x, 0, covered) <= 1e-6);
      for (std::size_t i = covered; i < y.size(); ++i) REQUIRE(y[i] == 0.0);
    }
  }
}

TEST_CASE("istft rejects windows whose overlap-add vanishes") {
  // No frames means no sample is covered.
  ComplexSpectrogram s = stft(Waveform(testutil::random_signal(4000, 2), kCanonicalRate), StftConfig::enhancer());
  s.frames = 0;
  REQUIRE_ERRC(istft(s), Errc::ColaViolation);
  ComplexSpectrogram bad = s;
  bad.config.hop = 0;
  REQUIRE_ERRC(istft(bad), Errc::InvalidArgument);
}

TEST_CASE("mel filterbank shape, monotone centers and coverage") {
  const auto fb = mel_filterbank(64, 512, kCanonicalRate, 25.0, 8000.0);
  REQUIRE(fb.weights.size() == 64 * 257);
  for (std::size_t m = 1; m < 64; ++m) CHECK(fb.centers_hz[m] > fb.centers_hz[m - 1]);
  for (std::size_t m = 0; m < 64; ++m) {
    // Nonnegative, rising then falling.
    bool falling = false;
    for (std::size_t k = 0; k < 257; ++k) {
      REQUIRE(fb.at(m, k) >= 0.0);
      REQUIRE(fb.at(m, k) <= 1.0);
      if (k > 0 && fb.at(m, k) < fb.at(m, k - 1)) falling = true;
      if (falling && k > 0) REQUIRE(fb.at(m, k) <= fb.at(m, k - 1));
    }
  }
  for (std::size_t k = 0; k < 257; ++k) {
    const double f = k * 16000.0 / 512.0;
    if (f <= 25.0 || f >= 8000.0) continue;
    double sum = 0.0;
    for (std::size_t m = 0; m < 64; ++m) sum += fb.at(m, k);
    REQUIRE(sum > 0.0);
  }
  CHECK(hz_to_mel(700.0) == Catch::Approx(2595.0 * std::log10(2.0)));
  CHECK(mel_to_hz(hz_to_mel(1234.5)) == Catch::Approx(1234.5));
}

TEST_CASE("single mel filter spans the whole range") {
  const auto fb = mel_filterbank(1, 512, kCanonicalRate, 100.0, 4000.0);
  for (std::size_t k = 0; k < 257; ++k) {
    const double f = k * 16000.0 / 512.0;
    if (f > 100.0 && f < 4000.0) CHECK(fb.at(0, k) > 0.0);
    else CHECK(fb.at(0, k) == 0.0);
  }
  REQUIRE_ERRC(mel_filterbank(0, 512, kCanonicalRate, 0, 8000), Errc::BadRange);
  REQUIRE_ERRC(mel_filterbank(64, 512, kCanonicalRate, 8000, 8000), Errc::BadRange);
  REQUIRE_ERRC(mel_filterbank(64, 512, kCanonicalRate, 0, 9000), Errc::BadRange);
}

TEST_CASE("log_mel shape, floor and scaling") {
  const auto z = log_mel(Waveform::zeros(160000));
  CHECK(z.n_mels == 64);
  CHECK(z.frames == 1001);
  for (double v : z.data) REQUIRE(v == Catch::Approx(std::log(1e-10)));

  auto x = testutil::random_signal(16000, 5);
  const auto a = log_mel(Waveform(x, kCanonicalRate));
  for (auto& v : x) v *= 2.0;
  const auto b = log_mel(Waveform(x, kCanonicalRate));
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    REQUIRE(std::isfinite(a.data[i]));
    if (a.data[i] > std::log(1e-10) + 10.0) REQUIRE(b.data[i] - a.data[i] == Catch::Approx(std::log(4.0)).margin(1e-6));
    REQUIRE(b.data[i] >= a.data[i]);
  }
}

TEST_CASE("time pooling") {
  MelSpec m;
  m.n_mels = 1;
  m.frames = 5;
  m.data = {0.0, 2.0, 4.0, 6.0, 8.0};
  const auto p = pool_time(m, 2);
  REQUIRE(p.frames == 3);
  CHECK(p.data == std::vector<double>{1.0, 5.0, 8.0});
  const auto q = pool_time_power(m, 2);
  CHECK(q.data[0] == Catch::Approx(std::log((1.0 + std::exp(2.0)) / 2.0)));
  CHECK(q.data[2] == Catch::Approx(8.0));
  CHECK(pool_time(m, 1).data == m.data);
  REQUIRE_ERRC(pool_time(m, 0), Errc::InvalidArgument);
  REQUIRE_ERRC(pool_time_power(m, 0), Errc::InvalidArgument);
}

TEST_CASE("spec_augment masks stripes with the mean, deterministically") {
  const auto m = log_mel(Waveform(testutil::random_signal(16000, 3), kCanonicalRate));
  const auto copy = m;
  CHECK(spec_augment(m, {0, 32, 0, 8}, 1).data == m.data);

  const auto one = spec_augment(m, {0, 0, 1, 8}, 4);
  CHECK(m.data == copy.data);
  const double mean = m.mean();
  std::vector<std::size_t> rows;
  for (std::size_t r = 0; r < m.n_mels; ++r) {
    bool all = true;
    for (std::size_t t = 0; t < m.frames; ++t) all &= one.at(r, t) == mean;
    if (all) rows.push_back(r);
    else
      for (std::size_t t = 0; t < m.frames; ++t) REQUIRE(one.at(r, t) == m.at(r, t));
  }
  CHECK(rows.size() <= 8);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i] == rows[i - 1] + 1);

  CHECK(spec_augment(m, {}, 9).data == spec_augment(m, {}, 9).data);
  const auto huge = spec_augment(m, {3, 5000, 3, 500}, 2);
  CHECK(huge.data.size() == m.data.size());
}
