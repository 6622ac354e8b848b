#include "test_util.hpp"

#include "resp/corpus.hpp"
#include "resp/enhance.hpp"
#include "resp/metrics.hpp"
#include "resp/signal.hpp"

using namespace resp;

namespace {

double max_abs_diff(const std::vector<double>& a, const std::vector<double>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("chunk pads the last segment and reassemble inverts it") {
  const Waveform w(testutil::random_signal(160000, 1), kCanonicalRate);
  const auto c = chunk(w);
  REQUIRE(c.segments.size() == 3);
  CHECK(c.segments[0].size() == 64000);
  CHECK(c.pad == 32000);
  for (std::size_t i = 160000 - 128000; i < 64000; ++i) REQUIRE(c.segments[2][i] == 0.0);
  CHECK(reassemble(c).samples == w.samples);

  const auto exact = chunk(Waveform(testutil::random_signal(128000, 2), kCanonicalRate));
  CHECK(exact.segments.size() == 2);
  CHECK(exact.pad == 0);
  const auto tiny = chunk(Waveform({0.5}, kCanonicalRate));
  CHECK(tiny.segments.size() == 1);
  CHECK(reassemble(tiny).samples == std::vector<double>{0.5});

  Chunked broken = c;
  broken.segments[1].pop_back();
  REQUIRE_ERRC(reassemble(broken), Errc::LengthMismatch);
  REQUIRE_ERRC(chunk(Waveform({}, kCanonicalRate)), Errc::SignalTooShort);
}

TEST_CASE("spectral subtraction with an oracle noise profile") {
  const std::size_t n = 64000;
  const Waveform clean(testutil::sine(440.0, 4.0, kCanonicalRate, 0.5), kCanonicalRate);
  const auto lib = build_noise_library(NoiseLibraryConfig{}, 7);
  const NoiseInstance* env = lib.select(Partition::Train, NoiseKind::Environment).front();
  const auto m = mix_at_snr(clean, env->audio, 5.0, 3);
  auto seg = noise_segment(env->audio.samples, m.shift_samples, n);
  for (auto& v : seg) v *= m.gain;
  const Waveform profile(seg, kCanonicalRate);
  const Waveform out = spectral_subtract(m.noisy, profile);
  REQUIRE(out.size() == n);
  CHECK(ssnr(clean, out) >= ssnr(clean, m.noisy) + 5.0);

  // A zero profile removes nothing.
  const Waveform same = spectral_subtract(m.noisy, Waveform::zeros(n));
  CHECK(max_abs_diff(same.samples, m.noisy.samples) < 1e-9);
  const Waveform kept = spectral_subtract(clean, Waveform::zeros(n));
  CHECK(max_abs_diff(kept.samples, clean.samples) < 1e-9);
  REQUIRE_ERRC(spectral_subtract(Waveform::zeros(100)), Errc::SignalTooShort);
}

TEST_CASE("every enhancer kind preserves length and is deterministic") {
  const Waveform noisy(testutil::random_signal(160000, 4, 0.2), kCanonicalRate);
  for (auto kind : {EnhancerKind::SpectralSubtract, EnhancerKind::TinyWaveUNet, EnhancerKind::TinyMaskNet}) {
    INFO(enhancer_name(kind));
    const auto m = build_enhancer(kind, 3);
    const auto a = enhance(m, noisy);
    CHECK(a.size() == noisy.size());
    CHECK(a.samples == enhance(m, noisy).samples);
    for (double v : a.samples) REQUIRE(std::isfinite(v));
    CHECK(parse_enhancer(enhancer_name(kind)) == kind);
  }
  const auto u = build_enhancer(EnhancerKind::TinyWaveUNet, 1);
  CHECK(enhance(u, Waveform(testutil::random_signal(64000, 5), kCanonicalRate)).size() == 64000);
  CHECK(enhance(u, Waveform(testutil::random_signal(1001, 5), kCanonicalRate)).size() == 1001);
  REQUIRE_ERRC(parse_enhancer("cmgan"), Errc::ParseError);
}

TEST_CASE("spectral-subtract enhancer equals per-segment subtraction") {
  const Waveform noisy(testutil::random_signal(100000, 6, 0.2), kCanonicalRate);
  const auto m = build_enhancer(EnhancerKind::SpectralSubtract, 0);
  Chunked c = chunk(noisy);
  for (auto& s : c.segments) s = spectral_subtract(Waveform(s, kCanonicalRate)).samples;
  CHECK(enhance(m, noisy).samples == reassemble(c).samples);
}

TEST_CASE("parameter counts follow the architectures") {
  const auto u = build_enhancer(EnhancerKind::TinyWaveUNet, 0);
  // conv (out*in*15 + out bias + out slope) per block, then a 1x1 head.
  auto block = [](std::size_t o, std::size_t i) { return o * i * 15 + 2 * o; };
  const std::size_t unet = block(16, 1) + block(32, 16) + block(64, 32) + block(64, 64) + block(32, 128) +
                           block(16, 64) + block(16, 32) + (16 + 1);
  CHECK(u.params.element_count() == unet);
  CHECK(build_enhancer(EnhancerKind::TinyWaveUNet, 9).params.element_count() == unet);

  const auto m = build_enhancer(EnhancerKind::TinyMaskNet, 0);
  CHECK(m.params.element_count() == (16 * 3 * 9 + 32) + (16 * 16 * 9 + 32) + (16 * 9 + 1));
  CHECK(build_enhancer(EnhancerKind::SpectralSubtract, 0).params.element_count() == 0);
  CHECK_FALSE(u.params.values_equal(build_enhancer(EnhancerKind::TinyWaveUNet, 1).params));
}

TEST_CASE("untrained mask stays in (0, 1) and never amplifies") {
  const auto m = build_enhancer(EnhancerKind::TinyMaskNet, 2);
  const std::vector<double> seg = testutil::random_signal(64000, 7, 0.3);
  const auto batch = mask_batch({&seg}, m.stft, kCanonicalRate);
  CHECK(batch.magnitude.dim(3) == 257);
  const auto mask = predict_mask(m, batch);
  for (float v : mask.data) {
    REQUIRE(v > 0.0f);
    REQUIRE(v < 1.0f);
  }
  const auto out = enhance_segments(m, {&seg}, kCanonicalRate).front();
  const auto in_mag = magnitude(stft(Waveform(seg, kCanonicalRate), m.stft));
  // Re-analysis of the ISTFT output is not bounded cell by cell, but the
  // total energy cannot exceed the input's.
  double e_in = 0.0, e_out = 0.0;
  for (std::size_t i = 0; i < seg.size(); ++i) {
    e_in += seg[i] * seg[i];
    e_out += out[i] * out[i];
  }
  CHECK(e_out <= e_in);
  CHECK(in_mag.size() == batch.magnitude.size());
}

TEST_CASE("identity training drives the loss down") {
  std::vector<Waveform> clips;
  for (int i = 0; i < 50; ++i) clips.emplace_back(synth_breath(class_from_index(i % 3, LabelMode::Fabs3), 0.5, i).samples, kCanonicalRate);
  std::vector<WavePair> pairs;
  for (const auto& c : clips) pairs.push_back({&c, &c});
  for (auto kind : {EnhancerKind::TinyWaveUNet, EnhancerKind::TinyMaskNet}) {
    INFO(enhancer_name(kind));
    auto m = build_enhancer(kind, 1);
    EnhTrainConfig cfg;
    cfg.segment_s = 0.5;
    cfg.epochs = 5;
    cfg.lr = 3e-3;
    cfg.batch_size = 5;
    int calls = 0;
    const auto r = train_enhancer(m, pairs, cfg, [&](int, double) { ++calls; });
    REQUIRE(r.epoch_loss.size() == 5);
    CHECK(calls == 5);
    CHECK(r.epoch_loss.back() < 0.1 * r.epoch_loss.front());
    CHECK(m.segment_s == 0.5);
  }
}

TEST_CASE("training errors and spectral-subtract no-op") {
  auto ss = build_enhancer(EnhancerKind::SpectralSubtract, 0);
  const Waveform a(testutil::random_signal(8000, 1), kCanonicalRate);
  CHECK(train_enhancer(ss, std::vector<WavePair>{{&a, &a}}, EnhTrainConfig{}).epoch_loss.empty());
  auto m = build_enhancer(EnhancerKind::TinyMaskNet, 0);
  REQUIRE_ERRC(train_enhancer(m, std::vector<WavePair>{}, EnhTrainConfig{}), Errc::EmptyDataset);
  const Waveform b(testutil::random_signal(4000, 2), kCanonicalRate);
  REQUIRE_ERRC(train_enhancer(m, std::vector<WavePair>{{&a, &b}}, EnhTrainConfig{}), Errc::LengthMismatch);
  EnhTrainConfig bad;
  bad.epochs = 0;
  REQUIRE_ERRC(train_enhancer(m, std::vector<WavePair>{{&a, &a}}, bad), Errc::ConfigError);
  auto u = build_enhancer(EnhancerKind::TinyWaveUNet, 0);
  EnhTrainConfig odd;
  odd.segment_s = 0.0001875;  // 3 samples
  REQUIRE_ERRC(train_enhancer(u, std::vector<WavePair>{{&a, &a}}, odd), Errc::ConfigError);
  CHECK(parse_enh_loss("mse") == EnhLoss::MSE);
  REQUIRE_ERRC(parse_enh_loss("huber"), Errc::ParseError);
}

TEST_CASE("enhancer checkpoints reload bit-exactly") {
  for (auto kind : {EnhancerKind::SpectralSubtract, EnhancerKind::TinyWaveUNet, EnhancerKind::TinyMaskNet}) {
    auto m = build_enhancer(kind, 5);
    m.segment_s = 2.0;
    m.stft = StftConfig::enhancer_fine();
    const auto back = decode_enhancer(encode_enhancer(m));
    CHECK(back.kind == kind);
    CHECK(back.segment_s == 2.0);
    CHECK(back.stft == m.stft);
    CHECK(back.params.values_equal(m.params));
  }
  REQUIRE_ERRC(decode_enhancer("garbage!"), Errc::ParseError);
}
