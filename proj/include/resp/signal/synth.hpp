#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "resp/error.hpp"
#include "resp/seed.hpp"
#include "resp/signal/filters.hpp"
#include "resp/signal/waveform.hpp"

// Deterministic stand-ins for lung recordings and clinical noise. They are
// not physiological models; they only need the spectro-temporal traits the
// classifier and enhancer must learn (sustained tonal wheezes, short
// low-frequency crackles, and three structurally different noise families).

namespace resp {

inline constexpr double kSynthPeak = 0.9;

struct BurstWindow {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive
};

/// A breath sound before peak normalization: output = gain * (base + adventitious).
struct BreathParts {
  std::vector<double> base;         // normal breath noise under the cycle envelope
  std::vector<double> adventitious; // wheeze tone and/or crackle bursts, zero elsewhere
  std::vector<BurstWindow> bursts;  // crackle support
  double tone_hz = 0.0;             // wheeze fundamental drawn for this seed
  double breath_rate_hz = 0.25;
  double gain = 1.0;

  Waveform waveform(int rate = kCanonicalRate) const {
    std::vector<double> s(base.size());
    for (std::size_t i = 0; i < s.size(); ++i) s[i] = gain * (base[i] + adventitious[i]);
    return Waveform(std::move(s), rate);
  }
};

namespace synth_detail {

constexpr double kInspFraction = 0.4;

// Breathing-cycle phase in [0, 1) at time t.
inline double cycle_phase(double t, double rate, double phase0) {
  const double ph = rate * t + phase0;
  return ph - std::floor(ph);
}

inline double breath_envelope(double ph) {
  if (ph < kInspFraction) return 0.05 + std::sin(M_PI * ph / kInspFraction);
  return 0.05 + 0.6 * std::sin(M_PI * (ph - kInspFraction) / (1.0 - kInspFraction));
}

inline double expiration_weight(double ph) {
  if (ph < kInspFraction) return 0.0;
  return std::sin(M_PI * (ph - kInspFraction) / (1.0 - kInspFraction));
}

inline std::vector<double> white(Rng& rng, std::size_t n) {
  std::vector<double> x(n);
  for (double& v : x) v = gaussian(rng);
  return x;
}

inline void normalize_rms(std::vector<double>& x, double target = 1.0) {
  const double r = rms(x);
  if (r > 0) for (double& v : x) v *= target / r;
}

// Raised-cosine on/off ramps of `ramp` samples on an event of length n.
inline double ramp_gain(std::size_t i, std::size_t n, std::size_t ramp) {
  if (ramp == 0) return 1.0;
  if (i < ramp) return 0.5 - 0.5 * std::cos(M_PI * static_cast<double>(i) / static_cast<double>(ramp));
  if (i + ramp >= n) return 0.5 - 0.5 * std::cos(M_PI * static_cast<double>(n - 1 - i) / static_cast<double>(ramp));
  return 1.0;
}

}  // namespace synth_detail

/// Builds the components of a synthetic breath sound.
///
/// Normal: band-limited noise (80-700 Hz) shaped by a breathing-cycle
/// envelope near 0.25 Hz. Wheeze adds a sustained tone (fundamental drawn
/// from 200-800 Hz per seed, plus a weaker second harmonic) during
/// expiration. Crackle adds damped 100-400 Hz transients of 10-25 ms at random
/// onsets. Both adds both. The base and the tone/burst draws come from
/// independent seed streams, so every class built from one seed shares the
/// same base.
inline BreathParts synth_breath_parts(RespClass cls, double duration_s, std::uint64_t seed,
                                      LabelMode mode = LabelMode::Icbhi4) {
  using namespace synth_detail;
  if (!(duration_s > 0.0)) throw Error(Errc::InvalidArgument, "duration must be positive");
  if (!valid_in_mode(cls, mode)) throw Error(Errc::InvalidClass, "Both is not a class in 3-class mode");
  const double fs = kCanonicalRate;
  const std::size_t n = std::max<std::size_t>(1, samples_for(duration_s));

  BreathParts parts;
  Rng env_rng = make_rng(derive_seed(seed, "breath", "envelope"));
  parts.breath_rate_hz = uniform(env_rng, 0.22, 0.30);
  const double phase0 = uniform01(env_rng);

  Rng base_rng = make_rng(derive_seed(seed, "breath", "base"));
  parts.base = white(base_rng, n);
  Biquad::highpass(fs, 80.0).apply(parts.base);
  butter4_lowpass(parts.base, fs, 700.0);
  normalize_rms(parts.base);
  for (std::size_t i = 0; i < n; ++i)
    parts.base[i] *= breath_envelope(cycle_phase(static_cast<double>(i) / fs, parts.breath_rate_hz, phase0));

  Rng tone_rng = make_rng(derive_seed(seed, "breath", "tone"));
  parts.tone_hz = uniform(tone_rng, 200.0, 800.0);
  const double tone_amp = uniform(tone_rng, 0.7, 1.0);
  const double tone_phase = uniform(tone_rng, 0.0, 2.0 * M_PI);

  parts.adventitious.assign(n, 0.0);
  const bool wheeze = cls == RespClass::Wheeze || cls == RespClass::Both;
  const bool crackle = cls == RespClass::Crackle || cls == RespClass::Both;

  if (wheeze) {
    for (std::size_t i = 0; i < n; ++i) {
      const double t = static_cast<double>(i) / fs;
      const double ex = expiration_weight(cycle_phase(t, parts.breath_rate_hz, phase0));
      const double arg = 2.0 * M_PI * parts.tone_hz * t + tone_phase;
      parts.adventitious[i] += tone_amp * ex * (std::sin(arg) + 0.3 * std::sin(2.0 * arg));
    }
  }

  if (crackle) {
    Rng crk_rng = make_rng(derive_seed(seed, "breath", "crackle"));
    const double per_second = uniform(crk_rng, 3.0, 6.0);
    const auto count = std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(per_second * duration_s)));
    for (std::size_t k = 0; k < count; ++k) {
      const double dur = uniform(crk_rng, 0.010, 0.025);
      const auto len = std::max<std::size_t>(2, samples_for(dur));
      const std::size_t begin = static_cast<std::size_t>(uniform_index(crk_rng, n));
      const std::size_t end = std::min(n, begin + len);
      const double freq = uniform(crk_rng, 100.0, 400.0);
      const double amp = uniform(crk_rng, 4.0, 6.0) * (uniform01(crk_rng) < 0.5 ? -1.0 : 1.0);
      const double tau = static_cast<double>(len) / 2.0;
      for (std::size_t i = begin; i < end; ++i) {
        const double u = static_cast<double>(i - begin);
        parts.adventitious[i] += amp * std::exp(-u / tau) * std::sin(2.0 * M_PI * freq * u / fs + M_PI / 2.0) *
                                 std::sin(M_PI * (u + 0.5) / static_cast<double>(len));
      }
      parts.bursts.push_back({begin, end});
    }
  }

  double pk = 0.0;
  for (std::size_t i = 0; i < n; ++i) pk = std::max(pk, std::abs(parts.base[i] + parts.adventitious[i]));
  parts.gain = pk > 0.0 ? kSynthPeak / pk : 1.0;
  return parts;
}

/// Deterministic synthetic breath sound at 16 kHz, peak-normalized to 0.9.
inline Waveform synth_breath(RespClass cls, double duration_s, std::uint64_t seed,
                             LabelMode mode = LabelMode::Icbhi4) {
  return synth_breath_parts(cls, duration_s, seed, mode).waveform();
}

/// Passband drawn for an environment-noise instance; exposed for tests.
struct EnvironmentBand {
  double low_hz;
  double high_hz;
  double hum_hz;
};

inline EnvironmentBand environment_band(std::uint64_t seed) {
  Rng rng = make_rng(derive_seed(seed, "noise.environment", "band"));
  EnvironmentBand b{};
  b.low_hz = uniform(rng, 250.0, 350.0);
  b.high_hz = uniform(rng, 5000.0, 7000.0);
  b.hum_hz = uniform01(rng) < 0.5 ? 50.0 : 60.0;
  return b;
}

/// Deterministic synthetic clinical noise, peak-normalized to 0.9.
///
/// Friction: stroke-like broadband bursts emphasized above ~1 kHz over a
/// continuous high-passed rustle. Environment: stationary noise, flat between the
/// drawn passband edges, plus mains hum (fundamental and two harmonics, all
/// below the passband). Patient: voiced chirps, coughs and snores separated
/// by short pauses, over a low-passed noise bed.
inline Waveform synth_noise(NoiseKind kind, double duration_s, std::uint64_t seed) {
  using namespace synth_detail;
  if (!(duration_s > 0.0)) throw Error(Errc::InvalidArgument, "duration must be positive");
  const double fs = kCanonicalRate;
  const std::size_t n = std::max<std::size_t>(1, samples_for(duration_s));
  std::vector<double> out(n, 0.0);

  switch (kind) {
    case NoiseKind::Friction: {
      Rng rng = make_rng(derive_seed(seed, "noise.friction"));
      std::vector<double> rustle = white(rng, n);
      Biquad::highpass(fs, 1500.0).apply(rustle);
      normalize_rms(rustle, 0.35);
      std::vector<double> src = white(rng, n);
      butter4_highpass(src, fs, 800.0);
      Biquad::peaking(fs, uniform(rng, 2500.0, 4500.0), 1.0, 6.0).apply(src);
      normalize_rms(src);
      const double rate = uniform(rng, 1.5, 3.0);
      double t = uniform(rng, 0.0, 0.3);
      while (t < duration_s) {
        const double len_s = uniform(rng, 0.1, 0.6);
        const double amp = uniform(rng, 0.5, 1.5);
        const std::size_t b = samples_for(t), len = samples_for(len_s);
        for (std::size_t i = 0; i < len && b + i < n; ++i) {
          const double w = std::sin(M_PI * (static_cast<double>(i) + 0.5) / static_cast<double>(len));
          // rubbing strokes flutter at a few tens of Hz
          const double flutter = 0.6 + 0.4 * std::sin(2.0 * M_PI * 25.0 * static_cast<double>(i) / fs);
          out[b + i] += amp * w * flutter * src[b + i];
        }
        t += len_s - std::log(std::max(1e-12, uniform01(rng))) / rate;
      }
      for (std::size_t i = 0; i < n; ++i) out[i] += rustle[i];
      break;
    }
    case NoiseKind::Environment: {
      const EnvironmentBand band = environment_band(seed);
      Rng rng = make_rng(derive_seed(seed, "noise.environment", "body"));
      out = white(rng, n);
      butter4_highpass(out, fs, band.low_hz);
      butter4_lowpass(out, fs, band.high_hz);
      normalize_rms(out);
      const double hum_level = uniform(rng, 0.2, 0.4);
      const double ph = uniform(rng, 0.0, 2.0 * M_PI);
      for (std::size_t i = 0; i < n; ++i) {
        const double t = static_cast<double>(i) / fs;
        double hum = 0.0;
        for (int h = 1; h <= 3; ++h) hum += std::sin(2.0 * M_PI * band.hum_hz * h * t + h * ph) / h;
        out[i] += hum_level * hum;
      }
      break;
    }
    case NoiseKind::Patient: {
      Rng rng = make_rng(derive_seed(seed, "noise.patient"));
      std::vector<double> floor_noise = white(rng, n);
      butter4_lowpass(floor_noise, fs, 2000.0);
      normalize_rms(floor_noise, 0.2);
      double t = uniform(rng, 0.0, 0.3);
      while (t < duration_s) {
        const double u = uniform01(rng);
        const std::size_t b = samples_for(t);
        double len_s;
        std::vector<double> ev;
        if (u < 0.6) {  // voiced: harmonic chirp through two formant resonators
          len_s = uniform(rng, 0.5, 1.5);
          const std::size_t len = samples_for(len_s);
          const double f0 = uniform(rng, 100.0, 220.0), glide = uniform(rng, -0.3, 0.3);
          ev.assign(len, 0.0);
          double phase = 0.0;
          for (std::size_t i = 0; i < len; ++i) {
            const double frac = static_cast<double>(i) / static_cast<double>(len);
            phase += 2.0 * M_PI * f0 * (1.0 + glide * frac) / fs;
            double s = 0.0;
            for (int h = 1; h * f0 < 3000.0; ++h) s += std::sin(h * phase) / h;
            ev[i] = s;
          }
          std::vector<double> f1 = ev, f2 = ev;
          Biquad::bandpass(fs, uniform(rng, 400.0, 800.0), 3.0).apply(f1);
          Biquad::bandpass(fs, uniform(rng, 1100.0, 2200.0), 4.0).apply(f2);
          for (std::size_t i = 0; i < len; ++i) ev[i] = 0.3 * ev[i] + f1[i] + 0.6 * f2[i];
          normalize_rms(ev);
          for (std::size_t i = 0; i < len; ++i) ev[i] *= ramp_gain(i, len, samples_for(0.04));
        } else if (u < 0.85) {  // cough: sharp attack, exponential decay
          len_s = uniform(rng, 0.15, 0.4);
          const std::size_t len = samples_for(len_s);
          ev = white(rng, len);
          butter4_highpass(ev, fs, 300.0);
          butter4_lowpass(ev, fs, 3000.0);
          normalize_rms(ev, 1.5);
          const double tau = len_s / 3.0;
          for (std::size_t i = 0; i < len; ++i) {
            const double tt = static_cast<double>(i) / fs;
            ev[i] *= std::min(1.0, tt / 0.01) * std::exp(-tt / tau);
          }
        } else {  // snore: low pulse train, strongly low-passed
          len_s = uniform(rng, 0.5, 1.2);
          const std::size_t len = samples_for(len_s);
          const double f0 = uniform(rng, 30.0, 60.0);
          ev.assign(len, 0.0);
          std::vector<double> nz = white(rng, len);
          for (std::size_t i = 0; i < len; ++i) {
            const double ph = std::fmod(f0 * static_cast<double>(i) / fs, 1.0);
            ev[i] = (ph < 0.3 ? 1.0 : 0.0) * (0.5 + 0.5 * nz[i]);
          }
          butter4_lowpass(ev, fs, 400.0);
          normalize_rms(ev);
          for (std::size_t i = 0; i < len; ++i) ev[i] *= ramp_gain(i, len, samples_for(0.1));
        }
        const double amp = uniform(rng, 0.6, 1.2);
        for (std::size_t i = 0; i < ev.size() && b + i < n; ++i) out[b + i] += amp * ev[i];
        t += len_s + uniform(rng, 0.05, 0.5);
      }
      for (std::size_t i = 0; i < n; ++i) out[i] += floor_noise[i];
      break;
    }
  }
  peak_normalize(out, kSynthPeak);
  return Waveform(std::move(out), kCanonicalRate);
}

/// Default instance counts per noise family (friction, environment, patient).
inline constexpr int default_library_size(NoiseKind k) {
  switch (k) {
    case NoiseKind::Friction: return 8;
    case NoiseKind::Environment: return 18;
    case NoiseKind::Patient: return 12;
  }
  return 0;
}

}  // namespace resp
