#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "resp/corpus/clip.hpp"
#include "resp/seed.hpp"
#include "resp/signal/synth.hpp"

namespace resp {

inline const std::vector<double>& default_train_snrs() {
  static const std::vector<double> v{15.0, 10.0, 5.0, 0.0};
  return v;
}
inline const std::vector<double>& default_test_snrs() {
  static const std::vector<double> v{17.5, 12.5, 7.5, 2.5};
  return v;
}

/// Noise circularly shifted left by `shift` and tiled to `len` samples.
inline std::vector<double> noise_segment(const std::vector<double>& noise, std::size_t shift, std::size_t len) {
  std::vector<double> seg(len);
  const std::size_t n = noise.size();
  for (std::size_t i = 0; i < len; ++i) seg[i] = noise[(shift + i) % n];
  return seg;
}

struct MixResult {
  Waveform noisy;
  std::size_t shift_samples = 0;
  double gain = 0.0;  // k applied to the shifted noise segment
};

/// 10 log10(sum s^2 / sum n^2).
inline double measured_snr_db(const std::vector<double>& signal, const std::vector<double>& noise) {
  return 10.0 * std::log10(energy(signal) / energy(noise));
}

/// clean + k * segment with k = rms(clean) / (rms(segment) 10^(snr/20)); the
/// shift is uniform over the noise length.
inline MixResult mix_at_snr(const Waveform& clean, const Waveform& noise, double snr_db, std::uint64_t seed) {
  if (noise.empty()) throw Error(Errc::SilentInput, "noise is empty");
  if (clean.sample_rate != noise.sample_rate) throw Error(Errc::InvalidArgument, "sample rates differ");
  if (!std::isfinite(snr_db)) throw Error(Errc::InvalidArgument, "snr must be finite");
  const double rc = rms(clean);
  if (rc == 0.0) throw Error(Errc::SilentInput, "clean signal is silent");
  Rng rng = make_rng(seed);
  MixResult r;
  r.shift_samples = static_cast<std::size_t>(uniform_index(rng, noise.size()));
  std::vector<double> seg = noise_segment(noise.samples, r.shift_samples, clean.size());
  const double rn = rms(seg);
  if (rn == 0.0) throw Error(Errc::SilentInput, "noise segment is silent");
  r.gain = rc / (rn * std::pow(10.0, snr_db / 20.0));
  r.noisy = clean;
  for (std::size_t i = 0; i < seg.size(); ++i) r.noisy.samples[i] += r.gain * seg[i];
  return r;
}

struct NoiseInstance {
  NoiseKind kind = NoiseKind::Environment;
  int index = 0;
  Partition partition = Partition::Train;
  Waveform audio;

  std::string id() const { return noise_kind_name(kind) + "-" + std::to_string(index); }
};

struct NoiseLibraryConfig {
  int friction = default_library_size(NoiseKind::Friction);
  int environment = default_library_size(NoiseKind::Environment);
  int patient = default_library_size(NoiseKind::Patient);
  double duration_s = 12.0;
  double test_fraction = 0.25;  // per kind, at least one instance on each side

  int size(NoiseKind k) const {
    return k == NoiseKind::Friction ? friction : k == NoiseKind::Environment ? environment : patient;
  }
};

struct NoiseLibrary {
  std::vector<NoiseInstance> items;

  std::vector<const NoiseInstance*> select(Partition p) const {
    std::vector<const NoiseInstance*> out;
    for (const auto& it : items)
      if (it.partition == p) out.push_back(&it);
    return out;
  }
  std::vector<const NoiseInstance*> select(Partition p, NoiseKind k) const {
    std::vector<const NoiseInstance*> out;
    for (const auto& it : items)
      if (it.partition == p && it.kind == k) out.push_back(&it);
    return out;
  }
};

/// Instance i of each kind is synth_noise(kind, duration, i). The seed only
/// decides which instances are held out for testing.
inline NoiseLibrary build_noise_library(const NoiseLibraryConfig& cfg, std::uint64_t seed) {
  NoiseLibrary lib;
  for (NoiseKind k : kAllNoiseKinds) {
    const int n = cfg.size(k);
    if (n < 2) throw Error(Errc::EmptyNoiseLibrary, "each noise kind needs at least two instances");
    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    Rng rng = make_rng(derive_seed(seed, "noise-split", noise_kind_name(k)));
    shuffle(order, rng);
    const int n_test = std::clamp(static_cast<int>(std::lround(n * cfg.test_fraction)), 1, n - 1);
    std::vector<bool> test(static_cast<std::size_t>(n), false);
    for (int j = 0; j < n_test; ++j) test[static_cast<std::size_t>(order[static_cast<std::size_t>(j)])] = true;
    for (int i = 0; i < n; ++i)
      lib.items.push_back({k, i, test[static_cast<std::size_t>(i)] ? Partition::Test : Partition::Train,
                           synth_noise(k, cfg.duration_s, static_cast<std::uint64_t>(i))});
  }
  return lib;
}

/// Noisy version of `clean` mixed with one library instance.
inline Clip make_noisy_clip(const Clip& clean, const NoiseInstance& noise, double snr_db, std::uint64_t seed) {
  MixResult m = mix_at_snr(clean.audio, noise.audio, snr_db, seed);
  Clip out;
  out.audio = std::move(m.noisy);
  out.label = clean.label;
  out.source_id = clean.source_id;
  out.clip_id = clean.clip_id;
  out.condition = Condition::Noisy;
  out.partition = clean.partition;
  out.noise = NoiseMeta{noise.kind, noise.id(), snr_db, m.shift_samples, m.gain, noise.partition};
  return out;
}

enum class SnrDraw {
  OnePerClip,  // one (instance, snr) draw per clip
  AllPerClip,  // every grid value per clip, each with its own instance draw
};

/// Pairs each clip with noise drawn from `noises` at SNRs from `grid`. Draws
/// depend only on (seed, clip_id, snr slot), so a clip's pair does not
/// change when other clips are added or removed.
inline std::vector<NoisyPair> build_condition_set(const std::vector<Clip>& clips,
                                                  const std::vector<const NoiseInstance*>& noises,
                                                  const std::vector<double>& grid, std::uint64_t seed,
                                                  SnrDraw draw = SnrDraw::OnePerClip) {
  if (noises.empty()) throw Error(Errc::EmptyNoiseLibrary, "no noise instances to mix with");
  if (grid.empty()) throw Error(Errc::InvalidArgument, "SNR grid is empty");
  std::vector<NoisyPair> out;
  for (const Clip& c : clips) {
    const std::size_t slots = draw == SnrDraw::OnePerClip ? 1 : grid.size();
    for (std::size_t s = 0; s < slots; ++s) {
      const std::string key = c.clip_id + "#" + std::to_string(s);
      Rng rng = make_rng(derive_seed(seed, "mix-draw", key));
      const NoiseInstance& n = *noises[uniform_index(rng, noises.size())];
      const double snr = draw == SnrDraw::OnePerClip ? grid[uniform_index(rng, grid.size())] : grid[s];
      out.push_back({c, make_noisy_clip(c, n, snr, derive_seed(seed, "mix-shift", key))});
    }
  }
  return out;
}

}  // namespace resp
