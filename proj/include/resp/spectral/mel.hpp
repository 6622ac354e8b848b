#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

#include "resp/error.hpp"
#include "resp/seed.hpp"
#include "resp/spectral/stft.hpp"

namespace resp {

inline double hz_to_mel(double f) { return 2595.0 * std::log10(1.0 + f / 700.0); }
inline double mel_to_hz(double m) { return 700.0 * (std::pow(10.0, m / 2595.0) - 1.0); }

/// Triangular mel filters, n_mels rows by fft_size/2+1 columns (row-major).
struct MelFilterbank {
  std::size_t n_mels = 0;
  std::size_t n_bins = 0;
  std::vector<double> centers_hz;
  std::vector<double> weights;

  double at(std::size_t m, std::size_t k) const { return weights[m * n_bins + k]; }
};

/// HTK-style filterbank: n_mels + 2 points equally spaced in mel between
/// fmin and fmax; filter m rises from point m to point m+1 (peak 1) and
/// falls to point m+2.
inline MelFilterbank mel_filterbank(std::size_t n_mels, std::size_t fft_size, int sample_rate, double fmin,
                                    double fmax) {
  if (n_mels == 0) throw Error(Errc::BadRange, "n_mels must be positive");
  if (!(fmin >= 0.0) || !(fmin < fmax)) throw Error(Errc::BadRange, "fmin must be below fmax");
  if (fmax > sample_rate / 2.0 + 1e-9) throw Error(Errc::BadRange, "fmax above Nyquist");
  MelFilterbank fb;
  fb.n_mels = n_mels;
  fb.n_bins = fft_size / 2 + 1;
  fb.weights.assign(n_mels * fb.n_bins, 0.0);
  const double mlo = hz_to_mel(fmin), mhi = hz_to_mel(fmax);
  std::vector<double> pts(n_mels + 2);
  for (std::size_t i = 0; i < pts.size(); ++i)
    pts[i] = mel_to_hz(mlo + (mhi - mlo) * static_cast<double>(i) / static_cast<double>(n_mels + 1));
  // Pin the endpoints so round-off in the mel round trip cannot move them.
  pts.front() = fmin;
  pts.back() = fmax;
  for (std::size_t m = 0; m < n_mels; ++m) {
    const double lo = pts[m], c = pts[m + 1], hi = pts[m + 2];
    fb.centers_hz.push_back(c);
    for (std::size_t k = 0; k < fb.n_bins; ++k) {
      const double f = static_cast<double>(k) * sample_rate / static_cast<double>(fft_size);
      double w = 0.0;
      if (f > lo && f <= c) w = (f - lo) / (c - lo);
      else if (f > c && f < hi) w = (hi - f) / (hi - c);
      fb.weights[m * fb.n_bins + k] = w;
    }
  }
  return fb;
}

/// Real-valued time-frequency feature, rows x frames, row-major.
struct MelSpec {
  std::size_t n_mels = 0;
  std::size_t frames = 0;
  std::vector<double> data;

  double& at(std::size_t m, std::size_t t) { return data[m * frames + t]; }
  double at(std::size_t m, std::size_t t) const { return data[m * frames + t]; }

  double mean() const {
    long double s = 0.0L;
    for (double v : data) s += v;
    return data.empty() ? 0.0 : static_cast<double>(s / static_cast<long double>(data.size()));
  }
};

struct LogMelConfig {
  StftConfig stft = StftConfig::classifier();
  std::size_t n_mels = 64;
  double fmin = 25.0;
  double fmax = 8000.0;
  double epsilon = 1e-10;
};

/// log(mel_matrix * |STFT|^2 + epsilon), natural log.
inline MelSpec log_mel(const Waveform& w, const LogMelConfig& cfg = {}) {
  const ComplexSpectrogram spec = stft(w, cfg.stft);
  const MelFilterbank fb = mel_filterbank(cfg.n_mels, cfg.stft.fft_size, w.sample_rate, cfg.fmin,
                                          std::min(cfg.fmax, w.sample_rate / 2.0));
  MelSpec out;
  out.n_mels = cfg.n_mels;
  out.frames = spec.frames;
  out.data.assign(out.n_mels * out.frames, 0.0);
  std::vector<double> power(fb.n_bins);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    for (std::size_t k = 0; k < fb.n_bins; ++k) power[k] = std::norm(spec.at(t, k));
    for (std::size_t m = 0; m < cfg.n_mels; ++m) {
      double acc = 0.0;
      const double* row = &fb.weights[m * fb.n_bins];
      for (std::size_t k = 0; k < fb.n_bins; ++k) acc += row[k] * power[k];
      out.at(m, t) = std::log(acc + cfg.epsilon);
    }
  }
  return out;
}

/// Averages non-overlapping groups of `factor` frames; a trailing partial
/// group is averaged over what it has.
inline MelSpec pool_time(const MelSpec& m, std::size_t factor) {
  if (factor == 0) throw Error(Errc::InvalidArgument, "pool factor must be positive");
  if (factor == 1) return m;
  MelSpec out;
  out.n_mels = m.n_mels;
  out.frames = (m.frames + factor - 1) / factor;
  out.data.assign(out.n_mels * out.frames, 0.0);
  for (std::size_t r = 0; r < m.n_mels; ++r)
    for (std::size_t t = 0; t < out.frames; ++t) {
      const std::size_t b = t * factor, e = std::min(m.frames, b + factor);
      double acc = 0.0;
      for (std::size_t i = b; i < e; ++i) acc += m.at(r, i);
      out.at(r, t) = acc / static_cast<double>(e - b);
    }
  return out;
}

/// Like pool_time, but averages exp(value) and takes the log: for a log-mel
/// input this is the log of the mean band power, which keeps short
/// transients visible.
inline MelSpec pool_time_power(const MelSpec& m, std::size_t factor) {
  if (factor == 0) throw Error(Errc::InvalidArgument, "pool factor must be positive");
  if (factor == 1) return m;
  MelSpec out;
  out.n_mels = m.n_mels;
  out.frames = (m.frames + factor - 1) / factor;
  out.data.assign(out.n_mels * out.frames, 0.0);
  for (std::size_t r = 0; r < m.n_mels; ++r)
    for (std::size_t t = 0; t < out.frames; ++t) {
      const std::size_t b = t * factor, e = std::min(m.frames, b + factor);
      double mx = m.at(r, b);
      for (std::size_t i = b + 1; i < e; ++i) mx = std::max(mx, m.at(r, i));
      double acc = 0.0;
      for (std::size_t i = b; i < e; ++i) acc += std::exp(m.at(r, i) - mx);
      out.at(r, t) = mx + std::log(acc / static_cast<double>(e - b));
    }
  return out;
}

struct SpecAugmentPolicy {
  std::size_t time_masks = 2;
  std::size_t max_time_width = 32;
  std::size_t freq_masks = 2;
  std::size_t max_freq_width = 8;
};

/// Replaces random time and frequency stripes with the spectrogram mean.
/// Widths are drawn uniformly from [0, max] and clamped to the dimensions.
inline MelSpec spec_augment(const MelSpec& m, const SpecAugmentPolicy& p, std::uint64_t seed) {
  MelSpec out = m;
  if (m.data.empty()) return out;
  const double fill = m.mean();
  Rng rng = make_rng(seed);
  for (std::size_t k = 0; k < p.freq_masks; ++k) {
    const std::size_t w = std::min<std::size_t>(m.n_mels, uniform_index(rng, p.max_freq_width + 1));
    const std::size_t start = uniform_index(rng, m.n_mels - w + 1);
    for (std::size_t r = start; r < start + w; ++r)
      for (std::size_t t = 0; t < m.frames; ++t) out.at(r, t) = fill;
  }
  for (std::size_t k = 0; k < p.time_masks; ++k) {
    const std::size_t w = std::min<std::size_t>(m.frames, uniform_index(rng, p.max_time_width + 1));
    const std::size_t start = uniform_index(rng, m.frames - w + 1);
    for (std::size_t r = 0; r < m.n_mels; ++r)
      for (std::size_t t = start; t < start + w; ++t) out.at(r, t) = fill;
  }
  return out;
}

/// Debug dump: one CSV row per mel band.
inline void write_melspec_csv(const MelSpec& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::IoFailure, "cannot open " + path);
  out.precision(9);
  for (std::size_t r = 0; r < m.n_mels; ++r) {
    for (std::size_t t = 0; t < m.frames; ++t) out << (t ? "," : "") << m.at(r, t);
    out << '\n';
  }
}

}  // namespace resp
