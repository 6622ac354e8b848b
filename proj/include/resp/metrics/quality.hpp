#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "resp/error.hpp"
#include "resp/signal/resample.hpp"
#include "resp/signal/waveform.hpp"
#include "resp/spectral/stft.hpp"

namespace resp {

struct SsnrConfig {
  std::size_t frame = 512;
  std::size_t hop = 256;
  double floor_db = -10.0;
  double ceiling_db = 35.0;
  double activity_range_db = 40.0;  // frames this far below the loudest clean frame are skipped
};

/// Segmental SNR in dB: per-frame clipped SNR averaged over active frames.
inline double ssnr(const Waveform& clean, const Waveform& estimate, const SsnrConfig& cfg = {}) {
  if (clean.size() != estimate.size()) throw Error(Errc::LengthMismatch, "ssnr: signals differ in length");
  const std::size_t n = clean.size();
  const std::size_t frame = std::min(cfg.frame, n);
  const std::size_t frames = (n - frame) / cfg.hop + 1;
  std::vector<double> sig(frames), err(frames);
  double max_sig = 0.0;
  for (std::size_t f = 0; f < frames; ++f) {
    long double s = 0.0L, e = 0.0L;
    for (std::size_t i = f * cfg.hop; i < f * cfg.hop + frame; ++i) {
      const long double d = static_cast<long double>(clean.samples[i]) - estimate.samples[i];
      s += static_cast<long double>(clean.samples[i]) * clean.samples[i];
      e += d * d;
    }
    sig[f] = static_cast<double>(s);
    err[f] = static_cast<double>(e);
    max_sig = std::max(max_sig, sig[f]);
  }
  if (max_sig == 0.0) throw Error(Errc::SilentReference, "ssnr: clean reference is silent");
  const double floor_energy = max_sig * std::pow(10.0, -cfg.activity_range_db / 10.0);
  long double acc = 0.0L;
  std::size_t used = 0;
  for (std::size_t f = 0; f < frames; ++f) {
    if (sig[f] <= floor_energy) continue;
    const double db = err[f] == 0.0 ? cfg.ceiling_db : 10.0 * std::log10(sig[f] / err[f]);
    acc += std::clamp(db, cfg.floor_db, cfg.ceiling_db);
    ++used;
  }
  return static_cast<double>(acc / static_cast<long double>(used));
}

namespace stoi_detail {

constexpr int kRate = 10000;
constexpr std::size_t kFrame = 256;
constexpr std::size_t kHop = 128;
constexpr std::size_t kFft = 512;
constexpr std::size_t kBands = 15;
constexpr double kMinFreq = 150.0;
constexpr std::size_t kSegment = 30;
constexpr double kBeta = -15.0;
constexpr double kDynRange = 40.0;
constexpr double kEps = std::numeric_limits<double>::epsilon();

// Symmetric Hann of length n without its zero endpoints.
inline std::vector<double> hann_inner(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * M_PI * static_cast<double>(i + 1) / static_cast<double>(n + 1));
  return w;
}

// Drops frames of x whose energy is more than kDynRange below the loudest
// frame, applying the same selection to y, and overlap-adds what remains.
inline void remove_silent_frames(std::vector<double>& x, std::vector<double>& y) {
  const auto w = hann_inner(kFrame);
  if (x.size() < kFrame) {
    x.clear();
    y.clear();
    return;
  }
  const std::size_t frames = (x.size() - kFrame) / kHop + 1;
  std::vector<double> energy(frames);
  double max_e = -std::numeric_limits<double>::infinity();
  for (std::size_t f = 0; f < frames; ++f) {
    double s = 0.0;
    for (std::size_t i = 0; i < kFrame; ++i) {
      const double v = x[f * kHop + i] * w[i];
      s += v * v;
    }
    energy[f] = 20.0 * std::log10(std::sqrt(s) + kEps);
    max_e = std::max(max_e, energy[f]);
  }
  std::vector<std::size_t> keep;
  for (std::size_t f = 0; f < frames; ++f)
    if (energy[f] > max_e - kDynRange) keep.push_back(f);
  const std::size_t out_len = keep.empty() ? 0 : (keep.size() - 1) * kHop + kFrame;
  std::vector<double> xo(out_len, 0.0), yo(out_len, 0.0);
  for (std::size_t j = 0; j < keep.size(); ++j)
    for (std::size_t i = 0; i < kFrame; ++i) {
      xo[j * kHop + i] += x[keep[j] * kHop + i] * w[i];
      yo[j * kHop + i] += y[keep[j] * kHop + i] * w[i];
    }
  x = std::move(xo);
  y = std::move(yo);
}

// One-third-octave band edges as FFT-bin ranges [lo, hi).
inline std::vector<std::pair<std::size_t, std::size_t>> third_octave_bins() {
  const std::size_t nbins = kFft / 2 + 1;
  auto nearest = [&](double f) {
    std::size_t best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < nbins; ++k) {
      const double d = std::abs(static_cast<double>(k) * kRate / static_cast<double>(kFft) - f);
      if (d < best_d) {
        best_d = d;
        best = k;
      }
    }
    return best;
  };
  std::vector<std::pair<std::size_t, std::size_t>> bands;
  for (std::size_t b = 0; b < kBands; ++b) {
    const double k = static_cast<double>(b);
    bands.emplace_back(nearest(kMinFreq * std::pow(2.0, (2.0 * k - 1.0) / 6.0)),
                       nearest(kMinFreq * std::pow(2.0, (2.0 * k + 1.0) / 6.0)));
  }
  return bands;
}

// Band envelopes, bands x frames row-major.
inline std::vector<double> band_envelopes(const std::vector<double>& x, std::size_t& frames_out) {
  const auto w = hann_inner(kFrame);
  const auto bands = third_octave_bins();
  // Frame starts 0, hop, ... strictly below len - frame, as in the reference code.
  const std::size_t frames = x.size() > kFrame ? (x.size() - kFrame - 1) / kHop + 1 : 0;
  frames_out = frames;
  std::vector<double> env(kBands * frames, 0.0);
  RealFft fft(kFft);
  std::vector<double> buf(kFft, 0.0);
  std::vector<cplx> spec;
  for (std::size_t f = 0; f < frames; ++f) {
    std::fill(buf.begin(), buf.end(), 0.0);
    for (std::size_t i = 0; i < kFrame; ++i) buf[i] = x[f * kHop + i] * w[i];
    fft.forward(buf, spec);
    for (std::size_t b = 0; b < kBands; ++b) {
      double s = 0.0;
      for (std::size_t k = bands[b].first; k < bands[b].second; ++k) s += std::norm(spec[k]);
      env[b * frames + f] = std::sqrt(s);
    }
  }
  return env;
}

}  // namespace stoi_detail

/// Short-time objective intelligibility. Not clamped to [0, 1].
inline double stoi(const Waveform& clean, const Waveform& estimate) {
  using namespace stoi_detail;
  if (clean.size() != estimate.size()) throw Error(Errc::LengthMismatch, "stoi: signals differ in length");
  if (clean.sample_rate != estimate.sample_rate) throw Error(Errc::InvalidArgument, "stoi: sample rates differ");
  std::vector<double> x = resample(clean, kRate).samples;
  std::vector<double> y = resample(estimate, kRate).samples;
  remove_silent_frames(x, y);
  std::size_t frames = 0, frames_y = 0;
  const auto xe = band_envelopes(x, frames);
  const auto ye = band_envelopes(y, frames_y);
  if (frames < kSegment) throw Error(Errc::TooShort, "stoi: fewer than 30 active frames");

  const double clip = std::pow(10.0, -kBeta / 20.0);
  long double total = 0.0L;
  std::size_t count = 0;
  std::vector<double> xs(kSegment), ys(kSegment);
  for (std::size_t m = kSegment; m <= frames; ++m) {
    for (std::size_t b = 0; b < kBands; ++b) {
      double nx = 0.0, ny = 0.0;
      for (std::size_t j = 0; j < kSegment; ++j) {
        xs[j] = xe[b * frames + m - kSegment + j];
        ys[j] = ye[b * frames + m - kSegment + j];
        nx += xs[j] * xs[j];
        ny += ys[j] * ys[j];
      }
      const double norm_const = std::sqrt(nx) / (std::sqrt(ny) + kEps);
      double mx = 0.0, my = 0.0;
      for (std::size_t j = 0; j < kSegment; ++j) {
        ys[j] = std::min(ys[j] * norm_const, xs[j] * (1.0 + clip));
        mx += xs[j];
        my += ys[j];
      }
      mx /= kSegment;
      my /= kSegment;
      double sxy = 0.0, sxx = 0.0, syy = 0.0;
      for (std::size_t j = 0; j < kSegment; ++j) {
        const double dx = xs[j] - mx, dy = ys[j] - my;
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
      }
      total += sxy / ((std::sqrt(sxx) + kEps) * (std::sqrt(syy) + kEps));
      ++count;
    }
  }
  return static_cast<double>(total / static_cast<long double>(count));
}

struct QualityScores {
  double ssnr_db = 0.0;
  double stoi = 0.0;
};

}  // namespace resp
