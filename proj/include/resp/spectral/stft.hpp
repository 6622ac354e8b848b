#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <vector>

#include "resp/eigen.hpp"
#include <unsupported/Eigen/FFT>

#include "resp/error.hpp"
#include "resp/signal/waveform.hpp"

namespace resp {

using cplx = std::complex<double>;

/// Real-input FFT returning the fft_size/2+1 non-negative-frequency bins.
/// Each instance owns its plan cache, so use one per thread.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) { fft_.SetFlag(Eigen::FFT<double>::HalfSpectrum); }

  std::size_t size() const noexcept { return n_; }

  void forward(const std::vector<double>& x, std::vector<cplx>& out) {
    fft_.fwd(out, x);
  }

  /// Inverse of forward (scaled by 1/n), length n.
  void inverse(const std::vector<cplx>& spec, std::vector<double>& out) {
    fft_.inv(out, spec, static_cast<Eigen::Index>(n_));
  }

 private:
  std::size_t n_;
  Eigen::FFT<double> fft_;
};

/// Periodic Hamming window, 0.54 - 0.46 cos(2 pi n / N).
inline std::vector<double> hamming_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.54 - 0.46 * std::cos(2.0 * M_PI * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

struct StftConfig {
  std::size_t win_len = 512;
  std::size_t hop = 160;
  std::size_t fft_size = 512;
  bool centered = true;

  void validate() const {
    if (win_len == 0 || hop == 0) throw Error(Errc::InvalidArgument, "window and hop must be positive");
    if (hop > win_len) throw Error(Errc::InvalidArgument, "hop exceeds window length");
    if (fft_size < win_len) throw Error(Errc::InvalidArgument, "fft_size smaller than window");
    if ((fft_size & (fft_size - 1)) != 0) throw Error(Errc::InvalidArgument, "fft_size must be a power of two");
  }

  std::size_t bins() const noexcept { return fft_size / 2 + 1; }

  std::size_t frames_for(std::size_t len) const {
    if (centered) return len / hop + 1;
    if (len < win_len) throw Error(Errc::SignalTooShort, "signal shorter than one window");
    return (len - win_len) / hop + 1;
  }

  bool operator==(const StftConfig&) const = default;

  /// Classifier front end: 512-sample Hamming window, hop 160, centered.
  static StftConfig classifier() { return {512, 160, 512, true}; }
  /// 25 ms / 10 ms analysis at 16 kHz.
  static StftConfig enhancer() { return {400, 160, 512, true}; }
  /// 25 ms / 6.25 ms analysis at 16 kHz.
  static StftConfig enhancer_fine() { return {400, 100, 512, true}; }
};

/// frames x bins complex values, frame-major.
struct ComplexSpectrogram {
  StftConfig config;
  std::size_t frames = 0;
  std::size_t signal_length = 0;
  int sample_rate = kCanonicalRate;
  std::vector<cplx> data;

  std::size_t bins() const noexcept { return config.bins(); }
  cplx& at(std::size_t frame, std::size_t bin) { return data[frame * bins() + bin]; }
  const cplx& at(std::size_t frame, std::size_t bin) const { return data[frame * bins() + bin]; }
};

namespace stft_detail {

// Reflect index into [0, n) without repeating the edge sample (numpy "reflect").
inline std::size_t reflect(long long i, long long n) {
  if (n == 1) return 0;
  const long long period = 2 * (n - 1);
  long long m = i % period;
  if (m < 0) m += period;
  return static_cast<std::size_t>(m < n ? m : period - m);
}

}  // namespace stft_detail

/// Short-time Fourier transform with a periodic Hamming window. Centered
/// mode reflection-pads win_len/2 samples on each side and yields
/// len/hop + 1 frames; otherwise frames = (len - win_len)/hop + 1.
inline ComplexSpectrogram stft(const Waveform& w, const StftConfig& cfg) {
  cfg.validate();
  const std::size_t len = w.size();
  if (len == 0) throw Error(Errc::SignalTooShort, "empty signal");
  ComplexSpectrogram s;
  s.config = cfg;
  s.frames = cfg.frames_for(len);
  s.signal_length = len;
  s.sample_rate = w.sample_rate;
  s.data.resize(s.frames * cfg.bins());

  const auto window = hamming_window(cfg.win_len);
  RealFft fft(cfg.fft_size);
  std::vector<double> buf(cfg.fft_size, 0.0);
  std::vector<cplx> spec;
  const long long pad = cfg.centered ? static_cast<long long>(cfg.win_len / 2) : 0;
  const auto n = static_cast<long long>(len);
  for (std::size_t f = 0; f < s.frames; ++f) {
    const long long start = static_cast<long long>(f * cfg.hop) - pad;
    for (std::size_t i = 0; i < cfg.win_len; ++i) {
      const long long j = start + static_cast<long long>(i);
      const double x = (j >= 0 && j < n) ? w.samples[static_cast<std::size_t>(j)]
                                         : w.samples[stft_detail::reflect(j, n)];
      buf[i] = x * window[i];
    }
    fft.forward(buf, spec);
    std::copy(spec.begin(), spec.end(), s.data.begin() + static_cast<std::ptrdiff_t>(f * cfg.bins()));
  }
  return s;
}

/// Overlap-add inverse with squared-window normalization. Exact wherever the
/// summed squared window is non-zero; throws ColaViolation if any output
/// sample is not covered.
inline Waveform istft(const ComplexSpectrogram& s) {
  const StftConfig& cfg = s.config;
  if (cfg.win_len == 0 || cfg.hop == 0 || cfg.fft_size < cfg.win_len)
    throw Error(Errc::InvalidArgument, "invalid STFT configuration");
  const auto window = hamming_window(cfg.win_len);
  const long long pad = cfg.centered ? static_cast<long long>(cfg.win_len / 2) : 0;
  const std::size_t out_len = s.signal_length;
  std::vector<double> acc(out_len, 0.0), norm(out_len, 0.0);
  RealFft fft(cfg.fft_size);
  std::vector<cplx> spec(cfg.bins());
  std::vector<double> frame;
  for (std::size_t f = 0; f < s.frames; ++f) {
    std::copy(s.data.begin() + static_cast<std::ptrdiff_t>(f * cfg.bins()),
              s.data.begin() + static_cast<std::ptrdiff_t>((f + 1) * cfg.bins()), spec.begin());
    fft.inverse(spec, frame);
    const long long start = static_cast<long long>(f * cfg.hop) - pad;
    for (std::size_t i = 0; i < cfg.win_len; ++i) {
      const long long j = start + static_cast<long long>(i);
      if (j < 0 || j >= static_cast<long long>(out_len)) continue;
      acc[static_cast<std::size_t>(j)] += frame[i] * window[i];
      norm[static_cast<std::size_t>(j)] += window[i] * window[i];
    }
  }
  // Samples past the last frame are legitimately uncovered in non-centered
  // mode; they come back as zero.
  const std::size_t covered =
      cfg.centered ? out_len : std::min(out_len, (s.frames == 0 ? 0 : (s.frames - 1) * cfg.hop + cfg.win_len));
  double max_norm = 0.0;
  for (std::size_t i = 0; i < covered; ++i) max_norm = std::max(max_norm, norm[i]);
  for (std::size_t i = 0; i < covered; ++i) {
    if (norm[i] <= 1e-10 * max_norm || norm[i] == 0.0)
      throw Error(Errc::ColaViolation, "window overlap-add vanishes at sample " + std::to_string(i));
    acc[i] /= norm[i];
  }
  for (std::size_t i = covered; i < out_len; ++i) acc[i] = 0.0;
  return Waveform(std::move(acc), s.sample_rate);
}

/// Number of leading samples reconstructed by istft for this geometry.
inline std::size_t istft_covered_length(const StftConfig& cfg, std::size_t len) {
  if (cfg.centered) return len;
  const std::size_t frames = cfg.frames_for(len);
  return std::min(len, (frames - 1) * cfg.hop + cfg.win_len);
}

inline std::vector<double> magnitude(const ComplexSpectrogram& s) {
  std::vector<double> m(s.data.size());
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = std::abs(s.data[i]);
  return m;
}

}  // namespace resp
