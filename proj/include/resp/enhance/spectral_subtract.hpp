#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <vector>

#include "resp/spectral/stft.hpp"

namespace resp {

struct SpectralSubtractConfig {
  double alpha = 1.0;           // over-subtraction factor
  double beta = 0.01;           // spectral floor relative to |Y|
  double quiet_fraction = 0.1;  // frames used for the blind noise estimate
  StftConfig stft = StftConfig::enhancer();
};

/// Mean magnitude per bin over the given frames.
inline std::vector<double> mean_magnitude(const ComplexSpectrogram& s, const std::vector<std::size_t>& frames) {
  std::vector<double> m(s.bins(), 0.0);
  for (auto f : frames)
    for (std::size_t k = 0; k < s.bins(); ++k) m[k] += std::abs(s.at(f, k));
  for (auto& v : m) v /= static_cast<double>(std::max<std::size_t>(1, frames.size()));
  return m;
}

/// |S| = max(|Y| - alpha |N|, beta |Y|) with the noisy phase. |N| is the mean
/// magnitude of `noise_profile`, or of the quietest frames of the input.
inline Waveform spectral_subtract(const Waveform& noisy, const std::optional<Waveform>& noise_profile = std::nullopt,
                                  const SpectralSubtractConfig& cfg = {}) {
  if (noisy.size() < cfg.stft.win_len) throw Error(Errc::SignalTooShort, "input shorter than one analysis window");
  ComplexSpectrogram y = stft(noisy, cfg.stft);
  std::vector<double> nmag;
  if (noise_profile) {
    const ComplexSpectrogram n = stft(*noise_profile, cfg.stft);
    std::vector<std::size_t> all(n.frames);
    std::iota(all.begin(), all.end(), 0);
    nmag = mean_magnitude(n, all);
  } else {
    std::vector<double> e(y.frames, 0.0);
    for (std::size_t f = 0; f < y.frames; ++f)
      for (std::size_t k = 0; k < y.bins(); ++k) e[f] += std::norm(y.at(f, k));
    std::vector<std::size_t> order(y.frames);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return e[a] < e[b]; });
    const auto q = std::max<std::size_t>(1, static_cast<std::size_t>(cfg.quiet_fraction * static_cast<double>(y.frames)));
    order.resize(q);
    nmag = mean_magnitude(y, order);
  }
  for (std::size_t f = 0; f < y.frames; ++f)
    for (std::size_t k = 0; k < y.bins(); ++k) {
      const cplx v = y.at(f, k);
      const double mag = std::abs(v);
      if (mag == 0.0) continue;
      const double target = std::max(mag - cfg.alpha * nmag[k], cfg.beta * mag);
      y.at(f, k) = v * (target / mag);
    }
  return istft(y);
}

}  // namespace resp
