#pragma once

#include <cmath>
#include <cstdint>
#include <numeric>
#include <vector>

#include "resp/error.hpp"
#include "resp/signal/waveform.hpp"

namespace resp {

/// Windowed-sinc sample-rate conversion.
///
/// The interpolation kernel is a Kaiser-windowed sinc (beta = 8) spanning 64
/// taps at the lower of the two rates, with its cutoff at the lower Nyquist
/// frequency. For rational ratios with a modest numerator the per-phase taps
/// are tabulated once (polyphase); otherwise taps are evaluated on the fly.
/// Output length is round(len * target / rate). Samples outside the input are
/// treated as zero.
class Resampler {
 public:
  static constexpr double kKaiserBeta = 8.0;
  static constexpr int kTaps = 64;
  static constexpr std::int64_t kMaxTabulatedPhases = 4096;

  Resampler(int from_rate, int to_rate) : from_(from_rate), to_(to_rate) {
    if (from_rate <= 0 || to_rate <= 0) throw Error(Errc::InvalidArgument, "sample rates must be positive");
    const std::int64_t g = std::gcd<std::int64_t>(from_rate, to_rate);
    up_ = to_rate / g;
    down_ = from_rate / g;
    cutoff_ = std::min(1.0, static_cast<double>(to_rate) / from_rate);
    half_width_ = (kTaps / 2) / cutoff_;
    reach_ = static_cast<std::int64_t>(std::ceil(half_width_)) + 1;
    i0_beta_ = std::cyl_bessel_i(0.0, kKaiserBeta);
    if (up_ <= kMaxTabulatedPhases) {
      table_.resize(static_cast<std::size_t>(up_ * 2 * reach_));
      for (std::int64_t ph = 0; ph < up_; ++ph) {
        const double frac = static_cast<double>(ph) / static_cast<double>(up_);
        for (std::int64_t i = 0; i < 2 * reach_; ++i)
          table_[static_cast<std::size_t>(ph * 2 * reach_ + i)] = kernel(frac + static_cast<double>(reach_ - 1 - i));
      }
    }
  }

  std::vector<double> process(const std::vector<double>& in) const {
    const std::size_t n = in.size();
    const auto out_len = static_cast<std::size_t>(
        std::llround(static_cast<double>(n) * static_cast<double>(to_) / static_cast<double>(from_)));
    std::vector<double> out(out_len, 0.0);
    const auto ni = static_cast<std::int64_t>(n);
    for (std::size_t m = 0; m < out_len; ++m) {
      const std::int64_t num = static_cast<std::int64_t>(m) * down_;
      const std::int64_t base = num / up_;
      const std::int64_t phase = num % up_;
      const double frac = static_cast<double>(phase) / static_cast<double>(up_);
      const std::int64_t first = base - reach_ + 1;
      double acc = 0.0;
      if (!table_.empty()) {
        const double* taps = &table_[static_cast<std::size_t>(phase * 2 * reach_)];
        for (std::int64_t i = 0; i < 2 * reach_; ++i) {
          const std::int64_t j = first + i;
          if (j >= 0 && j < ni) acc += in[static_cast<std::size_t>(j)] * taps[i];
        }
      } else {
        for (std::int64_t i = 0; i < 2 * reach_; ++i) {
          const std::int64_t j = first + i;
          if (j >= 0 && j < ni) acc += in[static_cast<std::size_t>(j)] * kernel(frac + static_cast<double>(reach_ - 1 - i));
        }
      }
      out[m] = acc;
    }
    return out;
  }

 private:
  // d is the distance (in input samples) between the output instant and the tap.
  double kernel(double d) const {
    const double r = d / half_width_;
    if (std::abs(r) >= 1.0) return 0.0;
    const double x = cutoff_ * d;
    const double sinc = std::abs(x) < 1e-12 ? 1.0 : std::sin(M_PI * x) / (M_PI * x);
    const double win = std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(1.0 - r * r)) / i0_beta_;
    return cutoff_ * sinc * win;
  }

  int from_, to_;
  std::int64_t up_ = 1, down_ = 1;
  double cutoff_ = 1.0, half_width_ = 32.0, i0_beta_ = 1.0;
  std::int64_t reach_ = 33;
  std::vector<double> table_;
};

/// Converts `w` to `target_rate`. Equal rates return an exact copy.
inline Waveform resample(const Waveform& w, int target_rate) {
  if (target_rate <= 0) throw Error(Errc::InvalidArgument, "target rate must be positive");
  if (target_rate == w.sample_rate) return w;
  Resampler r(w.sample_rate, target_rate);
  return Waveform(r.process(w.samples), target_rate);
}

}  // namespace resp
