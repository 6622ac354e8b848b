#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "resp/error.hpp"

namespace resp {

inline constexpr int kCanonicalRate = 16000;

/// Mono sampled audio. Amplitudes are nominally in [-1, 1].
struct Waveform {
  std::vector<double> samples;
  int sample_rate = kCanonicalRate;

  Waveform() = default;
  Waveform(std::vector<double> s, int rate) : samples(std::move(s)), sample_rate(rate) {}

  static Waveform zeros(std::size_t n, int rate = kCanonicalRate) {
    return Waveform(std::vector<double>(n, 0.0), rate);
  }

  std::size_t size() const noexcept { return samples.size(); }
  bool empty() const noexcept { return samples.empty(); }
  double duration_s() const noexcept {
    return static_cast<double>(samples.size()) / static_cast<double>(sample_rate);
  }
  double operator[](std::size_t i) const { return samples[i]; }
  double& operator[](std::size_t i) { return samples[i]; }

  bool operator==(const Waveform&) const = default;

  /// Throws InvalidArgument when the invariants (rate > 0, length >= 1,
  /// finite samples) do not hold.
  void validate() const {
    if (sample_rate <= 0) throw Error(Errc::InvalidArgument, "sample rate must be positive");
    if (samples.empty()) throw Error(Errc::InvalidArgument, "waveform is empty");
    for (double x : samples)
      if (!std::isfinite(x)) throw Error(Errc::InvalidArgument, "waveform has non-finite samples");
  }
};

inline std::size_t samples_for(double seconds, int rate = kCanonicalRate) {
  return static_cast<std::size_t>(std::llround(seconds * rate));
}

/// sqrt(mean(x^2)); 0 for an empty or all-zero signal.
inline double rms(const std::vector<double>& x) {
  if (x.empty()) return 0.0;
  long double acc = 0.0L;
  for (double v : x) acc += static_cast<long double>(v) * v;
  return static_cast<double>(std::sqrt(acc / static_cast<long double>(x.size())));
}

inline double rms(const Waveform& w) { return rms(w.samples); }

inline double energy(const std::vector<double>& x) {
  long double acc = 0.0L;
  for (double v : x) acc += static_cast<long double>(v) * v;
  return static_cast<double>(acc);
}

inline double peak(const std::vector<double>& x) {
  double p = 0.0;
  for (double v : x) p = std::max(p, std::abs(v));
  return p;
}

/// Scales so the largest |sample| equals `target`. Silent input is left as is.
/// Returns the applied gain.
inline double peak_normalize(std::vector<double>& x, double target = 0.9) {
  const double p = peak(x);
  if (p <= 0.0) return 1.0;
  const double g = target / p;
  for (double& v : x) v *= g;
  return g;
}

// ---------------------------------------------------------------------------
// Label vocabulary

/// Respiratory class. In the 3-class (FABS-style) mode, Crackle denotes a
/// coarse crackle and Both is not a valid label.
enum class RespClass { Normal = 0, Crackle = 1, Wheeze = 2, Both = 3 };

enum class LabelMode { Icbhi4, Fabs3 };

inline constexpr int num_classes(LabelMode m) { return m == LabelMode::Icbhi4 ? 4 : 3; }

inline constexpr int class_index(RespClass c) { return static_cast<int>(c); }

inline bool valid_in_mode(RespClass c, LabelMode m) {
  return class_index(c) < num_classes(m);
}

inline RespClass class_from_index(int i, LabelMode m) {
  if (i < 0 || i >= num_classes(m))
    throw Error(Errc::InvalidClass, "class index " + std::to_string(i) + " out of range");
  return static_cast<RespClass>(i);
}

inline std::string class_name(RespClass c, LabelMode m = LabelMode::Icbhi4) {
  switch (c) {
    case RespClass::Normal: return "Normal";
    case RespClass::Crackle: return m == LabelMode::Fabs3 ? "CoarseCrackle" : "Crackle";
    case RespClass::Wheeze: return "Wheeze";
    case RespClass::Both: return "Both";
  }
  return "?";
}

inline RespClass parse_class(std::string_view s, LabelMode m) {
  RespClass c;
  if (s == "Normal") c = RespClass::Normal;
  else if (s == "Crackle" || s == "CoarseCrackle") c = RespClass::Crackle;
  else if (s == "Wheeze") c = RespClass::Wheeze;
  else if (s == "Both") c = RespClass::Both;
  else throw Error(Errc::InvalidClass, "unknown class '" + std::string(s) + "'");
  if (!valid_in_mode(c, m)) throw Error(Errc::InvalidClass, "class '" + std::string(s) + "' invalid in this mode");
  return c;
}

inline std::vector<std::string> class_names(LabelMode m) {
  std::vector<std::string> out;
  for (int i = 0; i < num_classes(m); ++i) out.push_back(class_name(static_cast<RespClass>(i), m));
  return out;
}

inline std::string_view mode_name(LabelMode m) { return m == LabelMode::Icbhi4 ? "icbhi4" : "fabs3"; }

inline LabelMode parse_mode(std::string_view s) {
  if (s == "icbhi4") return LabelMode::Icbhi4;
  if (s == "fabs3") return LabelMode::Fabs3;
  throw Error(Errc::ConfigError, "unknown label mode '" + std::string(s) + "'");
}

enum class NoiseKind { Friction = 0, Environment = 1, Patient = 2 };

inline constexpr std::array<NoiseKind, 3> kAllNoiseKinds{NoiseKind::Friction, NoiseKind::Environment,
                                                         NoiseKind::Patient};

inline std::string noise_kind_name(NoiseKind k) {
  switch (k) {
    case NoiseKind::Friction: return "friction";
    case NoiseKind::Environment: return "environment";
    case NoiseKind::Patient: return "patient";
  }
  return "?";
}

inline NoiseKind parse_noise_kind(std::string_view s) {
  if (s == "friction") return NoiseKind::Friction;
  if (s == "environment") return NoiseKind::Environment;
  if (s == "patient") return NoiseKind::Patient;
  throw Error(Errc::InvalidArgument, "unknown noise kind '" + std::string(s) + "'");
}

}  // namespace resp
