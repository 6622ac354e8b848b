#pragma once

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "resp/error.hpp"
#include "resp/signal/waveform.hpp"

namespace resp {

inline constexpr double kClipSeconds = 10.0;
inline constexpr std::size_t kClipSamples = 160000;

enum class Condition { Clean, Noisy, Enhanced };

inline std::string_view condition_name(Condition c) {
  switch (c) {
    case Condition::Clean: return "clean";
    case Condition::Noisy: return "noisy";
    case Condition::Enhanced: return "enhanced";
  }
  return "?";
}

inline Condition parse_condition(std::string_view s) {
  if (s == "clean") return Condition::Clean;
  if (s == "noisy") return Condition::Noisy;
  if (s == "enhanced") return Condition::Enhanced;
  throw Error(Errc::ParseError, "unknown condition '" + std::string(s) + "'");
}

/// Which side of the train/test split an item belongs to.
enum class Partition { Train, Test };

inline std::string_view partition_name(Partition p) { return p == Partition::Train ? "train" : "test"; }

struct NoiseMeta {
  NoiseKind kind = NoiseKind::Environment;
  std::string noise_id;  // library instance, e.g. "patient-3"
  double snr_db = 0.0;
  std::size_t shift_samples = 0;
  double gain = 0.0;
  Partition partition = Partition::Train;  // side of the noise-library split the instance is on

  bool operator==(const NoiseMeta&) const = default;
};

/// Fixed-length labeled example. `noise` is set iff condition != Clean.
struct Clip {
  Waveform audio;
  RespClass label = RespClass::Normal;
  std::string source_id;  // recording the clip came from; the split groups on it
  std::string clip_id;    // unique per clean clip, shared by its noisy/enhanced versions
  Condition condition = Condition::Clean;
  std::optional<NoiseMeta> noise;
  Partition partition = Partition::Train;

  void validate() const {
    if (audio.size() != kClipSamples)
      throw Error(Errc::InvalidArgument, "clip " + clip_id + " is not " + std::to_string(kClipSamples) + " samples");
    if (noise.has_value() == (condition == Condition::Clean))
      throw Error(Errc::InvalidArgument, "clip " + clip_id + ": noise metadata must accompany non-clean clips");
  }
};

struct NoisyPair {
  Clip clean;
  Clip noisy;
};

struct CycleAnnotation {
  double start_s = 0.0;
  double end_s = 0.0;
  bool crackle = false;
  bool wheeze = false;

  RespClass label() const {
    if (crackle && wheeze) return RespClass::Both;
    if (crackle) return RespClass::Crackle;
    if (wheeze) return RespClass::Wheeze;
    return RespClass::Normal;
  }
};

/// Parses "start end crackle wheeze" lines. Blank lines are skipped; line
/// numbers in errors are 1-based.
inline std::vector<CycleAnnotation> parse_cycle_annotations(std::string_view text) {
  std::vector<CycleAnnotation> out;
  std::size_t line_no = 0, pos = 0;
  while (pos <= text.size()) {
    const std::size_t nl = text.find('\n', pos);
    const std::string line(text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos));
    pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fail = [&](const std::string& why) {
      return Error(Errc::ParseError, "line " + std::to_string(line_no) + ": " + why);
    };
    std::istringstream is(line);
    std::string f[5];
    int n = 0;
    while (n < 5 && is >> f[n]) ++n;
    if (n != 4) throw fail("expected 4 fields");
    CycleAnnotation c;
    try {
      std::size_t used = 0;
      c.start_s = std::stod(f[0], &used);
      if (used != f[0].size()) throw fail("bad start time");
      c.end_s = std::stod(f[1], &used);
      if (used != f[1].size()) throw fail("bad end time");
    } catch (const std::logic_error&) {
      throw fail("bad time value");
    }
    auto flag = [&](const std::string& s) {
      if (s == "0") return false;
      if (s == "1") return true;
      throw fail("flag must be 0 or 1, got '" + s + "'");
    };
    c.crackle = flag(f[2]);
    c.wheeze = flag(f[3]);
    if (!(c.start_s >= 0.0) || !(c.start_s < c.end_s)) throw fail("cycle must satisfy 0 <= start < end");
    out.push_back(c);
  }
  return out;
}

/// Samples of `recording` covered by the cycle, clamped to the recording.
inline Waveform cycle_audio(const Waveform& recording, const CycleAnnotation& c) {
  const auto b = std::min(recording.size(), samples_for(c.start_s, recording.sample_rate));
  const auto e = std::min(recording.size(), samples_for(c.end_s, recording.sample_rate));
  return Waveform(std::vector<double>(recording.samples.begin() + static_cast<std::ptrdiff_t>(b),
                                      recording.samples.begin() + static_cast<std::ptrdiff_t>(e)),
                  recording.sample_rate);
}

/// Repeats the cycle end to end, then truncates to exactly 10 s.
inline Clip assemble_clip(const Waveform& cycle, RespClass label, std::string source_id = {},
                          std::string clip_id = {}) {
  if (cycle.empty()) throw Error(Errc::EmptyCycle, "cycle has no samples");
  if (cycle.sample_rate != kCanonicalRate)
    throw Error(Errc::InvalidArgument, "cycle must be at 16 kHz; resample first");
  Clip clip;
  clip.audio.sample_rate = kCanonicalRate;
  clip.audio.samples.resize(kClipSamples);
  for (std::size_t i = 0; i < kClipSamples; ++i) clip.audio.samples[i] = cycle.samples[i % cycle.size()];
  clip.label = label;
  clip.source_id = std::move(source_id);
  clip.clip_id = std::move(clip_id);
  return clip;
}

}  // namespace resp
