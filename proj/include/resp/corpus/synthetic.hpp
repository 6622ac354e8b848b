#pragma once

#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "resp/corpus/clip.hpp"
#include "resp/seed.hpp"
#include "resp/signal/synth.hpp"

namespace resp {

struct SynthCorpusConfig {
  std::size_t clips = 300;
  LabelMode mode = LabelMode::Fabs3;
  std::size_t clips_per_recording = 4;
  double min_cycle_s = 2.5;
  double max_cycle_s = 5.0;
};

inline std::string synth_recording_id(std::size_t r) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "rec%04zu", r);
  return buf;
}

/// Desk-scale stand-in for a recorded corpus. Recordings cycle through the
/// classes so the class counts differ by at most one recording; each clip
/// is one synthetic breath cycle of random length assembled to 10 s.
inline std::vector<Clip> synth_corpus(const SynthCorpusConfig& cfg, std::uint64_t seed) {
  if (cfg.clips == 0 || cfg.clips_per_recording == 0) throw Error(Errc::InvalidArgument, "empty corpus requested");
  if (!(cfg.min_cycle_s > 0.0 && cfg.min_cycle_s <= cfg.max_cycle_s))
    throw Error(Errc::InvalidArgument, "cycle length range is invalid");
  const int k = num_classes(cfg.mode);
  std::vector<Clip> out;
  out.reserve(cfg.clips);
  for (std::size_t i = 0; i < cfg.clips; ++i) {
    const std::size_t rec = i / cfg.clips_per_recording;
    const RespClass cls = class_from_index(static_cast<int>(rec % static_cast<std::size_t>(k)), cfg.mode);
    const std::string rec_id = synth_recording_id(rec);
    const std::string clip_id = rec_id + "-c" + std::to_string(i % cfg.clips_per_recording);
    Rng rng = make_rng(derive_seed(seed, "cycle-length", clip_id));
    const double dur = uniform(rng, cfg.min_cycle_s, cfg.max_cycle_s);
    const Waveform cycle = synth_breath(cls, dur, derive_seed(seed, "cycle", clip_id), cfg.mode);
    out.push_back(assemble_clip(cycle, cls, rec_id, clip_id));
  }
  return out;
}

/// Pluggable clean-reference screen; the default keeps every clip.
using TagFilter = std::function<bool(const Waveform&)>;

inline TagFilter accept_all() {
  return [](const Waveform&) { return true; };
}

inline std::vector<Clip> apply_tag_filter(std::vector<Clip> clips, const TagFilter& keep) {
  std::vector<Clip> out;
  for (auto& c : clips)
    if (keep(c.audio)) out.push_back(std::move(c));
  return out;
}

}  // namespace resp
