#pragma once

#include <json.hpp>

// A seconds-scale experiment: few clips, short training, two repeats.
namespace smallcfg {

inline nlohmann::json tiny() {
  return nlohmann::json::parse(R"({
    "seed": 11,
    "dataset": {"clips": 24, "clips_per_recording": 3},
    "noise": {"friction": 4, "environment": 4, "patient": 4},
    "snr": {"test": [0, 10]},
    "conditions": ["clean", "noisy", "audio-enhancement"],
    "enhancer": {"epochs": 1, "max_segments_per_epoch": 8, "batch_size": 4},
    "classifier": {"batch_size": 6, "iterations": 15},
    "evaluation": {"repeats": 2, "groups": 2}
  })");
}

}  // namespace smallcfg
