#pragma once

#include <mutex>
#include <string>
#include <string_view>
#include <vector>

#include "resp/corpus/clip.hpp"
#include "resp/corpus/mix.hpp"

namespace resp {

enum class Phase { TrainEnhancer, TrainClassifier, Evaluate };

inline std::string_view phase_name(Phase p) {
  switch (p) {
    case Phase::TrainEnhancer: return "train-enhancer";
    case Phase::TrainClassifier: return "train-classifier";
    case Phase::Evaluate: return "evaluate";
  }
  return "?";
}

inline bool is_training(Phase p) { return p != Phase::Evaluate; }

struct ReadEvent {
  Phase phase = Phase::Evaluate;
  std::string item;  // clip id or noise instance id
  bool is_noise = false;
  Partition partition = Partition::Train;
};

/// Records every clip and noise instance a pipeline phase consumes. A
/// training-phase read of anything on the test side is a leak. Thread-safe.
class ProvenanceAudit {
 public:
  void read(Phase phase, const Clip& clip) {
    std::lock_guard lk(mu_);
    events_.push_back({phase, clip.clip_id, false, clip.partition});
    if (clip.noise) events_.push_back({phase, clip.noise->noise_id, true, clip.noise->partition});
  }

  void read(Phase phase, const NoiseInstance& noise) {
    std::lock_guard lk(mu_);
    events_.push_back({phase, noise.id(), true, noise.partition});
  }

  std::vector<ReadEvent> events() const {
    std::lock_guard lk(mu_);
    return events_;
  }

  std::vector<ReadEvent> violations() const {
    std::lock_guard lk(mu_);
    std::vector<ReadEvent> out;
    for (const auto& e : events_)
      if (is_training(e.phase) && e.partition == Partition::Test) out.push_back(e);
    return out;
  }

  std::size_t count(Phase phase, bool noise) const {
    std::lock_guard lk(mu_);
    std::size_t n = 0;
    for (const auto& e : events_) n += (e.phase == phase && e.is_noise == noise) ? 1 : 0;
    return n;
  }

  /// Throws LeakageDetected naming the first offending read.
  void assert_no_leakage() const {
    const auto v = violations();
    if (!v.empty())
      throw Error(Errc::LeakageDetected, std::string(phase_name(v.front().phase)) + " read test-side " +
                                             (v.front().is_noise ? "noise " : "clip ") + v.front().item);
  }

 private:
  mutable std::mutex mu_;
  std::vector<ReadEvent> events_;
};

}  // namespace resp
