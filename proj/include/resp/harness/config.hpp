#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "resp/classify/train.hpp"
#include "resp/corpus/mix.hpp"
#include "resp/corpus/split.hpp"
#include "resp/enhance/train.hpp"
#include "resp/metrics/scores.hpp"
#include "resp/signal/wav.hpp"

namespace resp {

/// Train/test regimes compared by the harness.
enum class ExperimentCondition { Clean, Noisy, NoiseInjection, AudioEnhancement };

inline constexpr ExperimentCondition kAllConditions[] = {ExperimentCondition::Clean, ExperimentCondition::Noisy,
                                                         ExperimentCondition::NoiseInjection,
                                                         ExperimentCondition::AudioEnhancement};

inline std::string_view experiment_condition_name(ExperimentCondition c) {
  switch (c) {
    case ExperimentCondition::Clean: return "clean";
    case ExperimentCondition::Noisy: return "noisy";
    case ExperimentCondition::NoiseInjection: return "noise-injection";
    case ExperimentCondition::AudioEnhancement: return "audio-enhancement";
  }
  return "?";
}

inline ExperimentCondition parse_experiment_condition(std::string_view s) {
  for (auto c : kAllConditions)
    if (experiment_condition_name(c) == s) return c;
  throw Error(Errc::ConfigError, "unknown condition '" + std::string(s) + "'");
}

enum class DatasetSource { Synthetic, Manifest };

struct DatasetConfig {
  DatasetSource source = DatasetSource::Synthetic;
  LabelMode mode = LabelMode::Fabs3;
  std::size_t clips = 300;
  std::size_t clips_per_recording = 4;
  std::string manifest;  // JSONL of clean clips when source is manifest
};

struct EvaluationConfig {
  std::size_t repeats = 3;  // r; 10 at full scale
  std::size_t groups = 2;   // k test-set groups per repeat
  SensitivityRule sensitivity = SensitivityRule::ExactClass;
  bool quality = true;      // SSNR and STOI of the evaluated test audio
};

/// Everything a run depends on. Child seeds derive from `seed`.
struct ExperimentConfig {
  std::uint64_t seed = 1;
  DatasetConfig dataset;
  SplitSpec split;  // split.seed is ignored; the split seed derives from `seed`
  NoiseLibraryConfig noise;
  std::vector<double> train_snrs = default_train_snrs();
  std::vector<double> test_snrs = default_test_snrs();
  SnrDraw snr_draw = SnrDraw::OnePerClip;
  std::vector<ExperimentCondition> conditions{ExperimentCondition::Clean, ExperimentCondition::Noisy,
                                              ExperimentCondition::AudioEnhancement};
  EnhancerKind enhancer = EnhancerKind::TinyMaskNet;
  EnhTrainConfig enhancer_train = default_enhancer_train();
  ClfTrainConfig classifier;
  std::size_t time_pool = 8;
  EvaluationConfig evaluation;
  std::size_t threads = 1;

  static EnhTrainConfig default_enhancer_train() {
    EnhTrainConfig c;
    c.epochs = 6;
    c.max_segments_per_epoch = 128;
    return c;
  }

  void validate() const {
    if (train_snrs.empty() || test_snrs.empty()) throw Error(Errc::ConfigError, "SNR grids must be nonempty");
    if (evaluation.repeats < 1) throw Error(Errc::ConfigError, "repeats must be at least 1");
    if (evaluation.groups < 1) throw Error(Errc::ConfigError, "groups must be at least 1");
    if (conditions.empty()) throw Error(Errc::ConfigError, "no conditions requested");
    if (time_pool < 1) throw Error(Errc::ConfigError, "time_pool must be at least 1");
    if (threads < 1) throw Error(Errc::ConfigError, "threads must be at least 1");
    if (!(split.train_fraction > 0.0 && split.train_fraction < 1.0))
      throw Error(Errc::ConfigError, "train_fraction must lie in (0, 1)");
    if (dataset.source == DatasetSource::Synthetic && dataset.clips < 4)
      throw Error(Errc::ConfigError, "synthetic corpus needs at least 4 clips");
    if (dataset.source == DatasetSource::Manifest && dataset.manifest.empty())
      throw Error(Errc::ConfigError, "manifest source needs a manifest path");
    std::set<ExperimentCondition> seen;
    for (auto c : conditions)
      if (!seen.insert(c).second)
        throw Error(Errc::ConfigError, "condition listed twice: " + std::string(experiment_condition_name(c)));
    classifier.validate(dataset.mode);
  }
};

namespace config_detail {

using json = nlohmann::json;
using ojson = nlohmann::ordered_json;

// Rejects keys outside `allowed` so that typos fail loudly.
inline void check_keys(const json& j, std::string_view where, std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) throw Error(Errc::ConfigError, std::string(where) + " must be an object");
  for (const auto& [k, v] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || a == k;
    if (!ok) throw Error(Errc::ConfigError, "unknown key '" + k + "' in " + std::string(where));
  }
}

template <class T>
void read(const json& j, std::string_view key, T& out) {
  const auto it = j.find(std::string(key));
  if (it == j.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception& e) {
    throw Error(Errc::ConfigError, "bad value for '" + std::string(key) + "': " + e.what());
  }
}

inline std::string_view group_by_name(GroupBy g) { return g == GroupBy::Recording ? "recording" : "clip"; }
inline GroupBy parse_group_by(std::string_view s) {
  if (s == "recording") return GroupBy::Recording;
  if (s == "clip") return GroupBy::Clip;
  throw Error(Errc::ConfigError, "unknown group_by '" + std::string(s) + "'");
}
inline std::string_view snr_draw_name(SnrDraw d) { return d == SnrDraw::OnePerClip ? "one-per-clip" : "all-per-clip"; }
inline SnrDraw parse_snr_draw(std::string_view s) {
  if (s == "one-per-clip") return SnrDraw::OnePerClip;
  if (s == "all-per-clip") return SnrDraw::AllPerClip;
  throw Error(Errc::ConfigError, "unknown snr draw '" + std::string(s) + "'");
}
inline std::string_view rule_name(SensitivityRule r) { return r == SensitivityRule::ExactClass ? "exact-class" : "pooled"; }
inline SensitivityRule parse_rule(std::string_view s) {
  if (s == "exact-class") return SensitivityRule::ExactClass;
  if (s == "pooled") return SensitivityRule::Pooled;
  throw Error(Errc::ConfigError, "unknown sensitivity rule '" + std::string(s) + "'");
}

}  // namespace config_detail

/// Parses a JSON config. Absent keys keep their defaults; unknown keys and
/// invalid values raise ConfigError.
inline ExperimentConfig config_from_json(const nlohmann::json& j) {
  using namespace config_detail;
  ExperimentConfig c;
  try {
    check_keys(j, "config", {"seed", "dataset", "split", "noise", "snr", "conditions", "enhancer", "classifier",
                             "evaluation", "threads"});
    read(j, "seed", c.seed);
    read(j, "threads", c.threads);
    if (j.contains("dataset")) {
      const auto& d = j["dataset"];
      check_keys(d, "dataset", {"source", "label_mode", "clips", "clips_per_recording", "manifest"});
      std::string source = "synthetic", mode = std::string(mode_name(c.dataset.mode));
      read(d, "source", source);
      read(d, "label_mode", mode);
      if (source == "synthetic") c.dataset.source = DatasetSource::Synthetic;
      else if (source == "manifest") c.dataset.source = DatasetSource::Manifest;
      else throw Error(Errc::ConfigError, "unknown dataset source '" + source + "'");
      c.dataset.mode = parse_mode(mode);
      read(d, "clips", c.dataset.clips);
      read(d, "clips_per_recording", c.dataset.clips_per_recording);
      read(d, "manifest", c.dataset.manifest);
    }
    if (j.contains("split")) {
      const auto& s = j["split"];
      check_keys(s, "split", {"train_fraction", "group_by"});
      read(s, "train_fraction", c.split.train_fraction);
      std::string g = "recording";
      read(s, "group_by", g);
      c.split.group_by = parse_group_by(g);
    }
    if (j.contains("noise")) {
      const auto& n = j["noise"];
      check_keys(n, "noise", {"friction", "environment", "patient", "duration_s", "test_fraction"});
      read(n, "friction", c.noise.friction);
      read(n, "environment", c.noise.environment);
      read(n, "patient", c.noise.patient);
      read(n, "duration_s", c.noise.duration_s);
      read(n, "test_fraction", c.noise.test_fraction);
    }
    if (j.contains("snr")) {
      const auto& s = j["snr"];
      check_keys(s, "snr", {"train", "test", "draw"});
      read(s, "train", c.train_snrs);
      read(s, "test", c.test_snrs);
      std::string d = "one-per-clip";
      read(s, "draw", d);
      c.snr_draw = parse_snr_draw(d);
    }
    if (j.contains("conditions")) {
      c.conditions.clear();
      std::vector<std::string> names;
      read(j, "conditions", names);
      for (const auto& n : names) c.conditions.push_back(parse_experiment_condition(n));
    }
    if (j.contains("enhancer")) {
      const auto& e = j["enhancer"];
      check_keys(e, "enhancer", {"kind", "epochs", "lr", "batch_size", "loss", "max_segments_per_epoch", "segment_s"});
      std::string kind(enhancer_name(c.enhancer)), loss(enh_loss_name(c.enhancer_train.loss));
      read(e, "kind", kind);
      read(e, "loss", loss);
      try {
        c.enhancer = parse_enhancer(kind);
        c.enhancer_train.loss = parse_enh_loss(loss);
      } catch (const Error& err) {
        throw Error(Errc::ConfigError, err.what());
      }
      read(e, "epochs", c.enhancer_train.epochs);
      read(e, "lr", c.enhancer_train.lr);
      read(e, "batch_size", c.enhancer_train.batch_size);
      read(e, "max_segments_per_epoch", c.enhancer_train.max_segments_per_epoch);
      read(e, "segment_s", c.enhancer_train.segment_s);
    }
    if (j.contains("classifier")) {
      const auto& k = j["classifier"];
      check_keys(k, "classifier", {"batch_size", "lr", "iterations", "lambda_triplet", "margin", "mixup_alpha", "mixup",
                                   "spec_augment", "time_masks", "max_time_width", "freq_masks", "max_freq_width",
                                   "time_pool"});
      auto& t = c.classifier;
      read(k, "batch_size", t.batch_size);
      read(k, "lr", t.lr);
      read(k, "iterations", t.iterations);
      read(k, "lambda_triplet", t.lambda_triplet);
      read(k, "margin", t.margin);
      read(k, "mixup_alpha", t.mixup_alpha);
      read(k, "mixup", t.use_mixup);
      read(k, "spec_augment", t.use_spec_augment);
      read(k, "time_masks", t.spec_augment.time_masks);
      read(k, "max_time_width", t.spec_augment.max_time_width);
      read(k, "freq_masks", t.spec_augment.freq_masks);
      read(k, "max_freq_width", t.spec_augment.max_freq_width);
      read(k, "time_pool", c.time_pool);
    }
    if (j.contains("evaluation")) {
      const auto& e = j["evaluation"];
      check_keys(e, "evaluation", {"repeats", "groups", "sensitivity", "quality"});
      read(e, "repeats", c.evaluation.repeats);
      read(e, "groups", c.evaluation.groups);
      read(e, "quality", c.evaluation.quality);
      std::string r(rule_name(c.evaluation.sensitivity));
      read(e, "sensitivity", r);
      c.evaluation.sensitivity = parse_rule(r);
    }
  } catch (const Error& e) {
    if (e.code() == Errc::ConfigError) throw;
    throw Error(Errc::ConfigError, e.what());
  }
  c.validate();
  return c;
}

/// Full config with every default spelled out, in a fixed key order.
inline nlohmann::ordered_json config_to_json(const ExperimentConfig& c) {
  using namespace config_detail;
  ojson j;
  j["seed"] = c.seed;
  j["dataset"] = {{"source", c.dataset.source == DatasetSource::Synthetic ? "synthetic" : "manifest"},
                  {"label_mode", mode_name(c.dataset.mode)},
                  {"clips", c.dataset.clips},
                  {"clips_per_recording", c.dataset.clips_per_recording},
                  {"manifest", c.dataset.manifest}};
  j["split"] = {{"train_fraction", c.split.train_fraction}, {"group_by", group_by_name(c.split.group_by)}};
  j["noise"] = {{"friction", c.noise.friction},
                {"environment", c.noise.environment},
                {"patient", c.noise.patient},
                {"duration_s", c.noise.duration_s},
                {"test_fraction", c.noise.test_fraction}};
  j["snr"] = {{"train", c.train_snrs}, {"test", c.test_snrs}, {"draw", snr_draw_name(c.snr_draw)}};
  ojson conds = ojson::array();
  for (auto k : c.conditions) conds.push_back(experiment_condition_name(k));
  j["conditions"] = conds;
  j["enhancer"] = {{"kind", enhancer_name(c.enhancer)},
                   {"epochs", c.enhancer_train.epochs},
                   {"lr", c.enhancer_train.lr},
                   {"batch_size", c.enhancer_train.batch_size},
                   {"loss", enh_loss_name(c.enhancer_train.loss)},
                   {"max_segments_per_epoch", c.enhancer_train.max_segments_per_epoch},
                   {"segment_s", c.enhancer_train.segment_s}};
  const auto& t = c.classifier;
  j["classifier"] = {{"batch_size", t.batch_size},
                     {"lr", t.lr},
                     {"iterations", t.iterations},
                     {"lambda_triplet", t.lambda_triplet},
                     {"margin", t.margin},
                     {"mixup_alpha", t.mixup_alpha},
                     {"mixup", t.use_mixup},
                     {"spec_augment", t.use_spec_augment},
                     {"time_masks", t.spec_augment.time_masks},
                     {"max_time_width", t.spec_augment.max_time_width},
                     {"freq_masks", t.spec_augment.freq_masks},
                     {"max_freq_width", t.spec_augment.max_freq_width},
                     {"time_pool", c.time_pool}};
  j["evaluation"] = {{"repeats", c.evaluation.repeats},
                     {"groups", c.evaluation.groups},
                     {"sensitivity", rule_name(c.evaluation.sensitivity)},
                     {"quality", c.evaluation.quality}};
  j["threads"] = c.threads;
  return j;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  const std::string text = read_file_bytes(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ConfigError, path.string() + ": " + e.what());
  }
  return config_from_json(j);
}

}  // namespace resp
