#pragma once

#include <atomic>
#include <cstdio>
#include <exception>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "resp/classify/train.hpp"
#include "resp/corpus/manifest.hpp"
#include "resp/corpus/provenance.hpp"
#include "resp/corpus/synthetic.hpp"
#include "resp/enhance/train.hpp"
#include "resp/harness/config.hpp"
#include "resp/metrics/quality.hpp"
#include "resp/metrics/stats.hpp"

namespace resp {

/// Runs fn(0..n-1) on up to `threads` workers. Rethrows the exception of the
/// lowest failing index so failures are reported deterministically.
template <class Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn&& fn) {
  if (threads <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < std::min(threads, n); ++t) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Shortest decimal that round-trips, used in seed keys and file output.
inline std::string format_number(double v) {
  char buf[32];
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

struct ConditionRun {
  std::size_t repeat = 0;
  ScoreSet overall;
  std::vector<ScoreSet> groups;  // one per test-set group
};

struct ConditionResult {
  ExperimentCondition condition = ExperimentCondition::Clean;
  std::size_t test_items = 0;
  std::vector<ConditionRun> runs;
  std::optional<QualityScores> quality;  // of the audio the classifier was tested on

  /// The k x r group ICBHI scores compared by significance tests.
  std::vector<double> icbhi_values() const {
    std::vector<double> v;
    for (const auto& r : runs)
      for (const auto& g : r.groups) v.push_back(g.icbhi_score);
    return v;
  }

  /// Field-wise mean of the per-repeat overall scores.
  ScoreSet mean() const {
    ScoreSet m;
    for (const auto& r : runs) {
      m.accuracy += r.overall.accuracy;
      m.sensitivity += r.overall.sensitivity;
      m.specificity += r.overall.specificity;
      m.icbhi_score += r.overall.icbhi_score;
    }
    const auto n = static_cast<double>(runs.empty() ? 1 : runs.size());
    m.accuracy /= n;
    m.sensitivity /= n;
    m.specificity /= n;
    m.icbhi_score /= n;
    return m;
  }
};

struct GridCell {
  ExperimentCondition condition = ExperimentCondition::Noisy;
  NoiseKind kind = NoiseKind::Friction;
  double snr_db = 0.0;
  std::size_t items = 0;
  ScoreSet score;  // predictions of every repeat pooled
};

struct SignificanceRow {
  std::string a, b;  // H1: mean(a) > mean(b)
  WelchResult welch;
};

struct ProvenanceSummary {
  std::size_t clip_reads[3] = {0, 0, 0};  // indexed by Phase
  std::size_t noise_reads[3] = {0, 0, 0};
  std::size_t violations = 0;
};

struct MetricsReport {
  nlohmann::ordered_json config;
  nlohmann::ordered_json seeds;
  std::vector<ConditionResult> conditions;
  std::vector<GridCell> grid;
  std::vector<SignificanceRow> significance;
  ProvenanceSummary provenance;
};

/// Welch one-tailed comparison of two value sets, H1: mean(a) > mean(b).
inline SignificanceRow compare_runs(const std::string& name_a, const std::vector<double>& a, const std::string& name_b,
                                    const std::vector<double>& b) {
  return {name_a, name_b, welch_t_one_tailed(a, b)};
}

inline SignificanceRow compare_runs(const ConditionResult& a, const ConditionResult& b) {
  return compare_runs(std::string(experiment_condition_name(a.condition)), a.icbhi_values(),
                      std::string(experiment_condition_name(b.condition)), b.icbhi_values());
}

/// The data, models and audit trail of one experiment. Shared artifacts
/// (corpus, mixtures, enhancer, features, classifiers) are built on first
/// use and reused across conditions; classifiers are cached per training
/// corpus, so Clean and Noisy share theirs.
class Experiment {
 public:
  explicit Experiment(ExperimentConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();
    proto_ = build_classifier(cfg_.dataset.mode, 0, cfg_.time_pool);
  }

  const ExperimentConfig& config() const { return cfg_; }
  const ProvenanceAudit& audit() const { return audit_; }

  std::uint64_t seed(std::string_view phase, std::string_view key = {}) const {
    return derive_seed(cfg_.seed, phase, key);
  }

  const std::vector<Clip>& train_clips() { return corpus().train; }
  const std::vector<Clip>& test_clips() { return corpus().test; }
  const NoiseLibrary& noise_library() { return corpus().library; }

  const std::vector<NoisyPair>& train_pairs() {
    if (!train_pairs_)
      train_pairs_ = build_condition_set(train_clips(), noise_library().select(Partition::Train), cfg_.train_snrs,
                                         seed("train-mix"), cfg_.snr_draw);
    return *train_pairs_;
  }

  const std::vector<NoisyPair>& test_pairs() {
    if (!test_pairs_)
      test_pairs_ = build_condition_set(test_clips(), noise_library().select(Partition::Test), cfg_.test_snrs,
                                        seed("test-mix"), cfg_.snr_draw);
    return *test_pairs_;
  }

  /// The front end, trained on the training mixtures when it has weights.
  const EnhancerModel& enhancer() {
    if (!enhancer_) {
      EnhancerModel m = build_enhancer(cfg_.enhancer, seed("enhancer-init"));
      if (cfg_.enhancer != EnhancerKind::SpectralSubtract) {
        std::vector<WavePair> pairs;
        for (const auto& p : train_pairs()) {
          audit_.read(Phase::TrainEnhancer, p.clean);
          audit_.read(Phase::TrainEnhancer, p.noisy);
          pairs.push_back({&p.noisy.audio, &p.clean.audio});
        }
        EnhTrainConfig tc = cfg_.enhancer_train;
        tc.seed = seed("enhancer-train");
        enhancer_history_ = train_enhancer(m, pairs, tc).epoch_loss;
        enhancer_trained_ = true;
      }
      enhancer_ = std::move(m);
    }
    return *enhancer_;
  }

  bool enhancer_trained() const { return enhancer_trained_; }

  /// The r classifiers of a condition, trained on first use.
  const std::vector<ClassifierModel>& trained_classifiers(ExperimentCondition c) {
    return classifiers(training_corpus(c));
  }
  const std::vector<double>& enhancer_history() const { return enhancer_history_; }

  /// Runs one condition: r classifiers trained on the condition's training
  /// corpus, each scored on the condition's test corpus and its k groups.
  ConditionResult run(ExperimentCondition c) {
    const Corpus& tr = training_corpus(c);
    const Corpus& te = test_corpus(c);
    const auto& models = classifiers(tr);
    ConditionResult res;
    res.condition = c;
    res.test_items = te.clips.size();
    for (const Clip& clip : te.clips) audit_.read(Phase::Evaluate, clip);
    const auto groups = test_groups(te);
    for (std::size_t r = 0; r < models.size(); ++r) {
      const auto preds = predict_batch(models[r], te.feature_ptrs());
      ConditionRun run;
      run.repeat = r;
      std::vector<std::vector<std::pair<RespClass, RespClass>>> by_group(cfg_.evaluation.groups);
      std::vector<std::pair<RespClass, RespClass>> all;
      for (std::size_t i = 0; i < preds.size(); ++i) {
        all.push_back({te.clips[i].label, preds[i].predicted});
        by_group[groups[i]].push_back(all.back());
      }
      run.overall = score(confusion(all, cfg_.dataset.mode), cfg_.evaluation.sensitivity);
      for (const auto& g : by_group) run.groups.push_back(score(confusion(g, cfg_.dataset.mode), cfg_.evaluation.sensitivity));
      res.runs.push_back(std::move(run));
    }
    if (cfg_.evaluation.quality && c != ExperimentCondition::Clean) res.quality = quality(te);
    return res;
  }

  /// Per noise kind x test SNR: the test set re-mixed with that kind's test
  /// instances at that SNR, scored with every repeat's classifier pooled.
  /// The Clean condition has no noisy test data and is rejected.
  std::vector<GridCell> grid(ExperimentCondition c) {
    if (c == ExperimentCondition::Clean)
      throw Error(Errc::ConfigError, "the clean condition has no SNR grid; use the noisy condition");
    const auto& models = classifiers(training_corpus(c));
    std::vector<GridCell> cells;
    for (NoiseKind kind : kAllNoiseKinds)
      for (double snr : cfg_.test_snrs) {
        const Corpus& te = grid_corpus(kind, snr, c == ExperimentCondition::AudioEnhancement);
        for (const Clip& clip : te.clips) audit_.read(Phase::Evaluate, clip);
        std::vector<std::pair<RespClass, RespClass>> tp;
        for (const auto& m : models) {
          const auto preds = predict_batch(m, te.feature_ptrs());
          for (std::size_t i = 0; i < preds.size(); ++i) tp.push_back({te.clips[i].label, preds[i].predicted});
        }
        cells.push_back({c, kind, snr, te.clips.size(), score(confusion(tp, cfg_.dataset.mode), cfg_.evaluation.sensitivity)});
      }
    return cells;
  }

  ProvenanceSummary provenance() const {
    ProvenanceSummary s;
    for (const auto& e : audit_.events()) {
      auto& slot = e.is_noise ? s.noise_reads : s.clip_reads;
      ++slot[static_cast<int>(e.phase)];
    }
    s.violations = audit_.violations().size();
    return s;
  }

  /// Seeds actually used, keyed by purpose.
  nlohmann::ordered_json seed_record() const {
    nlohmann::ordered_json j;
    j["master"] = cfg_.seed;
    for (const char* p : {"corpus", "split", "noise-library", "train-mix", "test-mix", "enhancer-init",
                          "enhancer-train", "test-groups"})
      j[p] = seed(p);
    nlohmann::ordered_json init = nlohmann::ordered_json::array(), train = nlohmann::ordered_json::array();
    for (std::size_t r = 0; r < cfg_.evaluation.repeats; ++r) {
      init.push_back(seed("classifier-init", "r" + std::to_string(r)));
      train.push_back(seed("classifier-train", "r" + std::to_string(r)));
    }
    j["classifier-init"] = init;
    j["classifier-train"] = train;
    return j;
  }

  /// Runs every configured condition (and the SNR grid when asked), checks
  /// the provenance audit, and assembles the report. Nothing is returned if
  /// any step fails.
  MetricsReport report(bool with_grid = false) {
    MetricsReport rep;
    rep.config = config_to_json(cfg_);
    rep.seeds = seed_record();
    for (auto c : cfg_.conditions) rep.conditions.push_back(run(c));
    if (with_grid)
      for (auto c : cfg_.conditions)
        if (c != ExperimentCondition::Clean) {
          auto cells = grid(c);
          rep.grid.insert(rep.grid.end(), cells.begin(), cells.end());
        }
    for (std::size_t i = 0; i < rep.conditions.size(); ++i)
      for (std::size_t j = i + 1; j < rep.conditions.size(); ++j) {
        const auto& a = rep.conditions[i];
        const auto& b = rep.conditions[j];
        if (a.runs.size() * cfg_.evaluation.groups < 2) continue;
        const bool a_first = a.mean().icbhi_score >= b.mean().icbhi_score;
        rep.significance.push_back(a_first ? compare_runs(a, b) : compare_runs(b, a));
      }
    audit_.assert_no_leakage();
    rep.provenance = provenance();
    return rep;
  }

 private:
  struct CorpusData {
    std::vector<Clip> train, test;
    NoiseLibrary library;
  };

  // A set of clips with cached classifier features.
  struct Corpus {
    std::string key;
    std::vector<Clip> clips;
    std::vector<MelSpec> features;
    std::vector<const Clip*> clean_refs;  // matching clean clip per item, if any

    std::vector<const MelSpec*> feature_ptrs() const {
      std::vector<const MelSpec*> v;
      for (const auto& f : features) v.push_back(&f);
      return v;
    }
  };

  const CorpusData& corpus() {
    if (!corpus_) {
      std::vector<Clip> clips;
      if (cfg_.dataset.source == DatasetSource::Synthetic) {
        SynthCorpusConfig sc;
        sc.clips = cfg_.dataset.clips;
        sc.mode = cfg_.dataset.mode;
        sc.clips_per_recording = cfg_.dataset.clips_per_recording;
        clips = synth_corpus(sc, seed("corpus"));
      } else {
        clips = load_manifest_clips(cfg_.dataset.manifest, cfg_.dataset.mode);
      }
      SplitSpec spec = cfg_.split;
      spec.seed = seed("split");
      auto [train, test] = split_dataset(clips, spec);
      corpus_ = std::make_unique<CorpusData>();
      corpus_->train = std::move(train);
      corpus_->test = std::move(test);
      corpus_->library = build_noise_library(cfg_.noise, seed("noise-library"));
    }
    return *corpus_;
  }

  static std::vector<Clip> load_manifest_clips(const std::filesystem::path& path, LabelMode mode) {
    std::vector<Clip> out;
    for (const auto& r : read_manifest(path)) {
      if (r.condition != "clean") continue;
      std::filesystem::path p(r.path);
      if (p.is_relative()) p = path.parent_path() / p;
      out.push_back(assemble_clip(load_wav(p), parse_class(r.label, mode), r.source_id, r.clip_id));
    }
    if (out.empty()) throw Error(Errc::EmptyDataset, "manifest " + path.string() + " lists no clean clips");
    return out;
  }

  // Audio is dropped after feature extraction unless `keep_audio`; only
  // quality scoring reads it later.
  Corpus& make_corpus(const std::string& key, std::vector<Clip> clips, std::vector<const Clip*> clean_refs,
                      bool keep_audio) {
    auto c = std::make_unique<Corpus>();
    c->key = key;
    c->clips = std::move(clips);
    c->clean_refs = std::move(clean_refs);
    c->features.resize(c->clips.size());
    parallel_for(c->clips.size(), cfg_.threads,
                 [&](std::size_t i) { c->features[i] = classifier_features(c->clips[i].audio, proto_); });
    if (!keep_audio)
      for (auto& clip : c->clips) clip.audio.samples = {};
    auto& slot = corpora_[key];
    slot = std::move(c);
    return *slot;
  }

  std::vector<Clip> enhance_all(const std::vector<Clip>& noisy) {
    const EnhancerModel& m = enhancer();
    std::vector<Clip> out(noisy.size());
    parallel_for(noisy.size(), cfg_.threads, [&](std::size_t i) {
      out[i] = noisy[i];
      out[i].audio = enhance(m, noisy[i].audio);
      out[i].condition = Condition::Enhanced;
    });
    return out;
  }

  // "clean", "noisy" or "enhanced" on the train side.
  const Corpus& training_corpus(ExperimentCondition c) {
    const std::string key = c == ExperimentCondition::NoiseInjection     ? "train/noisy"
                            : c == ExperimentCondition::AudioEnhancement ? "train/enhanced"
                                                                         : "train/clean";
    if (auto it = corpora_.find(key); it != corpora_.end()) return *it->second;
    std::vector<Clip> clips;
    if (key == "train/clean") {
      clips = train_clips();
    } else {
      std::vector<Clip> noisy;
      for (const auto& p : train_pairs()) noisy.push_back(p.noisy);
      clips = key == "train/noisy" ? std::move(noisy) : enhance_all(noisy);
    }
    return make_corpus(key, std::move(clips), {}, false);
  }

  const Corpus& test_corpus(ExperimentCondition c) {
    const std::string key = c == ExperimentCondition::Clean              ? "test/clean"
                            : c == ExperimentCondition::AudioEnhancement ? "test/enhanced"
                                                                         : "test/noisy";
    if (auto it = corpora_.find(key); it != corpora_.end()) return *it->second;
    std::vector<Clip> clips;
    std::vector<const Clip*> refs;
    if (key == "test/clean") {
      clips = test_clips();
    } else {
      std::vector<Clip> noisy;
      for (const auto& p : test_pairs()) {
        noisy.push_back(p.noisy);
        refs.push_back(&p.clean);
      }
      clips = key == "test/noisy" ? std::move(noisy) : enhance_all(noisy);
    }
    return make_corpus(key, std::move(clips), std::move(refs), true);
  }

  const Corpus& grid_corpus(NoiseKind kind, double snr, bool enhanced) {
    const std::string cell = noise_kind_name(kind) + "@" + format_number(snr);
    const std::string key = std::string(enhanced ? "grid-enhanced/" : "grid-noisy/") + cell;
    if (auto it = corpora_.find(key); it != corpora_.end()) return *it->second;
    auto& pairs = grid_pairs_[cell];
    if (pairs.empty())
      pairs = build_condition_set(test_clips(), noise_library().select(Partition::Test, kind), {snr},
                                  seed("grid-mix", cell), SnrDraw::OnePerClip);
    std::vector<Clip> noisy;
    std::vector<const Clip*> refs;
    for (const auto& p : pairs) {
      noisy.push_back(p.noisy);
      refs.push_back(&p.clean);
    }
    return make_corpus(key, enhanced ? enhance_all(noisy) : std::move(noisy), std::move(refs), false);
  }

  const std::vector<ClassifierModel>& classifiers(const Corpus& tr) {
    if (auto it = classifiers_.find(tr.key); it != classifiers_.end()) return it->second;
    ClfDataset data;
    data.mode = cfg_.dataset.mode;
    data.features = tr.features;
    for (const auto& c : tr.clips) {
      audit_.read(Phase::TrainClassifier, c);
      data.labels.push_back(c.label);
    }
    std::vector<ClassifierModel> models(cfg_.evaluation.repeats);
    parallel_for(models.size(), cfg_.threads, [&](std::size_t r) {
      const std::string key = "r" + std::to_string(r);
      models[r] = build_classifier(cfg_.dataset.mode, seed("classifier-init", key), cfg_.time_pool);
      ClfTrainConfig tc = cfg_.classifier;
      tc.seed = seed("classifier-train", key);
      train_classifier(models[r], data, tc);
    });
    return classifiers_[tr.key] = std::move(models);
  }

  // Group index per test item: each class's source clips are shuffled and
  // dealt round-robin, and every item follows its source clip.
  std::vector<std::size_t> test_groups(const Corpus& te) {
    const std::size_t k = cfg_.evaluation.groups;
    std::map<std::string, std::size_t> group_of;
    std::map<int, std::vector<std::string>> by_class;
    for (const auto& c : test_clips()) by_class[class_index(c.label)].push_back(c.clip_id);
    for (auto& [cls, ids] : by_class) {
      Rng rng = make_rng(seed("test-groups", std::to_string(cls)));
      shuffle(ids, rng);
      for (std::size_t i = 0; i < ids.size(); ++i) group_of[ids[i]] = i % k;
    }
    std::vector<std::size_t> g;
    for (const auto& c : te.clips) g.push_back(group_of.at(c.clip_id));
    return g;
  }

  QualityScores quality(const Corpus& te) {
    if (te.clean_refs.size() != te.clips.size()) throw Error(Errc::LengthMismatch, "quality needs clean references");
    std::vector<double> s(te.clips.size()), q(te.clips.size());
    parallel_for(te.clips.size(), cfg_.threads, [&](std::size_t i) {
      s[i] = ssnr(te.clean_refs[i]->audio, te.clips[i].audio);
      q[i] = stoi(te.clean_refs[i]->audio, te.clips[i].audio);
    });
    return {sample_mean(s), sample_mean(q)};
  }

  ExperimentConfig cfg_;
  ClassifierModel proto_;  // feature front end only
  ProvenanceAudit audit_;
  std::unique_ptr<CorpusData> corpus_;
  std::optional<std::vector<NoisyPair>> train_pairs_, test_pairs_;
  std::optional<EnhancerModel> enhancer_;
  std::vector<double> enhancer_history_;
  bool enhancer_trained_ = false;
  std::map<std::string, std::unique_ptr<Corpus>> corpora_;
  std::map<std::string, std::vector<NoisyPair>> grid_pairs_;
  std::map<std::string, std::vector<ClassifierModel>> classifiers_;
};

/// One condition end to end.
inline MetricsReport run_condition(ExperimentConfig cfg, ExperimentCondition c) {
  cfg.conditions = {c};
  Experiment e(std::move(cfg));
  return e.report(false);
}

/// Every configured condition, with the SNR grid of the noisy-test ones.
inline MetricsReport snr_grid_report(const ExperimentConfig& cfg) {
  Experiment e(cfg);
  return e.report(true);
}

}  // namespace resp
