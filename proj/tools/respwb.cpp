// respwb: command-line front end of the respiratory-sound workbench.

#include <filesystem>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "resp/annotate.hpp"
#include "resp/harness.hpp"

namespace fs = std::filesystem;
using namespace resp;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("-c,--config", c.config, "experiment config (JSON); defaults apply when omitted")
      ->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "override the master seed");
  cmd->add_option("--threads", c.threads, "override the worker thread count");
}

ExperimentConfig resolve(const Common& c) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_config(c.config);
  if (c.seed) cfg.seed = *c.seed;
  if (c.threads) cfg.threads = *c.threads;
  cfg.validate();
  return cfg;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::IoFailure, "cannot create " + dir.string());
}

// Every command that produces artifacts records the config and seeds used.
void write_run_manifest(const fs::path& dir, const std::string& command, Experiment& e,
                        const std::vector<fs::path>& outputs) {
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const auto& p : outputs) files.push_back(p.lexically_relative(dir).generic_string());
  const nlohmann::ordered_json j{{"command", command},
                                 {"config", config_to_json(e.config())},
                                 {"seeds", e.seed_record()},
                                 {"outputs", files}};
  write_file_bytes(dir / "run_manifest.json", j.dump(2) + "\n");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  for (std::string part; std::getline(ss, part, ',');)
    if (!part.empty()) out.push_back(part);
  return out;
}

// Writes clips as WAV files under dir/sub and returns their manifest lines.
std::vector<ManifestRecord> write_clips(const std::vector<Clip>& clips, LabelMode mode, const fs::path& dir,
                                        const std::string& sub, std::vector<fs::path>& outputs) {
  ensure_dir(dir / sub);
  std::vector<ManifestRecord> records;
  for (const auto& c : clips) {
    const std::string rel = sub + "/" + c.clip_id + "-" + std::string(condition_name(c.condition)) + ".wav";
    save_wav(c.audio, dir / rel);
    outputs.push_back(dir / rel);
    records.push_back(manifest_record(c, mode, rel));
  }
  return records;
}

int cmd_config(const std::string& out) {
  const std::string text = config_to_json(ExperimentConfig{}).dump(2) + "\n";
  if (out.empty()) std::cout << text;
  else write_file_bytes(out, text);
  return 0;
}

int cmd_synth_corpus(const Common& c, const fs::path& out) {
  Experiment e(resolve(c));
  ensure_dir(out);
  std::vector<fs::path> outputs;
  auto records = write_clips(e.train_clips(), e.config().dataset.mode, out, "clips", outputs);
  auto test = write_clips(e.test_clips(), e.config().dataset.mode, out, "clips", outputs);
  records.insert(records.end(), test.begin(), test.end());
  write_manifest(records, out / "manifest.jsonl");
  outputs.push_back(out / "manifest.jsonl");
  write_run_manifest(out, "synth-corpus", e, outputs);
  std::cout << "wrote " << records.size() << " clips to " << out.string() << "\n";
  return 0;
}

int cmd_mix(const Common& c, const fs::path& out) {
  Experiment e(resolve(c));
  ensure_dir(out);
  const LabelMode mode = e.config().dataset.mode;
  std::vector<fs::path> outputs;
  std::vector<ManifestRecord> records;
  for (const auto* pairs : {&e.train_pairs(), &e.test_pairs()}) {
    std::vector<Clip> clean, noisy;
    for (const auto& p : *pairs) {
      clean.push_back(p.clean);
      noisy.push_back(p.noisy);
    }
    for (auto* set : {&clean, &noisy}) {
      auto r = write_clips(*set, mode, out, "pairs", outputs);
      records.insert(records.end(), r.begin(), r.end());
    }
  }
  write_manifest(records, out / "manifest.jsonl");
  outputs.push_back(out / "manifest.jsonl");
  write_run_manifest(out, "mix", e, outputs);
  std::cout << "wrote " << records.size() << " clips to " << out.string() << "\n";
  return 0;
}

int cmd_train_enh(const Common& c, const fs::path& out) {
  Experiment e(resolve(c));
  const EnhancerModel& m = e.enhancer();
  write_file_bytes(out, encode_enhancer(m));
  nlohmann::ordered_json j{{"enhancer", enhancer_name(m.kind)}, {"epoch_loss", e.enhancer_history()}};
  std::cout << j.dump() << "\n";
  return 0;
}

int cmd_train_clf(const Common& c, const std::string& condition, std::size_t repeat, const fs::path& out) {
  Experiment e(resolve(c));
  const auto& models = e.trained_classifiers(parse_experiment_condition(condition));
  if (repeat >= models.size())
    throw Error(Errc::BadRange, "repeat " + std::to_string(repeat) + " is beyond the configured repeats");
  write_file_bytes(out, encode_classifier(models[repeat]));
  std::cout << "wrote " << out.string() << "\n";
  return 0;
}

int cmd_predict(const fs::path& model_path, const std::vector<std::string>& wavs) {
  const ClassifierModel m = decode_classifier(read_file_bytes(model_path));
  std::vector<MelSpec> feats;
  for (const auto& p : wavs) {
    Waveform w = load_wav(p);
    if (w.sample_rate != kCanonicalRate) w = resample(w, kCanonicalRate);
    feats.push_back(classifier_features(assemble_clip(w, RespClass::Normal).audio, m));
  }
  std::vector<const MelSpec*> ptrs;
  for (const auto& f : feats) ptrs.push_back(&f);
  const auto preds = predict_batch(m, ptrs);
  for (std::size_t i = 0; i < preds.size(); ++i) {
    nlohmann::ordered_json probs;
    for (std::size_t k = 0; k < preds[i].probabilities.size(); ++k)
      probs[class_name(class_from_index(static_cast<int>(k), m.mode), m.mode)] = preds[i].probabilities[k];
    std::cout << nlohmann::ordered_json{{"path", wavs[i]},
                                        {"predicted", class_name(preds[i].predicted, m.mode)},
                                        {"probabilities", probs}}
                     .dump()
              << "\n";
  }
  return 0;
}

int cmd_run(const Common& c, const fs::path& out, const std::string& formats, bool with_grid, const char* name) {
  Experiment e(resolve(c));
  const MetricsReport r = e.report(with_grid);
  ensure_dir(out);
  std::vector<fs::path> outputs;
  const auto list = formats == "all" ? report_formats() : split_list(formats);
  for (const auto& f : list) {
    auto files = emit_report(r, f, out);
    outputs.insert(outputs.end(), files.begin(), files.end());
  }
  write_run_manifest(out, name, e, outputs);
  for (const auto& cr : r.conditions) {
    const ScoreSet m = cr.mean();
    std::cout << experiment_condition_name(cr.condition) << ": icbhi " << report_detail::fixed(m.icbhi_score)
              << " sensitivity " << report_detail::fixed(m.sensitivity) << " specificity "
              << report_detail::fixed(m.specificity) << "\n";
  }
  return 0;
}

const ConditionResult& find_condition(const MetricsReport& r, const std::string& name) {
  const ExperimentCondition c = parse_experiment_condition(name);
  for (const auto& cr : r.conditions)
    if (cr.condition == c) return cr;
  throw Error(Errc::NotFound, "report has no '" + name + "' condition");
}

int cmd_compare(const std::vector<std::string>& reports, const std::string& a, const std::string& b) {
  const MetricsReport ra = load_report(reports.front());
  const MetricsReport rb = reports.size() > 1 ? load_report(reports[1]) : ra;
  const auto row = compare_runs(find_condition(ra, a), find_condition(rb, b));
  nlohmann::ordered_json j{{"a", row.a}, {"b", row.b}};
  j.update(to_json(row.welch));
  std::cout << j.dump(2) << "\n";
  return 0;
}

int cmd_correlate(const std::vector<std::string>& reports, const std::string& out) {
  std::vector<EnhancerVariant> variants;
  for (const auto& p : reports) variants.push_back(enhancer_variant(load_report(p), p));
  std::ostringstream os;
  os << "quality_metric,score_metric,r,n\n";
  for (const auto& row : quality_correlation(variants))
    os << row.quality_metric << ',' << row.score_metric << ',' << report_detail::fixed(row.r) << ',' << row.n << '\n';
  if (out.empty()) std::cout << os.str();
  else write_file_bytes(out, os.str());
  return 0;
}

int cmd_study_build(const Common& c, const fs::path& out, double fraction, const std::string& annotators) {
  Experiment e(resolve(c));
  ensure_dir(out / "audio");
  const EnhancerModel& enh = e.enhancer();
  const auto& pairs = e.test_pairs();
  std::vector<StudySource> sources;
  for (const auto& p : pairs) sources.push_back({p.clean.clip_id, p.clean.label, {}, {}, {}});
  StudyManifest m = build_study(sources, e.config().dataset.mode, fraction, e.seed("study"), split_list(annotators));
  // Only the selected sources are rendered, each to an opaque file name.
  for (auto& item : m.items) {
    const NoisyPair* src = nullptr;
    for (const auto& p : pairs)
      if (p.clean.clip_id == item.source_id) src = &p;
    const Waveform w = item.condition == Condition::Clean   ? src->clean.audio
                       : item.condition == Condition::Noisy ? src->noisy.audio
                                                            : enhance(enh, src->noisy.audio);
    item.audio = out / "audio" / (item.item_id + ".wav");
    save_wav(w, item.audio);
  }
  save_study(m, out / "study.json");
  std::vector<fs::path> outputs{out / "study.json"};
  for (const auto& item : m.items) outputs.push_back(item.audio);
  write_run_manifest(out, "study-build", e, outputs);
  std::cout << "study with " << m.items.size() << " items written to " << (out / "study.json").string() << "\n";
  return 0;
}

std::string random_token() {
  std::random_device rd;
  char buf[40];
  std::snprintf(buf, sizeof buf, "%08x%08x%08x%08x", rd(), rd(), rd(), rd());
  return buf;
}

int cmd_serve(const fs::path& study, const fs::path& store, const std::string& host, int port, std::string token,
              const std::string& static_dir) {
  if (token.empty()) {
    token = random_token();
    std::cerr << "admin token: " << token << "\n";
  }
  StudyService svc(load_study(study), store, token);
  std::cerr << "serving " << svc.manifest().items.size() << " items on http://" << host << ":" << port << "\n";
  serve_study(svc, host, port, static_dir);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"respiratory-sound workbench: corpora, enhancement, classification, evaluation, annotation study"};
  app.require_subcommand(1);

  std::string config_out;
  auto* config = app.add_subcommand("config", "print the default experiment config");
  config->add_option("-o,--out", config_out, "write to a file instead of stdout");

  Common synth_c;
  std::string synth_out;
  auto* synth = app.add_subcommand("synth-corpus", "synthesize the clean corpus and write WAVs plus manifest");
  add_common(synth, synth_c);
  synth->add_option("-o,--out", synth_out, "output directory")->required();

  Common mix_c;
  std::string mix_out;
  auto* mix = app.add_subcommand("mix", "write the train and test noisy/clean pairs");
  add_common(mix, mix_c);
  mix->add_option("-o,--out", mix_out, "output directory")->required();

  Common enh_c;
  std::string enh_out;
  auto* enh = app.add_subcommand("train-enh", "train the configured enhancer and save it");
  add_common(enh, enh_c);
  enh->add_option("-o,--out", enh_out, "checkpoint path")->required();

  Common clf_c;
  std::string clf_out, clf_condition = "clean";
  std::size_t clf_repeat = 0;
  auto* clf = app.add_subcommand("train-clf", "train the classifier of one condition and save it");
  add_common(clf, clf_c);
  clf->add_option("--condition", clf_condition, "clean, noisy, noise-injection or audio-enhancement");
  clf->add_option("--repeat", clf_repeat, "which repeat's classifier to save");
  clf->add_option("-o,--out", clf_out, "checkpoint path")->required();

  std::string pred_model;
  std::vector<std::string> pred_wavs;
  auto* pred = app.add_subcommand("predict", "classify WAV files with a saved classifier");
  pred->add_option("-m,--model", pred_model, "classifier checkpoint")->required()->check(CLI::ExistingFile);
  pred->add_option("wavs", pred_wavs, "WAV files")->required()->check(CLI::ExistingFile);

  Common run_c;
  std::string run_out, run_formats = "all";
  auto* run = app.add_subcommand("run", "run the configured conditions and emit the report");
  add_common(run, run_c);
  run->add_option("-o,--out", run_out, "output directory")->required();
  run->add_option("--format", run_formats, "comma-separated subset of json,csv,jsonl,plot, or all");

  Common grid_c;
  std::string grid_out, grid_formats = "all";
  auto* grid = app.add_subcommand("grid", "run the conditions plus the per-noise-kind SNR grid");
  add_common(grid, grid_c);
  grid->add_option("-o,--out", grid_out, "output directory")->required();
  grid->add_option("--format", grid_formats, "comma-separated subset of json,csv,jsonl,plot, or all");

  std::vector<std::string> cmp_reports;
  std::string cmp_a, cmp_b;
  auto* cmp = app.add_subcommand("compare", "one-tailed Welch t-test between two conditions' ICBHI scores");
  cmp->add_option("reports", cmp_reports, "report.json (one or two)")
      ->required()
      ->expected(1, 2)
      ->check(CLI::ExistingFile);
  cmp->add_option("--a", cmp_a, "condition hypothesized higher")->required();
  cmp->add_option("--b", cmp_b, "condition hypothesized lower")->required();

  std::vector<std::string> cor_reports;
  std::string cor_out;
  auto* cor = app.add_subcommand("correlate", "correlate enhancement quality with scores across enhancer variants");
  cor->add_option("reports", cor_reports, "one report.json per enhancer variant")->required()->check(CLI::ExistingFile);
  cor->add_option("-o,--out", cor_out, "write the CSV to a file instead of stdout");

  Common study_c;
  std::string study_out, study_annotators;
  double study_fraction = 0.25;
  auto* study = app.add_subcommand("study-build", "build a blinded annotation study from the test set");
  add_common(study, study_c);
  study->add_option("-o,--out", study_out, "output directory")->required();
  study->add_option("--fraction", study_fraction, "fraction of test clips to include");
  study->add_option("--annotators", study_annotators, "comma-separated annotator ids; empty admits any");

  std::string serve_study, serve_store, serve_host = "127.0.0.1", serve_token, serve_static;
  int serve_port = 8080;
  auto* serve = app.add_subcommand("serve", "serve an annotation study over HTTP");
  serve->add_option("--study", serve_study, "study.json from study-build")->required()->check(CLI::ExistingFile);
  serve->add_option("--store", serve_store, "annotation store directory")->required();
  serve->add_option("--host", serve_host, "bind address");
  serve->add_option("--port", serve_port, "port");
  serve->add_option("--admin-token", serve_token, "token for /api/summary; generated when omitted");
  serve->add_option("--static", serve_static, "directory served at / (browser bundle)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*config) return cmd_config(config_out);
    if (*synth) return cmd_synth_corpus(synth_c, synth_out);
    if (*mix) return cmd_mix(mix_c, mix_out);
    if (*enh) return cmd_train_enh(enh_c, enh_out);
    if (*clf) return cmd_train_clf(clf_c, clf_condition, clf_repeat, clf_out);
    if (*pred) return cmd_predict(pred_model, pred_wavs);
    if (*run) return cmd_run(run_c, run_out, run_formats, false, "run");
    if (*grid) return cmd_run(grid_c, grid_out, grid_formats, true, "grid");
    if (*cmp) return cmd_compare(cmp_reports, cmp_a, cmp_b);
    if (*cor) return cmd_correlate(cor_reports, cor_out);
    if (*study) return cmd_study_build(study_c, study_out, study_fraction, study_annotators);
    if (*serve) return cmd_serve(serve_study, serve_store, serve_host, serve_port, serve_token, serve_static);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.code() == Errc::ConfigError ? 2 : 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
