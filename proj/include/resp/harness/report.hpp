#pragma once

#include <cstdio>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "resp/harness/pipeline.hpp"

namespace resp {

using ojson = nlohmann::ordered_json;

inline ojson to_json(const ScoreSet& s) {
  return {{"accuracy", s.accuracy},
          {"sensitivity", s.sensitivity},
          {"specificity", s.specificity},
          {"icbhi_score", s.icbhi_score}};
}

inline ScoreSet score_set_from_json(const nlohmann::json& j) {
  return {j.at("accuracy").get<double>(), j.at("sensitivity").get<double>(), j.at("specificity").get<double>(),
          j.at("icbhi_score").get<double>()};
}

inline ojson to_json(const WelchResult& w) {
  return {{"mean_a", w.mean_a}, {"sd_a", w.sd_a}, {"n_a", w.n_a}, {"mean_b", w.mean_b}, {"sd_b", w.sd_b},
          {"n_b", w.n_b},       {"t", w.t},       {"df", w.df},   {"p", w.p}};
}

inline ojson to_json(const ConditionResult& c) {
  ojson j;
  j["condition"] = experiment_condition_name(c.condition);
  j["test_items"] = c.test_items;
  j["mean"] = to_json(c.mean());
  ojson runs = ojson::array();
  for (const auto& r : c.runs) {
    ojson groups = ojson::array();
    for (const auto& g : r.groups) groups.push_back(to_json(g));
    runs.push_back({{"repeat", r.repeat}, {"overall", to_json(r.overall)}, {"groups", groups}});
  }
  j["runs"] = runs;
  j["icbhi_values"] = c.icbhi_values();
  j["quality"] = c.quality ? ojson{{"ssnr_db", c.quality->ssnr_db}, {"stoi", c.quality->stoi}} : ojson(nullptr);
  return j;
}

inline ConditionResult condition_result_from_json(const nlohmann::json& j) {
  ConditionResult c;
  c.condition = parse_experiment_condition(j.at("condition").get<std::string>());
  c.test_items = j.at("test_items").get<std::size_t>();
  for (const auto& r : j.at("runs")) {
    ConditionRun run;
    run.repeat = r.at("repeat").get<std::size_t>();
    run.overall = score_set_from_json(r.at("overall"));
    for (const auto& g : r.at("groups")) run.groups.push_back(score_set_from_json(g));
    c.runs.push_back(std::move(run));
  }
  if (j.contains("quality") && !j["quality"].is_null())
    c.quality = QualityScores{j["quality"].at("ssnr_db").get<double>(), j["quality"].at("stoi").get<double>()};
  return c;
}

inline ojson to_json(const MetricsReport& r) {
  ojson j;
  j["config"] = r.config;
  j["seeds"] = r.seeds;
  ojson conds = ojson::array();
  for (const auto& c : r.conditions) conds.push_back(to_json(c));
  j["conditions"] = conds;
  ojson grid = ojson::array();
  for (const auto& g : r.grid)
    grid.push_back({{"condition", experiment_condition_name(g.condition)},
                    {"noise_kind", noise_kind_name(g.kind)},
                    {"snr_db", g.snr_db},
                    {"items", g.items},
                    {"score", to_json(g.score)}});
  j["grid"] = grid;
  ojson sig = ojson::array();
  for (const auto& s : r.significance) {
    ojson row{{"a", s.a}, {"b", s.b}};
    row.update(to_json(s.welch));
    sig.push_back(row);
  }
  j["significance"] = sig;
  ojson prov;
  for (Phase p : {Phase::TrainEnhancer, Phase::TrainClassifier, Phase::Evaluate})
    prov[std::string(phase_name(p))] = {{"clips", r.provenance.clip_reads[static_cast<int>(p)]},
                                        {"noise", r.provenance.noise_reads[static_cast<int>(p)]}};
  prov["violations"] = r.provenance.violations;
  j["provenance"] = prov;
  return j;
}

/// Reads back the parts of a report that later analyses consume.
inline MetricsReport report_from_json(const nlohmann::json& j) {
  try {
    MetricsReport r;
    r.config = j.at("config");
    r.seeds = j.at("seeds");
    for (const auto& c : j.at("conditions")) r.conditions.push_back(condition_result_from_json(c));
    for (const auto& g : j.at("grid"))
      r.grid.push_back({parse_experiment_condition(g.at("condition").get<std::string>()),
                        parse_noise_kind(g.at("noise_kind").get<std::string>()), g.at("snr_db").get<double>(),
                        g.at("items").get<std::size_t>(), score_set_from_json(g.at("score"))});
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("report: ") + e.what());
  }
}

inline MetricsReport load_report(const std::filesystem::path& path) {
  try {
    return report_from_json(nlohmann::json::parse(read_file_bytes(path)));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Quality/score correlation across enhancer variants

struct EnhancerVariant {
  std::string name;
  QualityScores quality;
  ScoreSet scores;
};

struct CorrelationRow {
  std::string quality_metric;  // "ssnr_db" or "stoi"
  std::string score_metric;    // "sensitivity" or "icbhi_score"
  double r = 0.0;
  std::size_t n = 0;
};

/// Pearson r between each quality metric and each score across variants.
inline std::vector<CorrelationRow> quality_correlation(const std::vector<EnhancerVariant>& variants) {
  if (variants.size() < 3)
    throw Error(Errc::TooFewPoints, "correlation needs at least 3 enhancer variants, got " +
                                        std::to_string(variants.size()));
  std::vector<double> ssnr_v, stoi_v, sens, icbhi;
  for (const auto& v : variants) {
    ssnr_v.push_back(v.quality.ssnr_db);
    stoi_v.push_back(v.quality.stoi);
    sens.push_back(v.scores.sensitivity);
    icbhi.push_back(v.scores.icbhi_score);
  }
  std::vector<CorrelationRow> rows;
  for (const auto& [qn, q] : {std::pair{"ssnr_db", &ssnr_v}, std::pair{"stoi", &stoi_v}})
    for (const auto& [sn, s] : {std::pair{"sensitivity", &sens}, std::pair{"icbhi_score", &icbhi}})
      rows.push_back({qn, sn, pearson(*q, *s), variants.size()});
  return rows;
}

/// The audio-enhancement condition of a report as a correlation point.
inline EnhancerVariant enhancer_variant(const MetricsReport& r, const std::string& name) {
  for (const auto& c : r.conditions)
    if (c.condition == ExperimentCondition::AudioEnhancement) {
      if (!c.quality) throw Error(Errc::NotFound, name + ": enhancement condition has no quality scores");
      return {name, *c.quality, c.mean()};
    }
  throw Error(Errc::NotFound, name + ": report has no audio-enhancement condition");
}

// ---------------------------------------------------------------------------
// Emission

namespace report_detail {

inline std::string fixed(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

inline std::string score_cells(const ScoreSet& s) {
  return fixed(s.accuracy) + "," + fixed(s.sensitivity) + "," + fixed(s.specificity) + "," + fixed(s.icbhi_score);
}

}  // namespace report_detail

inline std::string scores_csv(const MetricsReport& r) {
  using namespace report_detail;
  std::ostringstream os;
  os << "condition,repeat,group,items,accuracy,sensitivity,specificity,icbhi_score\n";
  for (const auto& c : r.conditions) {
    const std::string name(experiment_condition_name(c.condition));
    for (const auto& run : c.runs) {
      os << name << ',' << run.repeat << ",all," << c.test_items << ',' << score_cells(run.overall) << '\n';
      for (std::size_t g = 0; g < run.groups.size(); ++g)
        os << name << ',' << run.repeat << ',' << g << ",," << score_cells(run.groups[g]) << '\n';
    }
    os << name << ",mean,all," << c.test_items << ',' << score_cells(c.mean()) << '\n';
  }
  return os.str();
}

inline std::string grid_csv(const MetricsReport& r) {
  using namespace report_detail;
  std::ostringstream os;
  os << "condition,noise_kind,snr_db,items,accuracy,sensitivity,specificity,icbhi_score\n";
  for (const auto& g : r.grid)
    os << experiment_condition_name(g.condition) << ',' << noise_kind_name(g.kind) << ',' << format_number(g.snr_db)
       << ',' << g.items << ',' << score_cells(g.score) << '\n';
  return os.str();
}

inline std::string significance_csv(const MetricsReport& r) {
  using namespace report_detail;
  std::ostringstream os;
  os << "a,b,mean_a,sd_a,n_a,mean_b,sd_b,n_b,t,df,p\n";
  for (const auto& s : r.significance) {
    const auto& w = s.welch;
    os << s.a << ',' << s.b << ',' << fixed(w.mean_a) << ',' << fixed(w.sd_a) << ',' << w.n_a << ','
       << fixed(w.mean_b) << ',' << fixed(w.sd_b) << ',' << w.n_b << ',' << fixed(w.t) << ',' << fixed(w.df) << ','
       << fixed(w.p) << '\n';
  }
  return os.str();
}

inline std::string records_jsonl(const MetricsReport& r) {
  std::ostringstream os;
  os << ojson{{"type", "config"}, {"config", r.config}, {"seeds", r.seeds}}.dump() << '\n';
  for (const auto& c : r.conditions)
    for (const auto& run : c.runs) {
      ojson groups = ojson::array();
      for (const auto& g : run.groups) groups.push_back(to_json(g));
      os << ojson{{"type", "run"},
                  {"condition", experiment_condition_name(c.condition)},
                  {"repeat", run.repeat},
                  {"overall", to_json(run.overall)},
                  {"groups", groups}}
                .dump()
         << '\n';
    }
  for (const auto& g : r.grid)
    os << ojson{{"type", "grid"},
                {"condition", experiment_condition_name(g.condition)},
                {"noise_kind", noise_kind_name(g.kind)},
                {"snr_db", g.snr_db},
                {"items", g.items},
                {"score", to_json(g.score)}}
              .dump()
       << '\n';
  for (const auto& s : r.significance) {
    ojson row{{"type", "significance"}, {"a", s.a}, {"b", s.b}};
    row.update(to_json(s.welch));
    os << row.dump() << '\n';
  }
  return os.str();
}

/// Plot-ready series: figure,panel,series,x,y. The "conditions" figure has
/// one point per repeat; the "snr-grid" figure has one panel per noise kind
/// with ICBHI score against test SNR.
inline std::string plot_csv(const MetricsReport& r) {
  using namespace report_detail;
  std::ostringstream os;
  os << "figure,panel,series,x,y\n";
  for (const auto& c : r.conditions)
    for (const auto& run : c.runs)
      os << "conditions,icbhi_score," << experiment_condition_name(c.condition) << ',' << run.repeat << ','
         << fixed(run.overall.icbhi_score) << '\n';
  for (const auto& g : r.grid)
    os << "snr-grid," << noise_kind_name(g.kind) << ',' << experiment_condition_name(g.condition) << ','
       << format_number(g.snr_db) << ',' << fixed(g.score.icbhi_score) << '\n';
  return os.str();
}

inline const std::vector<std::string>& report_formats() {
  static const std::vector<std::string> f{"json", "csv", "jsonl", "plot"};
  return f;
}

/// Writes one format of the report into `dir` and returns the files
/// written: json -> report.json; csv -> scores.csv, grid.csv,
/// significance.csv; jsonl -> records.jsonl; plot -> plot.csv.
inline std::vector<std::filesystem::path> emit_report(const MetricsReport& r, std::string_view format,
                                                      const std::filesystem::path& dir) {
  std::vector<std::pair<std::string, std::string>> files;
  if (format == "json") files = {{"report.json", to_json(r).dump(2) + "\n"}};
  else if (format == "csv")
    files = {{"scores.csv", scores_csv(r)}, {"grid.csv", grid_csv(r)}, {"significance.csv", significance_csv(r)}};
  else if (format == "jsonl") files = {{"records.jsonl", records_jsonl(r)}};
  else if (format == "plot") files = {{"plot.csv", plot_csv(r)}};
  else throw Error(Errc::UnknownFormat, "unknown report format '" + std::string(format) + "'");
  std::vector<std::filesystem::path> out;
  for (const auto& [name, body] : files) {
    write_file_bytes(dir / name, body);
    out.push_back(dir / name);
  }
  return out;
}

inline std::vector<std::filesystem::path> emit_all(const MetricsReport& r, const std::filesystem::path& dir) {
  std::vector<std::filesystem::path> out;
  for (const auto& f : report_formats()) {
    auto part = emit_report(r, f, dir);
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

}  // namespace resp
