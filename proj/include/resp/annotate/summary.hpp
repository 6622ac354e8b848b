#pragma once

#include <cmath>
#include <cstdio>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "resp/annotate/store.hpp"
#include "resp/annotate/study.hpp"
#include "resp/metrics/scores.hpp"
#include "resp/metrics/stats.hpp"

namespace resp {

/// One condition's aggregate over the latest record per (item, annotator).
/// Sensitivity, specificity and icbhi are absent when the condition has no
/// normal or no abnormal items among its records; confidence_sd is absent
/// below two records.
struct StudySummaryRow {
  Condition condition = Condition::Clean;
  std::size_t records = 0;
  double accuracy = 0.0;
  std::optional<double> sensitivity, specificity, icbhi_score;
  double confidence_mean = 0.0;
  std::optional<double> confidence_sd;
};

/// Rows in clean, noisy, enhanced order; a condition without records has
/// no row. Records naming items outside the manifest are rejected.
inline std::vector<StudySummaryRow> summarize_annotations(const std::vector<AnnotationRecord>& records,
                                                          const StudyManifest& manifest,
                                                          SensitivityRule rule = SensitivityRule::ExactClass) {
  std::vector<StudySummaryRow> rows;
  for (Condition c : kStudyConditions) {
    std::vector<std::pair<RespClass, RespClass>> tp;
    std::vector<double> conf;
    for (const auto& r : records) {
      const StudyItem* item = manifest.find(r.item_id);
      if (!item) throw Error(Errc::NotFound, "record for unknown item " + r.item_id);
      if (item->condition != c) continue;
      tp.push_back({item->label, r.label});
      conf.push_back(r.confidence);
    }
    if (tp.empty()) continue;
    StudySummaryRow row;
    row.condition = c;
    row.records = tp.size();
    const ConfusionMatrix cm = confusion(tp, manifest.mode);
    try {
      const ScoreSet s = score(cm, rule);
      row.accuracy = s.accuracy;
      row.sensitivity = s.sensitivity;
      row.specificity = s.specificity;
      row.icbhi_score = s.icbhi_score;
    } catch (const Error& e) {
      if (e.code() != Errc::NoNormals && e.code() != Errc::NoAbnormals) throw;
      long long hit = 0;
      for (int k = 0; k < cm.classes(); ++k) hit += cm.at(k, k);
      row.accuracy = static_cast<double>(hit) / static_cast<double>(cm.total());
    }
    row.confidence_mean = sample_mean(conf);
    if (conf.size() >= 2) row.confidence_sd = sample_sd(conf);
    rows.push_back(row);
  }
  return rows;
}

inline nlohmann::ordered_json to_json(const StudySummaryRow& r) {
  auto opt = [](const std::optional<double>& v) { return v ? nlohmann::ordered_json(*v) : nlohmann::ordered_json(); };
  return {{"condition", condition_name(r.condition)},
          {"accuracy", r.accuracy},
          {"sensitivity", opt(r.sensitivity)},
          {"specificity", opt(r.specificity)},
          {"icbhi_score", opt(r.icbhi_score)},
          {"confidence_mean", r.confidence_mean},
          {"confidence_sd", opt(r.confidence_sd)},
          {"records", r.records}};
}

inline nlohmann::ordered_json summary_to_json(const std::vector<StudySummaryRow>& rows) {
  nlohmann::ordered_json a = nlohmann::ordered_json::array();
  for (const auto& r : rows) a.push_back(to_json(r));
  return {{"conditions", a}};
}

/// Study export: condition, accuracy, sensitivity, specificity, ICBHI
/// score, confidence mean, confidence SD, then the record count. Absent
/// values are empty cells.
inline std::string summary_csv(const std::vector<StudySummaryRow>& rows) {
  auto cell = [](std::optional<double> v) {
    if (!v) return std::string();
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f", *v);
    return std::string(buf);
  };
  std::ostringstream os;
  os << "condition,accuracy,sensitivity,specificity,icbhi_score,confidence_mean,confidence_sd,records\n";
  for (const auto& r : rows)
    os << condition_name(r.condition) << ',' << cell(r.accuracy) << ',' << cell(r.sensitivity) << ','
       << cell(r.specificity) << ',' << cell(r.icbhi_score) << ',' << cell(r.confidence_mean) << ','
       << cell(r.confidence_sd) << ',' << r.records << '\n';
  return os.str();
}

}  // namespace resp
