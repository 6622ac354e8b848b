#pragma once

#include <utility>
#include <vector>

#include "resp/error.hpp"
#include "resp/signal/waveform.hpp"

namespace resp {

/// Rows are true classes, columns predictions, indexed by class_index.
struct ConfusionMatrix {
  LabelMode mode = LabelMode::Fabs3;
  std::vector<std::vector<long long>> counts;

  int classes() const { return num_classes(mode); }
  long long total() const {
    long long t = 0;
    for (const auto& r : counts)
      for (long long c : r) t += c;
    return t;
  }
  long long row_total(int r) const {
    long long t = 0;
    for (long long c : counts[static_cast<std::size_t>(r)]) t += c;
    return t;
  }
  long long at(int truth, int pred) const {
    return counts[static_cast<std::size_t>(truth)][static_cast<std::size_t>(pred)];
  }
};

inline ConfusionMatrix confusion(const std::vector<std::pair<RespClass, RespClass>>& truth_pred, LabelMode mode) {
  if (truth_pred.empty()) throw Error(Errc::EmptyEvaluation, "no predictions to evaluate");
  const auto k = static_cast<std::size_t>(num_classes(mode));
  ConfusionMatrix cm{mode, std::vector<std::vector<long long>>(k, std::vector<long long>(k, 0))};
  for (const auto& [t, p] : truth_pred) {
    if (!valid_in_mode(t, mode) || !valid_in_mode(p, mode))
      throw Error(Errc::InvalidClass, "class not valid in " + std::string(mode_name(mode)) + " mode");
    ++cm.counts[static_cast<std::size_t>(class_index(t))][static_cast<std::size_t>(class_index(p))];
  }
  return cm;
}

/// Fractions in [0, 1]; icbhi_score is the mean of sensitivity and specificity.
struct ScoreSet {
  double accuracy = 0.0;
  double sensitivity = 0.0;
  double specificity = 0.0;
  double icbhi_score = 0.0;
};

enum class SensitivityRule {
  ExactClass,  // abnormal clip counts only when its own abnormal class is predicted
  Pooled,      // any abnormal prediction counts for any abnormal clip
};

inline double icbhi_score(double sensitivity, double specificity) { return (sensitivity + specificity) / 2.0; }

inline ScoreSet score(const ConfusionMatrix& cm, SensitivityRule rule = SensitivityRule::ExactClass) {
  const int k = cm.classes();
  const long long normals = cm.row_total(0);
  long long abnormals = 0, hits = 0, trace = 0;
  for (int c = 0; c < k; ++c) trace += cm.at(c, c);
  for (int c = 1; c < k; ++c) {
    abnormals += cm.row_total(c);
    if (rule == SensitivityRule::ExactClass) {
      hits += cm.at(c, c);
    } else {
      for (int p = 1; p < k; ++p) hits += cm.at(c, p);
    }
  }
  if (normals == 0) throw Error(Errc::NoNormals, "no normal clips in evaluation");
  if (abnormals == 0) throw Error(Errc::NoAbnormals, "no abnormal clips in evaluation");
  ScoreSet s;
  s.accuracy = static_cast<double>(trace) / static_cast<double>(cm.total());
  s.sensitivity = static_cast<double>(hits) / static_cast<double>(abnormals);
  s.specificity = static_cast<double>(cm.at(0, 0)) / static_cast<double>(normals);
  s.icbhi_score = icbhi_score(s.sensitivity, s.specificity);
  return s;
}

}  // namespace resp
