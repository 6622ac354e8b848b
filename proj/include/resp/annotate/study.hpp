#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "resp/corpus/clip.hpp"
#include "resp/error.hpp"
#include "resp/seed.hpp"
#include "resp/signal/wav.hpp"

namespace resp {

/// One test clip offered to the study, with its three renderings on disk.
struct StudySource {
  std::string source_id;  // unique per source clip
  RespClass label = RespClass::Normal;
  std::filesystem::path clean, noisy, enhanced;
};

/// condition and label are hidden: they stay on the server.
struct StudyItem {
  std::string item_id;
  std::filesystem::path audio;
  Condition condition = Condition::Clean;
  RespClass label = RespClass::Normal;
  std::string source_id;
};

struct StudyManifest {
  LabelMode mode = LabelMode::Fabs3;
  std::uint64_t seed = 0;
  double fraction = 0.25;
  std::vector<std::string> annotators;  // empty admits any well-formed id
  std::vector<StudyItem> items;         // presentation order

  const StudyItem* find(std::string_view id) const {
    for (const auto& it : items)
      if (it.item_id == id) return &it;
    return nullptr;
  }

  bool admits(std::string_view annotator) const {
    if (annotators.empty()) return true;
    for (const auto& a : annotators)
      if (a == annotator) return true;
    return false;
  }
};

inline constexpr Condition kStudyConditions[3] = {Condition::Clean, Condition::Noisy, Condition::Enhanced};

/// Opaque id: a keyed hash of (source, condition), same shape for every
/// condition.
inline std::string study_item_id(std::uint64_t seed, const std::string& source_id, Condition c) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(derive_seed(seed, "study-item", source_id + "\n" +
                                                                                    std::string(condition_name(c)))));
  return buf;
}

/// Number of sources a fraction selects: round(fraction * n), at least 1.
inline std::size_t study_source_count(std::size_t n, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) throw Error(Errc::BadRange, "study fraction must be in (0, 1]");
  if (n == 0) throw Error(Errc::EmptyDataset, "no test clips to build a study from");
  const auto k = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(n)));
  return std::clamp<std::size_t>(k, 1, n);
}

/// Selects round(fraction * n) sources with a seeded shuffle and emits
/// their clean, noisy and enhanced renderings as separate items in a
/// seeded global order.
inline StudyManifest build_study(const std::vector<StudySource>& sources, LabelMode mode, double fraction,
                                 std::uint64_t seed, std::vector<std::string> annotators = {}) {
  const std::size_t k = study_source_count(sources.size(), fraction);
  std::set<std::string> seen;
  for (const auto& s : sources) {
    if (!seen.insert(s.source_id).second) throw Error(Errc::InvalidArgument, "duplicate study source " + s.source_id);
    if (!valid_in_mode(s.label, mode))
      throw Error(Errc::InvalidClass, "source " + s.source_id + " has a label outside " + std::string(mode_name(mode)));
  }
  std::vector<std::size_t> idx(sources.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  Rng pick = make_rng(derive_seed(seed, "study-select"));
  shuffle(idx, pick);
  idx.resize(k);

  StudyManifest m;
  m.mode = mode;
  m.seed = seed;
  m.fraction = fraction;
  m.annotators = std::move(annotators);
  for (std::size_t i : idx) {
    const StudySource& s = sources[i];
    const std::filesystem::path* paths[3] = {&s.clean, &s.noisy, &s.enhanced};
    for (int c = 0; c < 3; ++c)
      m.items.push_back({study_item_id(seed, s.source_id, kStudyConditions[c]), *paths[c], kStudyConditions[c],
                         s.label, s.source_id});
  }
  Rng order = make_rng(derive_seed(seed, "study-order"));
  shuffle(m.items, order);
  return m;
}

// Server-side manifest file. Audio paths are stored relative to the
// manifest's directory when they lie beneath it.
inline nlohmann::ordered_json study_to_json(const StudyManifest& m, const std::filesystem::path& base = {}) {
  nlohmann::ordered_json items = nlohmann::ordered_json::array();
  for (const auto& it : m.items) {
    std::filesystem::path p = it.audio;
    if (!base.empty()) {
      const auto rel = p.lexically_relative(base);
      if (!rel.empty() && *rel.begin() != "..") p = rel;
    }
    items.push_back({{"item_id", it.item_id},
                     {"audio", p.generic_string()},
                     {"condition", condition_name(it.condition)},
                     {"label", class_name(it.label, m.mode)},
                     {"source_id", it.source_id}});
  }
  return {{"mode", mode_name(m.mode)},
          {"seed", m.seed},
          {"fraction", m.fraction},
          {"annotators", m.annotators},
          {"items", items}};
}

inline StudyManifest study_from_json(const nlohmann::json& j, const std::filesystem::path& base = {}) {
  try {
    StudyManifest m;
    m.mode = parse_mode(j.at("mode").get<std::string>());
    m.seed = j.at("seed").get<std::uint64_t>();
    m.fraction = j.at("fraction").get<double>();
    m.annotators = j.at("annotators").get<std::vector<std::string>>();
    std::set<std::string> ids;
    for (const auto& it : j.at("items")) {
      StudyItem s;
      s.item_id = it.at("item_id").get<std::string>();
      if (!ids.insert(s.item_id).second) throw Error(Errc::ParseError, "duplicate item id " + s.item_id);
      s.audio = it.at("audio").get<std::string>();
      if (s.audio.is_relative() && !base.empty()) s.audio = base / s.audio;
      s.condition = parse_condition(it.at("condition").get<std::string>());
      s.label = parse_class(it.at("label").get<std::string>(), m.mode);
      s.source_id = it.at("source_id").get<std::string>();
      m.items.push_back(std::move(s));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("study manifest: ") + e.what());
  }
}

inline void save_study(const StudyManifest& m, const std::filesystem::path& path) {
  write_file_bytes(path, study_to_json(m, path.parent_path()).dump(2) + "\n");
}

inline StudyManifest load_study(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file_bytes(path));
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, path.string() + ": " + e.what());
  }
  return study_from_json(j, path.parent_path());
}

/// What an annotator's browser may see: ids in presentation order only.
inline nlohmann::ordered_json client_view(const StudyManifest& m) {
  nlohmann::ordered_json ids = nlohmann::ordered_json::array();
  for (const auto& it : m.items) ids.push_back(it.item_id);
  return {{"items", ids}, {"total", m.items.size()}};
}

}  // namespace resp
