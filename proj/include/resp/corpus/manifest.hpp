#pragma once

#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "resp/corpus/clip.hpp"

namespace resp {

/// One manifest line. Keys are written in declaration order.
struct ManifestRecord {
  std::string source_id;
  std::string clip_id;
  std::string label;
  std::string condition;
  std::string partition;
  std::optional<std::string> noise_kind;
  std::optional<std::string> noise_id;
  std::optional<double> snr_db;
  std::optional<std::size_t> shift;
  std::string path;
};

inline ManifestRecord manifest_record(const Clip& c, LabelMode mode, std::string path) {
  ManifestRecord r;
  r.source_id = c.source_id;
  r.clip_id = c.clip_id;
  r.label = class_name(c.label, mode);
  r.condition = std::string(condition_name(c.condition));
  r.partition = std::string(partition_name(c.partition));
  if (c.noise) {
    r.noise_kind = noise_kind_name(c.noise->kind);
    r.noise_id = c.noise->noise_id;
    r.snr_db = c.noise->snr_db;
    r.shift = c.noise->shift_samples;
  }
  r.path = std::move(path);
  return r;
}

inline nlohmann::ordered_json to_json(const ManifestRecord& r) {
  nlohmann::ordered_json j;
  j["source_id"] = r.source_id;
  j["clip_id"] = r.clip_id;
  j["label"] = r.label;
  j["condition"] = r.condition;
  j["partition"] = r.partition;
  j["noise_kind"] = r.noise_kind ? nlohmann::ordered_json(*r.noise_kind) : nlohmann::ordered_json(nullptr);
  j["noise_id"] = r.noise_id ? nlohmann::ordered_json(*r.noise_id) : nlohmann::ordered_json(nullptr);
  j["snr_db"] = r.snr_db ? nlohmann::ordered_json(*r.snr_db) : nlohmann::ordered_json(nullptr);
  j["shift"] = r.shift ? nlohmann::ordered_json(*r.shift) : nlohmann::ordered_json(nullptr);
  j["path"] = r.path;
  return j;
}

inline ManifestRecord manifest_from_json(const nlohmann::json& j) {
  try {
    ManifestRecord r;
    r.source_id = j.at("source_id").get<std::string>();
    r.clip_id = j.value("clip_id", std::string());
    r.label = j.at("label").get<std::string>();
    r.condition = j.at("condition").get<std::string>();
    r.partition = j.value("partition", std::string("train"));
    if (j.contains("noise_kind") && !j["noise_kind"].is_null()) r.noise_kind = j["noise_kind"].get<std::string>();
    if (j.contains("noise_id") && !j["noise_id"].is_null()) r.noise_id = j["noise_id"].get<std::string>();
    if (j.contains("snr_db") && !j["snr_db"].is_null()) r.snr_db = j["snr_db"].get<double>();
    if (j.contains("shift") && !j["shift"].is_null()) r.shift = j["shift"].get<std::size_t>();
    r.path = j.at("path").get<std::string>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("manifest record: ") + e.what());
  }
}

inline void write_manifest(const std::vector<ManifestRecord>& records, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoFailure, "cannot write " + path.string());
  for (const auto& r : records) out << to_json(r).dump() << '\n';
}

inline std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoFailure, "cannot open " + path.string());
  std::vector<ManifestRecord> out;
  std::string line;
  std::size_t no = 0;
  while (std::getline(in, line)) {
    ++no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(manifest_from_json(nlohmann::json::parse(line)));
    } catch (const nlohmann::json::exception& e) {
      throw Error(Errc::ParseError, path.string() + ":" + std::to_string(no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace resp
