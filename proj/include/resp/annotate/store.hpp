#pragma once

#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "resp/error.hpp"
#include "resp/signal/wav.hpp"
#include "resp/signal/waveform.hpp"

namespace resp {

/// One submitted judgement. `revision` counts submissions for the
/// (item, annotator) pair from 1; `seq` orders the whole log from 1.
struct AnnotationRecord {
  std::uint64_t seq = 0;
  std::string item_id;
  std::string annotator;
  RespClass label = RespClass::Normal;
  int confidence = 0;  // 1..5
  std::string timestamp;
  std::uint64_t revision = 0;

  bool operator==(const AnnotationRecord&) const = default;
};

inline bool valid_confidence(int c) { return c >= 1 && c <= 5; }

inline nlohmann::ordered_json to_json(const AnnotationRecord& r, LabelMode mode) {
  return {{"seq", r.seq},
          {"item_id", r.item_id},
          {"annotator", r.annotator},
          {"label", class_name(r.label, mode)},
          {"confidence", r.confidence},
          {"timestamp", r.timestamp},
          {"revision", r.revision}};
}

inline AnnotationRecord annotation_from_json(const nlohmann::json& j, LabelMode mode) {
  try {
    AnnotationRecord r;
    r.seq = j.at("seq").get<std::uint64_t>();
    r.item_id = j.at("item_id").get<std::string>();
    r.annotator = j.at("annotator").get<std::string>();
    r.label = parse_class(j.at("label").get<std::string>(), mode);
    r.confidence = j.at("confidence").get<int>();
    r.timestamp = j.at("timestamp").get<std::string>();
    r.revision = j.at("revision").get<std::uint64_t>();
    if (!valid_confidence(r.confidence)) throw Error(Errc::ParseError, "record confidence outside 1..5");
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::ParseError, std::string("annotation record: ") + e.what());
  }
}

using AnnotationKey = std::pair<std::string, std::string>;  // (item_id, annotator)

/// Latest revision per (item, annotator). Replaying records already folded
/// leaves the result unchanged.
inline std::map<AnnotationKey, AnnotationRecord> fold_latest(const std::vector<AnnotationRecord>& log,
                                                             std::map<AnnotationKey, AnnotationRecord> acc = {}) {
  for (const auto& r : log) {
    auto& slot = acc[{r.item_id, r.annotator}];
    if (slot.revision < r.revision || (slot.revision == r.revision && slot.seq < r.seq)) slot = r;
  }
  return acc;
}

inline std::vector<AnnotationRecord> latest_records(const std::map<AnnotationKey, AnnotationRecord>& folded) {
  std::vector<AnnotationRecord> out;
  for (const auto& [k, r] : folded) out.push_back(r);
  return out;
}

inline std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1, tm.tm_mday,
                tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
  return buf;
}

struct SubmitResult {
  AnnotationRecord record;
  std::uint64_t previous_revision = 0;  // 0 when this is the first submission
  bool conflict = false;                // base revision given and stale
};

/// Append-only annotation log (annotations.jsonl) with a compacted
/// snapshot (snapshot.json) of the latest records and the number of log
/// lines it covers. Every submission is appended and flushed before it is
/// acknowledged; the snapshot only shortens replay on open. Writes are
/// serialized by one mutex; readers get copies.
class AnnotationStore {
 public:
  using Clock = std::function<std::string()>;

  AnnotationStore(std::filesystem::path dir, LabelMode mode, std::size_t snapshot_every = 64,
                  Clock clock = utc_timestamp)
      : dir_(std::move(dir)), mode_(mode), snapshot_every_(snapshot_every), clock_(std::move(clock)) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw Error(Errc::IoFailure, "cannot create store directory " + dir_.string());
    load();
  }

  static constexpr const char* kLogName = "annotations.jsonl";
  static constexpr const char* kSnapshotName = "snapshot.json";

  std::filesystem::path log_path() const { return dir_ / kLogName; }
  std::filesystem::path snapshot_path() const { return dir_ / kSnapshotName; }

  /// Appends a record. When `base_revision` is given and differs from the
  /// current revision the write still lands (last writer wins) but the
  /// result is flagged as a conflict.
  SubmitResult submit(const std::string& item_id, const std::string& annotator, RespClass label, int confidence,
                      std::optional<std::uint64_t> base_revision = std::nullopt) {
    if (!valid_confidence(confidence)) throw Error(Errc::BadRange, "confidence must be an integer in 1..5");
    if (!valid_in_mode(label, mode_)) throw Error(Errc::InvalidClass, "label outside the study's label mode");
    std::lock_guard lock(mu_);
    SubmitResult res;
    auto it = latest_.find({item_id, annotator});
    res.previous_revision = it == latest_.end() ? 0 : it->second.revision;
    res.conflict = base_revision.has_value() && *base_revision != res.previous_revision;
    AnnotationRecord r{++seq_, item_id, annotator, label, confidence, clock_(), res.previous_revision + 1};
    append_line(to_json(r, mode_).dump());
    latest_[{item_id, annotator}] = r;
    res.record = r;
    if (snapshot_every_ > 0 && (log_lines_ - snapshot_lines_) >= snapshot_every_) write_snapshot();
    return res;
  }

  std::vector<AnnotationRecord> latest() const {
    std::lock_guard lock(mu_);
    return latest_records(latest_);
  }

  std::uint64_t revision(const std::string& item_id, const std::string& annotator) const {
    std::lock_guard lock(mu_);
    auto it = latest_.find({item_id, annotator});
    return it == latest_.end() ? 0 : it->second.revision;
  }

  /// Every record ever appended, in log order (the audit trail).
  std::vector<AnnotationRecord> history() const {
    std::lock_guard lock(mu_);
    return read_log(0);
  }

  std::size_t log_size() const {
    std::lock_guard lock(mu_);
    return log_lines_;
  }

  void compact() {
    std::lock_guard lock(mu_);
    write_snapshot();
  }

  LabelMode mode() const { return mode_; }

 private:
  void load() {
    std::size_t covered = 0;
    if (std::filesystem::exists(snapshot_path())) {
      try {
        const auto j = nlohmann::json::parse(read_file_bytes(snapshot_path()));
        covered = j.at("log_lines").get<std::size_t>();
        seq_ = j.at("seq").get<std::uint64_t>();
        for (const auto& r : j.at("records")) {
          auto rec = annotation_from_json(r, mode_);
          latest_[{rec.item_id, rec.annotator}] = rec;
        }
      } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ParseError, snapshot_path().string() + ": " + e.what());
      }
    }
    const auto tail = read_log(covered, &log_lines_);
    if (log_lines_ < covered) throw Error(Errc::ParseError, "snapshot covers more lines than the log holds");
    latest_ = fold_latest(tail, std::move(latest_));
    for (const auto& r : tail) seq_ = std::max(seq_, r.seq);
    snapshot_lines_ = covered;
  }

  // Parses log lines from index `skip` on; `lines` receives the count of
  // complete lines. A final line without its newline is a torn append and
  // is ignored.
  std::vector<AnnotationRecord> read_log(std::size_t skip, std::size_t* lines = nullptr) const {
    std::vector<AnnotationRecord> out;
    std::size_t n = 0;
    if (lines) *lines = 0;
    if (!std::filesystem::exists(log_path())) return out;
    const std::string text = read_file_bytes(log_path());
    std::size_t pos = 0;
    while (pos < text.size()) {
      const std::size_t nl = text.find('\n', pos);
      if (nl == std::string::npos) break;
      if (n++ >= skip) {
        try {
          out.push_back(annotation_from_json(nlohmann::json::parse(text.substr(pos, nl - pos)), mode_));
        } catch (const nlohmann::json::exception& e) {
          throw Error(Errc::ParseError, log_path().string() +  " line " + std::to_string(n) + ": " + e.what());
        }
      }
      pos = nl + 1;
    }
    if (lines) *lines = n;
    return out;
  }

  void append_line(const std::string& line) {
    // A torn final line from an earlier crash is cut before appending.
    if (!torn_checked_) {
      torn_checked_ = true;
      if (std::filesystem::exists(log_path())) {
        const std::string text = read_file_bytes(log_path());
        const std::size_t keep = text.rfind('\n') == std::string::npos ? 0 : text.rfind('\n') + 1;
        if (keep != text.size()) std::filesystem::resize_file(log_path(), keep);
      }
    }
    std::ofstream f(log_path(), std::ios::binary | std::ios::app);
    f << line << '\n';
    f.flush();
    if (!f) throw Error(Errc::IoFailure, "cannot append to " + log_path().string());
    ++log_lines_;
  }

  void write_snapshot() {
    nlohmann::ordered_json recs = nlohmann::ordered_json::array();
    for (const auto& [k, r] : latest_) recs.push_back(to_json(r, mode_));
    const nlohmann::ordered_json j{{"log_lines", log_lines_}, {"seq", seq_}, {"records", recs}};
    const auto tmp = dir_ / (std::string(kSnapshotName) + ".tmp");
    write_file_bytes(tmp, j.dump() + "\n");
    std::filesystem::rename(tmp, snapshot_path());
    snapshot_lines_ = log_lines_;
  }

  std::filesystem::path dir_;
  LabelMode mode_;
  std::size_t snapshot_every_;
  Clock clock_;
  mutable std::mutex mu_;
  std::map<AnnotationKey, AnnotationRecord> latest_;
  std::uint64_t seq_ = 0;
  std::size_t log_lines_ = 0;
  std::size_t snapshot_lines_ = 0;
  bool torn_checked_ = false;
};

}  // namespace resp
