#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>

// Eigen first: httplib pulls in <resolv.h>, whose _res macro breaks Eigen's
// product kernels if they are parsed afterwards.
#include "resp/eigen.hpp"
#include <httplib.h>
#include <json.hpp>

#include "resp/annotate/store.hpp"
#include "resp/annotate/study.hpp"
#include "resp/annotate/summary.hpp"

namespace resp {

struct HttpReply {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
};

/// Request handling for the study, independent of the transport. Bodies
/// sent to annotators carry item ids, progress and generic error text only.
class StudyService {
 public:
  StudyService(StudyManifest manifest, std::filesystem::path store_dir, std::string admin_token,
               AnnotationStore::Clock clock = utc_timestamp)
      : manifest_(std::move(manifest)),
        store_(std::move(store_dir), manifest_.mode, 64, std::move(clock)),
        admin_token_(std::move(admin_token)) {}

  const StudyManifest& manifest() const { return manifest_; }
  AnnotationStore& store() { return store_; }

  /// Ordered item ids with per-item status and progress. The revision lets
  /// a client send base_revision on resubmission.
  HttpReply session(const std::string& annotator) const {
    if (!well_formed_annotator(annotator)) return error(400, "annotator id is missing or malformed");
    if (!manifest_.admits(annotator)) return error(404, "unknown annotator");
    nlohmann::ordered_json items = nlohmann::ordered_json::array();
    std::size_t done = 0;
    nlohmann::ordered_json next;
    for (const auto& it : manifest_.items) {
      const std::uint64_t rev = store_.revision(it.item_id, annotator);
      if (rev > 0) ++done;
      else if (next.is_null()) next = it.item_id;
      items.push_back({{"item_id", it.item_id}, {"status", rev > 0 ? "submitted" : "pending"}, {"revision", rev}});
    }
    return ok({{"annotator", annotator},
               {"items", items},
               {"progress", {{"submitted", done}, {"total", manifest_.items.size()}}},
               {"next", next}});
  }

  HttpReply audio(const std::string& item_id) const {
    const StudyItem* it = manifest_.find(item_id);
    if (!it) return error(404, "unknown item");
    try {
      return {200, "audio/wav", read_file_bytes(it->audio)};
    } catch (const Error&) {
      return error(500, "item audio unavailable");
    }
  }

  /// Body: {item_id, annotator, label, confidence[, base_revision]}.
  /// 200 when stored; 409 when base_revision was stale (the write is still
  /// stored, last writer wins).
  HttpReply annotate(const std::string& body) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(body);
    } catch (const nlohmann::json::exception&) {
      return error(400, "body is not valid JSON");
    }
    if (!j.is_object()) return error(400, "body must be a JSON object");
    const auto str = [&](const char* k) -> std::optional<std::string> {
      if (!j.contains(k) || !j[k].is_string()) return std::nullopt;
      return j[k].get<std::string>();
    };
    const auto item_id = str("item_id"), annotator = str("annotator"), label_text = str("label");
    if (!item_id) return error(400, "item_id must be a string");
    if (!annotator || !well_formed_annotator(*annotator)) return error(400, "annotator id is missing or malformed");
    if (!label_text) return error(400, "label must be a string");
    if (!j.contains("confidence") || !j["confidence"].is_number_integer())
      return error(400, "confidence must be an integer from 1 to 5");
    const auto conf = j["confidence"].get<long long>();
    if (conf < 1 || conf > 5) return error(400, "confidence must be an integer from 1 to 5");
    std::optional<std::uint64_t> base;
    if (j.contains("base_revision")) {
      if (!j["base_revision"].is_number_unsigned()) return error(400, "base_revision must be a nonnegative integer");
      base = j["base_revision"].get<std::uint64_t>();
    }
    RespClass label;
    try {
      label = parse_class(*label_text, manifest_.mode);
    } catch (const Error&) {
      return error(400, "label is not a class of this study");
    }
    if (!manifest_.find(*item_id)) return error(404, "unknown item");
    if (!manifest_.admits(*annotator)) return error(404, "unknown annotator");
    const SubmitResult res = store_.submit(*item_id, *annotator, label, static_cast<int>(conf), base);
    nlohmann::ordered_json out{{"status", res.conflict ? "conflict" : "stored"},
                               {"item_id", *item_id},
                               {"revision", res.record.revision},
                               {"previous_revision", res.previous_revision}};
    HttpReply r = ok(out);
    if (res.conflict) r.status = 409;
    return r;
  }

  /// Aggregate per condition; only for the holder of the admin token.
  HttpReply summary(const std::string& token, bool csv = false) const {
    if (admin_token_.empty() || token != admin_token_) return error(403, "summary requires the admin token");
    const auto rows = summarize_annotations(store_.latest(), manifest_);
    if (csv) return {200, "text/csv", summary_csv(rows)};
    return ok(summary_to_json(rows));
  }

  static bool well_formed_annotator(const std::string& a) {
    if (a.empty() || a.size() > 64) return false;
    for (char c : a)
      if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.')) return false;
    return true;
  }

 private:
  static HttpReply ok(const nlohmann::ordered_json& j) { return {200, "application/json", j.dump()}; }
  static HttpReply error(int status, const std::string& msg) {
    return {status, "application/json", nlohmann::ordered_json{{"error", msg}}.dump()};
  }

  StudyManifest manifest_;
  mutable AnnotationStore store_;
  std::string admin_token_;
};

/// Routes the study API onto an httplib server. `static_dir`, when given,
/// is served at "/" for the browser bundle.
inline void mount_study(httplib::Server& srv, StudyService& svc, const std::filesystem::path& static_dir = {}) {
  auto send = [](httplib::Response& res, const HttpReply& r) {
    res.status = r.status;
    res.set_header("Cache-Control", "no-store");
    res.set_content(r.body, r.content_type);
  };
  srv.Get("/api/session", [&svc, send](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.session(req.get_param_value("annotator")));
  });
  srv.Get(R"(/api/audio/([^/]+))", [&svc, send](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.audio(req.matches[1]));
  });
  srv.Post("/api/annotation", [&svc, send](const httplib::Request& req, httplib::Response& res) {
    send(res, svc.annotate(req.body));
  });
  srv.Get("/api/summary", [&svc, send](const httplib::Request& req, httplib::Response& res) {
    std::string token = req.get_header_value("X-Admin-Token");
    if (token.empty()) token = req.get_param_value("token");
    send(res, svc.summary(token, req.get_param_value("format") == "csv"));
  });
  srv.set_exception_handler([send](const httplib::Request&, httplib::Response& res, std::exception_ptr) {
    send(res, {500, "application/json", R"({"error":"internal error"})"});
  });
  if (!static_dir.empty() && !srv.set_mount_point("/", static_dir.string()))
    throw Error(Errc::NotFound, "static directory " + static_dir.string() + " does not exist");
}

/// Blocks serving the study on host:port until the server is stopped.
inline void serve_study(StudyService& svc, const std::string& host, int port,
                        const std::filesystem::path& static_dir = {}) {
  httplib::Server srv;
  mount_study(srv, svc, static_dir);
  if (!srv.listen(host, port)) throw Error(Errc::IoFailure, "cannot listen on " + host + ":" + std::to_string(port));
}

}  // namespace resp
