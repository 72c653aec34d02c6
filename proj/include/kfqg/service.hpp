#pragma once

#include <chrono>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "kfqg/pipeline.hpp"

namespace kfqg {

struct ServiceOptions {
  std::size_t followups = 3;  // candidates offered per turn
  std::chrono::seconds ttl{3600};
  std::filesystem::path snapshot_dir;  // empty: in-memory only
  std::string cors_origin = "*";
  std::filesystem::path static_dir;  // served at "/" when set
};

struct Turn {
  std::string question;
  std::string answer;
  std::vector<FollowUpQuestion> followups;
  std::optional<std::size_t> chosen;
  Beta beta;
  PipelineResult result;
};

struct Session {
  std::string id;
  std::optional<Beta> beta;  // overrides the configured beta
  std::vector<Turn> turns;
  std::int64_t last_access = 0;  // unix seconds
  std::mutex mu;
};

struct Response {
  int status = 200;
  nlohmann::json body;
};

/// Conversational sessions over a pipeline. Request handlers are plain
/// methods so they can be exercised without a socket; serve() binds them to
/// HTTP routes. Operations on one session are serialized.
class Service {
 public:
  /// The pipeline must keep full traces (β changes reuse graph and scores).
  Service(Pipeline pipeline, ServiceOptions options = {});

  Response create_session(const nlohmann::json& body);
  Response get_session(const std::string& id);
  Response ask(const std::string& id, const nlohmann::json& body);
  Response choose(const std::string& id, const nlohmann::json& body);
  Response trace(const std::string& id, const std::string& turn);
  Response patch_config(const std::string& id, const nlohmann::json& body);
  Response healthz() const;

  /// Routes a request the way the HTTP server does. `body` is raw text.
  Response handle(std::string_view method, std::string_view path, std::string_view body);

  /// Drops sessions idle for longer than the TTL; returns how many.
  std::size_t evict_expired(std::int64_t now_unix);
  std::size_t session_count() const;

  /// Blocks serving HTTP until stop() is called from another thread.
  void serve(const std::string& host, int port);
  void stop();

  /// Clock used for TTL bookkeeping; replaceable in tests.
  std::function<std::int64_t()> clock;

 private:
  std::shared_ptr<Session> find(const std::string& id);
  Response run_turn(Session& s, const std::string& question, std::optional<std::size_t> chosen_index);
  nlohmann::json turn_summary(const Session& s, std::size_t index) const;
  nlohmann::json session_json(const Session& s) const;
  void persist(const Session& s) const;
  void load_snapshots();
  Beta beta_of(const Session& s) const;

  Pipeline pipeline_;
  ServiceOptions options_;
  mutable std::mutex mu_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::shared_ptr<void> server_;  // httplib::Server while serving
};

}  // namespace kfqg
