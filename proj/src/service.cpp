#include "kfqg/service.hpp"

#include <fstream>
#include <random>

#include <httplib.h>

#include "kfqg/error.hpp"
#include "kfqg/random.hpp"
#include "kfqg/serialize.hpp"
#include "kfqg/text.hpp"

namespace kfqg {

namespace {

Response error_response(int status, std::string code, std::string message, std::string stage = {}) {
  json body{{"error", std::move(code)}, {"message", std::move(message)}};
  if (!stage.empty()) body["stage"] = std::move(stage);
  return {status, std::move(body)};
}

Response not_found_session(const std::string& id) {
  return error_response(404, "unknown-session", "no session with id " + id);
}

std::string new_session_id() {
  static std::mutex mu;
  static std::random_device rd;
  std::lock_guard lock(mu);
  std::uint64_t a = (std::uint64_t{rd()} << 32) ^ rd();
  std::uint64_t b = (std::uint64_t{rd()} << 32) ^ rd();
  return text::hex64(a) + text::hex64(b);
}

std::vector<std::string> split_path(std::string_view path) {
  if (auto q = path.find('?'); q != std::string_view::npos) path = path.substr(0, q);
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= path.size()) {
    auto end = path.find('/', start);
    if (end == std::string_view::npos) end = path.size();
    if (end > start) parts.emplace_back(path.substr(start, end - start));
    start = end + 1;
  }
  return parts;
}

json followups_json(const std::vector<FollowUpQuestion>& fs) {
  json out = json::array();
  for (std::size_t i = 0; i < fs.size(); ++i) out.push_back({{"index", i}, {"text", fs[i].text}});
  return out;
}

std::optional<Beta> beta_from_body(const json& body, std::string& problem) {
  auto it = body.find("beta");
  if (it == body.end()) {
    problem = "missing field 'beta'";
    return std::nullopt;
  }
  try {
    return it->get<Beta>();
  } catch (const std::exception& e) {
    problem = e.what();
    return std::nullopt;
  }
}

std::int64_t unix_now() {
  return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch())
      .count();
}

}  // namespace

Service::Service(Pipeline pipeline, ServiceOptions options)
    : clock(unix_now), pipeline_(std::move(pipeline)), options_(std::move(options)) {
  if (pipeline_.config().trace_level != TraceLevel::Full)
    throw Error(ErrorCode::InvalidConfig, "the service needs trace_level \"full\"");
  if (options_.followups == 0) throw Error(ErrorCode::InvalidConfig, "followups must be positive");
  if (!options_.snapshot_dir.empty()) {
    std::filesystem::create_directories(options_.snapshot_dir);
    load_snapshots();
  }
}

Beta Service::beta_of(const Session& s) const { return s.beta.value_or(pipeline_.config().selection.beta); }

std::shared_ptr<Session> Service::find(const std::string& id) {
  evict_expired(clock());
  std::lock_guard lock(mu_);
  auto it = sessions_.find(id);
  if (it == sessions_.end()) return nullptr;
  return it->second;
}

std::size_t Service::session_count() const {
  std::lock_guard lock(mu_);
  return sessions_.size();
}

std::size_t Service::evict_expired(std::int64_t now_unix) {
  std::vector<std::string> dropped;
  {
    std::lock_guard lock(mu_);
    for (auto it = sessions_.begin(); it != sessions_.end();) {
      std::unique_lock session_lock(it->second->mu, std::try_to_lock);
      // A session in use is not idle.
      if (session_lock.owns_lock() && now_unix - it->second->last_access > options_.ttl.count()) {
        dropped.push_back(it->first);
        session_lock.unlock();
        it = sessions_.erase(it);
      } else {
        ++it;
      }
    }
  }
  if (!options_.snapshot_dir.empty()) {
    for (const auto& id : dropped) {
      std::error_code ec;
      std::filesystem::remove(options_.snapshot_dir / (id + ".json"), ec);
    }
  }
  return dropped.size();
}

Response Service::healthz() const { return {200, {{"status", "ok"}, {"sessions", session_count()}}}; }

Response Service::create_session(const json& body) {
  auto s = std::make_shared<Session>();
  s->id = new_session_id();
  if (body.is_object() && body.contains("beta")) {
    std::string problem;
    auto beta = beta_from_body(body, problem);
    if (!beta) return error_response(422, "invalid-body", problem);
    s->beta = *beta;
  } else if (!body.is_null() && !body.is_object()) {
    return error_response(422, "invalid-body", "body must be a JSON object");
  }
  s->last_access = clock();
  persist(*s);
  std::lock_guard lock(mu_);
  sessions_.emplace(s->id, s);
  return {201, {{"id", s->id}, {"beta", beta_of(*s)}}};
}

Response Service::get_session(const std::string& id) {
  auto s = find(id);
  if (!s) return not_found_session(id);
  std::lock_guard lock(s->mu);
  s->last_access = clock();
  return {200, session_json(*s)};
}

Response Service::run_turn(Session& s, const std::string& question, std::optional<std::size_t> chosen_index) {
  const std::size_t index = s.turns.size();
  Turn turn;
  turn.question = question;
  turn.beta = beta_of(s);
  const auto pipeline = pipeline_.with_beta(turn.beta);
  const auto seeds = ItemSeeds::derive(pipeline_.config().seed, index);
  try {
    turn.answer = pipeline.answer(question, derive_seed(seeds.item, "answer"));
  } catch (const Error& e) {
    return error_response(502, std::string(to_string(e.code())), e.what(), "answer");
  }
  turn.result = pipeline.run({question, turn.answer}, index);
  if (!turn.result.status.ok)
    return error_response(502, turn.result.status.error_code, turn.result.status.message, turn.result.status.stage);
  try {
    turn.followups = pipeline.followup_candidates(turn.result.trace, options_.followups);
  } catch (const Error& e) {
    return error_response(502, std::string(to_string(e.code())), e.what(), "fusion");
  }
  if (chosen_index) s.turns.back().chosen = *chosen_index;
  s.turns.push_back(std::move(turn));
  s.last_access = clock();
  persist(s);
  return {200, turn_summary(s, index)};
}

Response Service::ask(const std::string& id, const json& body) {
  auto s = find(id);
  if (!s) return not_found_session(id);
  auto q = body.is_object() ? body.find("question") : body.end();
  if (!body.is_object() || q == body.end() || !q->is_string() || text::trim(q->get<std::string>()).empty())
    return error_response(422, "invalid-body", "expected {\"question\": non-empty string}");
  std::lock_guard lock(s->mu);
  return run_turn(*s, text::trim(q->get<std::string>()), std::nullopt);
}

Response Service::choose(const std::string& id, const json& body) {
  auto s = find(id);
  if (!s) return not_found_session(id);
  std::lock_guard lock(s->mu);
  if (s->turns.empty()) return error_response(409, "no-turn", "ask a question before choosing a follow-up");
  auto it = body.is_object() ? body.find("index") : body.end();
  if (!body.is_object() || it == body.end() || !it->is_number_integer())
    return error_response(422, "invalid-body", "expected {\"index\": integer}");
  const auto& latest = s->turns.back();
  auto index = it->get<std::int64_t>();
  if (index < 0 || static_cast<std::size_t>(index) >= latest.followups.size())
    return error_response(422, "invalid-body",
                          "index out of range (0.." + std::to_string(latest.followups.size()) + ")");
  auto chosen = static_cast<std::size_t>(index);
  return run_turn(*s, latest.followups[chosen].text, chosen);
}

Response Service::trace(const std::string& id, const std::string& turn) {
  auto s = find(id);
  if (!s) return not_found_session(id);
  std::lock_guard lock(s->mu);
  s->last_access = clock();
  std::size_t index = 0;
  try {
    std::size_t used = 0;
    index = std::stoul(turn, &used);
    if (used != turn.size()) throw std::invalid_argument(turn);
  } catch (const std::exception&) {
    return error_response(422, "invalid-turn", "turn must be a non-negative integer");
  }
  if (index >= s->turns.size()) return error_response(404, "unknown-turn", "no turn " + turn);
  const auto& t = s->turns[index];
  const auto& tr = t.result.trace;
  json graph = nullptr;
  if (tr.graph) {
    const std::string selected = tr.selected_node ? tr.selected_node->id : std::string();
    graph = graph_to_json(*tr.graph, tr.node_scores ? &*tr.node_scores : nullptr, &selected);
  }
  return {200,
          {{"session_id", s->id},
           {"turn", index},
           {"beta", t.beta},
           {"status", t.result.status},
           {"trace", trace_to_json(tr)},
           {"graph", graph}}};
}

Response Service::patch_config(const std::string& id, const json& body) {
  auto s = find(id);
  if (!s) return not_found_session(id);
  if (!body.is_object()) return error_response(422, "invalid-body", "expected {\"beta\": number or \"inf\"}");
  std::string problem;
  auto beta = beta_from_body(body, problem);
  if (!beta) return error_response(422, "invalid-body", problem);
  std::lock_guard lock(s->mu);
  s->last_access = clock();
  if (s->turns.empty()) {
    s->beta = *beta;
    persist(*s);
    return {200, {{"session_id", s->id}, {"beta", *beta}, {"turn", nullptr}, {"followups", json::array()}}};
  }
  const std::size_t index = s->turns.size() - 1;
  auto& latest = s->turns.back();
  const auto pipeline = pipeline_.with_beta(*beta);
  auto result = pipeline.reselect(latest.result.trace, *beta, index);
  if (!result.status.ok)
    return error_response(502, result.status.error_code, result.status.message, result.status.stage);
  std::vector<FollowUpQuestion> followups;
  try {
    followups = pipeline.followup_candidates(result.trace, options_.followups);
  } catch (const Error& e) {
    return error_response(502, std::string(to_string(e.code())), e.what(), "fusion");
  }
  s->beta = *beta;
  latest.beta = *beta;
  latest.result = std::move(result);
  latest.followups = std::move(followups);
  latest.chosen.reset();
  persist(*s);
  return {200, turn_summary(*s, index)};
}

json Service::turn_summary(const Session& s, std::size_t index) const {
  const auto& t = s.turns.at(index);
  const auto& tr = t.result.trace;
  json summary{{"trace_id", tr.trace_id}};
  if (tr.key_info) summary["key_info"] = *tr.key_info;
  if (tr.topic_page) summary["topic_page"] = tr.topic_page->title;
  if (tr.selected_node)
    summary["selected_node"] = {{"id", tr.selected_node->id}, {"title", tr.selected_node->title}};
  if (tr.knowledge) {
    summary["wiki_text"] = tr.knowledge->wiki_text;
    summary["fused_text"] = tr.knowledge->fused_text;
  }
  summary["graph_nodes"] = tr.graph ? tr.graph->size() : 0;
  json out{{"session_id", s.id},     {"turn", index},
           {"question", t.question}, {"answer", t.answer},
           {"beta", t.beta},         {"followups", followups_json(t.followups)},
           {"trace_summary", summary}};
  out["chosen"] = t.chosen ? json(*t.chosen) : json(nullptr);
  return out;
}

json Service::session_json(const Session& s) const {
  json turns = json::array();
  for (std::size_t i = 0; i < s.turns.size(); ++i) turns.push_back(turn_summary(s, i));
  return {{"id", s.id}, {"beta", beta_of(s)}, {"turns", turns}};
}

void Service::persist(const Session& s) const {
  if (options_.snapshot_dir.empty()) return;
  json turns = json::array();
  for (const auto& t : s.turns) {
    json jt{{"question", t.question},
            {"answer", t.answer},
            {"followups", t.followups},
            {"beta", t.beta},
            {"result", result_to_json(t.result)}};
    jt["chosen"] = t.chosen ? json(*t.chosen) : json(nullptr);
    turns.push_back(std::move(jt));
  }
  json snap{{"id", s.id}, {"last_access", s.last_access}, {"turns", turns}};
  snap["beta"] = s.beta ? json(*s.beta) : json(nullptr);
  const auto path = options_.snapshot_dir / (s.id + ".json");
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    out << snap.dump();
  }
  std::filesystem::rename(tmp, path);
}

void Service::load_snapshots() {
  for (const auto& entry : std::filesystem::directory_iterator(options_.snapshot_dir)) {
    if (entry.path().extension() != ".json") continue;
    try {
      std::ifstream in(entry.path());
      auto snap = json::parse(in);
      auto s = std::make_shared<Session>();
      s->id = snap.at("id").get<std::string>();
      s->last_access = snap.value("last_access", std::int64_t{0});
      if (!snap["beta"].is_null()) s->beta = snap["beta"].get<Beta>();
      for (const auto& jt : snap.at("turns")) {
        Turn t;
        t.question = jt.at("question").get<std::string>();
        t.answer = jt.at("answer").get<std::string>();
        t.followups = jt.at("followups").get<std::vector<FollowUpQuestion>>();
        if (!jt["chosen"].is_null()) t.chosen = jt["chosen"].get<std::size_t>();
        t.beta = jt.at("beta").get<Beta>();
        t.result = result_from_json(jt.at("result"));
        s->turns.push_back(std::move(t));
      }
      sessions_.emplace(s->id, s);
    } catch (const std::exception&) {
      // Unreadable snapshots are left on disk and ignored.
    }
  }
}

Response Service::handle(std::string_view method, std::string_view path, std::string_view body_text) {
  json body;
  if (!text::trim(body_text).empty()) {
    try {
      body = json::parse(body_text);
    } catch (const json::exception&) {
      return error_response(422, "invalid-body", "body is not valid JSON");
    }
  }
  const auto parts = split_path(path);
  auto wrong_method = [] { return error_response(405, "method-not-allowed", "method not allowed"); };

  try {
    if (parts.size() == 1 && parts[0] == "healthz") return method == "GET" ? healthz() : wrong_method();
    if (parts.empty() || parts[0] != "sessions") return error_response(404, "not-found", "no such route");
    if (parts.size() == 1) return method == "POST" ? create_session(body) : wrong_method();
    const auto& id = parts[1];
    if (parts.size() == 2) return method == "GET" ? get_session(id) : wrong_method();
    if (parts.size() == 3 && parts[2] == "ask") return method == "POST" ? ask(id, body) : wrong_method();
    if (parts.size() == 3 && parts[2] == "choose") return method == "POST" ? choose(id, body) : wrong_method();
    if (parts.size() == 3 && parts[2] == "config") return method == "PATCH" ? patch_config(id, body) : wrong_method();
    if (parts.size() == 4 && parts[2] == "trace") return method == "GET" ? trace(id, parts[3]) : wrong_method();
  } catch (const Error& e) {
    return error_response(502, std::string(to_string(e.code())), e.what(), e.stage());
  } catch (const std::exception& e) {
    return error_response(500, "internal", e.what());
  }
  return error_response(404, "not-found", "no such route");
}

void Service::serve(const std::string& host, int port) {
  auto server = std::make_shared<httplib::Server>();
  {
    std::lock_guard lock(mu_);
    server_ = server;
  }
  if (!options_.static_dir.empty()) server->set_mount_point("/", options_.static_dir.string());
  const auto origin = options_.cors_origin;
  server->set_post_routing_handler([origin](const httplib::Request&, httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", origin);
    res.set_header("Access-Control-Allow-Methods", "GET, POST, PATCH, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  });
  auto route = [this](const httplib::Request& req, httplib::Response& res) {
    auto r = handle(req.method, req.path, req.body);
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  server->Get(".*", route);
  server->Post(".*", route);
  server->Patch(".*", route);
  server->Options(".*", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });
  if (!server->listen(host, port)) throw Error(ErrorCode::InvalidConfig, "cannot listen on " + host + ":" + std::to_string(port));
}

void Service::stop() {
  std::shared_ptr<void> server;
  {
    std::lock_guard lock(mu_);
    server = server_;
  }
  if (server) static_cast<httplib::Server*>(server.get())->stop();
}

}  // namespace kfqg
