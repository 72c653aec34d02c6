#include "kfqg/serialize.hpp"

#include <cmath>
#include <set>

#include "kfqg/error.hpp"

namespace kfqg {

namespace {

template <typename T>
void get_opt(const json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

template <typename T>
void put_opt(json& j, const char* key, const std::optional<T>& v) {
  if (v) j[key] = *v;
}

template <typename T>
void get_optional(const json& j, const char* key, std::optional<T>& out) {
  if (auto it = j.find(key); it != j.end() && !it->is_null()) out = it->get<T>();
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, where + " must be an object");
  std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [k, _] : j.items())
    if (!ok.contains(k)) throw Error(ErrorCode::InvalidConfig, "unknown key '" + k + "' in " + where);
}

json backend_to_json(const BackendSpec& b) {
  json j{{"type", b.type}};
  if (!b.path.empty()) j["path"] = b.path;
  if (b.type == "mock") {
    j["dim"] = b.dim;
    j["vocab_size"] = b.vocab_size;
  }
  if (b.type == "http") {
    j["url"] = b.url;
    j["model"] = b.model;
    j["api_key_env"] = b.api_key_env;
    j["retry_attempts"] = b.retry_attempts;
    j["retry_backoff_ms"] = b.retry_backoff_ms;
  }
  return j;
}

BackendSpec backend_from_json(const json& j, const std::string& name) {
  check_keys(j, {"type", "path", "dim", "vocab_size", "url", "model", "api_key_env", "retry_attempts",
                 "retry_backoff_ms"},
             "backend '" + name + "'");
  BackendSpec b;
  get_opt(j, "type", b.type);
  if (b.type == "fixture") b.type = "mock";
  if (b.type != "mock" && b.type != "http")
    throw Error(ErrorCode::InvalidConfig, "backend '" + name + "' has unknown type '" + b.type + "'");
  get_opt(j, "path", b.path);
  get_opt(j, "dim", b.dim);
  get_opt(j, "vocab_size", b.vocab_size);
  get_opt(j, "url", b.url);
  get_opt(j, "model", b.model);
  get_opt(j, "api_key_env", b.api_key_env);
  get_opt(j, "retry_attempts", b.retry_attempts);
  get_opt(j, "retry_backoff_ms", b.retry_backoff_ms);
  return b;
}

}  // namespace

void to_json(json& j, const WikiPage& p) {
  j = json{{"title", p.title}, {"url", p.url}, {"definition", p.definition}, {"body", p.body}};
}
void from_json(const json& j, WikiPage& p) {
  p.title = j.at("title").get<std::string>();
  get_opt(j, "url", p.url);
  get_opt(j, "definition", p.definition);
  get_opt(j, "body", p.body);
}

void to_json(json& j, const QAPair& qa) { j = json{{"question", qa.question}, {"answer", qa.answer}}; }
void from_json(const json& j, QAPair& qa) {
  qa.question = j.at("question").get<std::string>();
  qa.answer = j.at("answer").get<std::string>();
}

void to_json(json& j, const KeyInfo& k) { j = json{{"topic", k.topic}, {"keywords", k.keywords}}; }
void from_json(const json& j, KeyInfo& k) {
  k.topic = j.at("topic").get<std::string>();
  k.keywords = j.at("keywords").get<std::vector<std::string>>();
}

void to_json(json& j, const RankedPage& r) {
  j = json{{"page", r.page}, {"log_score", r.log_score}, {"scored", r.scored}};
}
void from_json(const json& j, RankedPage& r) {
  r.page = j.at("page").get<WikiPage>();
  r.log_score = j.at("log_score").get<double>();
  get_opt(j, "scored", r.scored);
}

void to_json(json& j, const KGNode& n) {
  j = json{{"id", n.id}, {"title", n.title}, {"definition", n.definition}};
  j["url"] = n.url ? json(*n.url) : json(nullptr);
}
void from_json(const json& j, KGNode& n) {
  n.id = j.at("id").get<std::string>();
  n.title = j.at("title").get<std::string>();
  get_opt(j, "definition", n.definition);
  n.url.reset();
  get_optional(j, "url", n.url);
}

void to_json(json& j, const NodeScore& s) {
  j = json{{"node_id", s.node_id}, {"w", s.w},         {"n", s.n},          {"I", s.importance},
           {"I_norm", s.importance_norm}, {"S", s.similarity}, {"R", s.composite}, {"zero_vector", s.zero_vector}};
}
void from_json(const json& j, NodeScore& s) {
  s.node_id = j.at("node_id").get<std::string>();
  s.w = j.at("w").get<double>();
  s.n = j.at("n").get<std::uint64_t>();
  s.importance = j.at("I").get<double>();
  s.importance_norm = j.at("I_norm").get<double>();
  s.similarity = j.at("S").get<double>();
  s.composite = j.at("R").get<double>();
  get_opt(j, "zero_vector", s.zero_vector);
}

void to_json(json& j, const RelatedKnowledge& k) {
  j = json{{"wiki_text", k.wiki_text}, {"fused_text", k.fused_text}, {"source_node_id", k.source_node_id}};
}
void from_json(const json& j, RelatedKnowledge& k) {
  k.wiki_text = j.at("wiki_text").get<std::string>();
  k.fused_text = j.at("fused_text").get<std::string>();
  get_opt(j, "source_node_id", k.source_node_id);
}

void to_json(json& j, const FollowUpQuestion& q) { j = json{{"text", q.text}, {"trace_id", q.trace_id}}; }
void from_json(const json& j, FollowUpQuestion& q) {
  q.text = j.at("text").get<std::string>();
  get_opt(j, "trace_id", q.trace_id);
}

void to_json(json& j, const Beta& b) {
  if (b.infinite)
    j = "inf";
  else
    j = b.value;
}
void from_json(const json& j, Beta& b) {
  if (j.is_string()) {
    b = Beta::parse(j.get<std::string>());
  } else if (j.is_number()) {
    double v = j.get<double>();
    if (!std::isfinite(v) || v < 0.0) throw Error(ErrorCode::InvalidConfig, "beta must be >= 0");
    b = {v, false};
  } else {
    throw Error(ErrorCode::InvalidConfig, "beta must be a number or \"inf\"");
  }
}

void to_json(json& j, const Status& s) {
  if (s.ok) {
    j = json{{"ok", true}};
  } else {
    j = json{{"ok", false}, {"stage", s.stage}, {"error", s.error_code}, {"message", s.message}};
  }
}
void from_json(const json& j, Status& s) {
  s = {};
  s.ok = j.at("ok").get<bool>();
  get_opt(j, "stage", s.stage);
  get_opt(j, "error", s.error_code);
  get_opt(j, "message", s.message);
}

void to_json(json& j, const BatchSummary& s) {
  j = json{{"total", s.total},
           {"ok", s.ok},
           {"failed", s.failed},
           {"failed_by_stage", s.failed_by_stage},
           {"failed_by_code", s.failed_by_code}};
}

void to_json(json& j, const CorpusStats& s) {
  j = json{{"count", s.count}};
  for (auto [name, f] : {std::pair{"initial_question", &s.initial_question}, std::pair{"answer", &s.answer},
                         std::pair{"follow_up", &s.follow_up}}) {
    if (*f)
      j[name] = json{{"mean", (*f)->mean}, {"min", (*f)->min}, {"max", (*f)->max}};
    else
      j[name] = nullptr;
  }
}

json graph_to_json(const KnowledgeGraph& g, const std::vector<NodeScore>* scores, const std::string* selected_id) {
  json nodes = json::array();
  for (std::size_t i = 0; i < g.nodes().size(); ++i) {
    json n = g.nodes()[i];
    if (scores) {
      for (const auto& s : *scores) {
        if (s.node_id != n["id"]) continue;
        n["score"] = json{{"w", s.w},           {"n", s.n}, {"I", s.importance}, {"I_norm", s.importance_norm},
                          {"S", s.similarity}, {"R", s.composite}};
        break;
      }
    }
    if (selected_id) n["selected"] = (g.nodes()[i].id == *selected_id);
    n["center"] = (g.nodes()[i].id == g.center_id());
    nodes.push_back(std::move(n));
  }
  json edges = json::array();
  for (const auto& e : g.edges()) edges.push_back({{"source", e.source}, {"target", e.target}, {"relation", e.relation}});
  return json{{"center", g.center_id()}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

KnowledgeGraph graph_from_json(const json& j) {
  const auto center_id = j.at("center").get<std::string>();
  const auto& nodes = j.at("nodes");
  KnowledgeGraph g;
  bool have_center = false;
  for (const auto& n : nodes) {
    if (n.at("id") == center_id) {
      g = KnowledgeGraph(n.get<KGNode>());
      have_center = true;
      break;
    }
  }
  if (!have_center) throw Error(ErrorCode::InvalidArgument, "graph center is not among its nodes");
  for (const auto& n : nodes)
    if (n.at("id") != center_id) g.add_node(n.get<KGNode>());
  for (const auto& e : j.at("edges"))
    g.add_edge(e.at("source").get<std::string>(), e.at("target").get<std::string>(),
               e.value("relation", std::string("related to")));
  return g;
}

json trace_to_json(const TraceRecord& t, bool with_timings) {
  json j{{"trace_id", t.trace_id},
         {"variant", t.variant},
         {"config_hash", t.config_hash},
         {"item_seed", t.item_seed},
         {"qa", t.qa}};
  put_opt(j, "key_info", t.key_info);
  put_opt(j, "candidates", t.candidates);
  put_opt(j, "topic_page", t.topic_page);
  if (t.graph) j["graph"] = graph_to_json(*t.graph);
  put_opt(j, "node_scores", t.node_scores);
  put_opt(j, "selected_node", t.selected_node);
  put_opt(j, "knowledge", t.knowledge);
  put_opt(j, "question", t.question);
  j["prompt_hashes"] = t.prompt_hashes;
  if (with_timings) j["timings_ms"] = t.timings_ms;
  return j;
}

TraceRecord trace_from_json(const json& j) {
  TraceRecord t;
  get_opt(j, "trace_id", t.trace_id);
  get_opt(j, "variant", t.variant);
  get_opt(j, "config_hash", t.config_hash);
  get_opt(j, "item_seed", t.item_seed);
  t.qa = j.at("qa").get<QAPair>();
  get_optional(j, "key_info", t.key_info);
  get_optional(j, "candidates", t.candidates);
  get_optional(j, "topic_page", t.topic_page);
  if (auto it = j.find("graph"); it != j.end() && !it->is_null()) t.graph = graph_from_json(*it);
  get_optional(j, "node_scores", t.node_scores);
  get_optional(j, "selected_node", t.selected_node);
  get_optional(j, "knowledge", t.knowledge);
  get_optional(j, "question", t.question);
  get_opt(j, "prompt_hashes", t.prompt_hashes);
  get_opt(j, "timings_ms", t.timings_ms);
  return t;
}

json result_to_json(const PipelineResult& r, bool with_timings) {
  json j{{"status", r.status}};
  j["question"] = r.question ? json(*r.question) : json(nullptr);
  j["trace"] = trace_to_json(r.trace, with_timings);
  return j;
}

PipelineResult result_from_json(const json& j) {
  PipelineResult r;
  r.status = j.at("status").get<Status>();
  get_optional(j, "question", r.question);
  r.trace = trace_from_json(j.at("trace"));
  return r;
}

json config_to_json(const PipelineConfig& c) {
  json backends = json::object();
  for (const auto& [name, spec] : c.backends) backends[name] = backend_to_json(spec);
  return json{{"seed", c.seed},
              {"recognition",
               {{"n_keywords", c.recognition.n_keywords},
                {"candidate_limit", c.recognition.candidate_limit},
                {"scorer_parallelism", c.recognition.scorer_parallelism}}},
              {"selection",
               {{"beta", c.selection.beta},
                {"walk_steps", c.selection.walk_steps},
                {"pagerank_damping", c.selection.pagerank_damping},
                {"pagerank_tol", c.selection.pagerank_tol},
                {"pagerank_max_iter", c.selection.pagerank_max_iter},
                {"restart_prob", c.selection.restart_prob},
                {"max_nodes", c.selection.budget.max_nodes},
                {"max_depth", c.selection.budget.max_depth},
                {"max_children", c.selection.budget.max_children},
                {"resolve_parallelism", c.selection.budget.resolve_parallelism}}},
              {"generation", {{"temperature", c.generation.temperature}, {"max_tokens", c.generation.max_tokens}}},
              {"backends", backends},
              {"bindings", c.bindings},
              {"trace_level", std::string(to_string(c.trace_level))},
              {"prompts_dir", c.prompts_dir},
              {"workers", c.workers},
              {"emit_timings", c.emit_timings}};
}

PipelineConfig config_from_json(const json& j, const std::filesystem::path& base_dir) {
  PipelineConfig c = PipelineConfig::defaults();
  c.base_dir = base_dir;
  try {
    check_keys(j,
               {"seed", "recognition", "selection", "generation", "backends", "bindings", "trace_level", "prompts_dir",
                "workers", "emit_timings"},
               "config");
    get_opt(j, "seed", c.seed);
    if (auto it = j.find("recognition"); it != j.end()) {
      check_keys(*it, {"n_keywords", "candidate_limit", "scorer_parallelism"}, "recognition");
      get_opt(*it, "n_keywords", c.recognition.n_keywords);
      get_opt(*it, "candidate_limit", c.recognition.candidate_limit);
      get_opt(*it, "scorer_parallelism", c.recognition.scorer_parallelism);
    }
    if (auto it = j.find("selection"); it != j.end()) {
      check_keys(*it,
                 {"beta", "walk_steps", "pagerank_damping", "pagerank_tol", "pagerank_max_iter", "restart_prob",
                  "max_nodes", "max_depth", "max_children", "resolve_parallelism"},
                 "selection");
      auto& s = c.selection;
      get_opt(*it, "beta", s.beta);
      get_opt(*it, "walk_steps", s.walk_steps);
      get_opt(*it, "pagerank_damping", s.pagerank_damping);
      get_opt(*it, "pagerank_tol", s.pagerank_tol);
      get_opt(*it, "pagerank_max_iter", s.pagerank_max_iter);
      get_opt(*it, "restart_prob", s.restart_prob);
      get_opt(*it, "max_nodes", s.budget.max_nodes);
      get_opt(*it, "max_depth", s.budget.max_depth);
      get_opt(*it, "max_children", s.budget.max_children);
      get_opt(*it, "resolve_parallelism", s.budget.resolve_parallelism);
    }
    if (auto it = j.find("generation"); it != j.end()) {
      check_keys(*it, {"temperature", "max_tokens"}, "generation");
      get_opt(*it, "temperature", c.generation.temperature);
      get_opt(*it, "max_tokens", c.generation.max_tokens);
    }
    if (auto it = j.find("backends"); it != j.end()) {
      if (!it->is_object()) throw Error(ErrorCode::InvalidConfig, "backends must be an object");
      for (const auto& [name, spec] : it->items()) c.backends[name] = backend_from_json(spec, name);
    }
    if (auto it = j.find("bindings"); it != j.end()) {
      check_keys(*it, {"chat", "embedder", "scorer", "pages"}, "bindings");
      for (const auto& [role, name] : it->items()) c.bindings[role] = name.get<std::string>();
    }
    if (auto it = j.find("trace_level"); it != j.end()) {
      auto level = it->get<std::string>();
      if (level == "full")
        c.trace_level = TraceLevel::Full;
      else if (level == "minimal")
        c.trace_level = TraceLevel::Minimal;
      else
        throw Error(ErrorCode::InvalidConfig, "trace_level must be \"minimal\" or \"full\"");
    }
    get_opt(j, "prompts_dir", c.prompts_dir);
    get_opt(j, "workers", c.workers);
    get_opt(j, "emit_timings", c.emit_timings);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, std::string("config: ") + e.what());
  }
  c.validate();
  return c;
}

}  // namespace kfqg
