#include "kfqg/pipeline.hpp"

#include <cctype>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "kfqg/error.hpp"
#include "kfqg/http_backends.hpp"
#include "kfqg/mock_backends.hpp"
#include "kfqg/parallel.hpp"
#include "kfqg/random.hpp"
#include "kfqg/serialize.hpp"
#include "kfqg/text.hpp"

namespace kfqg {

namespace {

constexpr std::array<std::string_view, 4> kRoles = {"chat", "embedder", "scorer", "pages"};

class StageTimer {
 public:
  StageTimer(std::map<std::string, double>& out, std::string stage)
      : out_(out), stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {}
  ~StageTimer() {
    out_[stage_] = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::map<std::string, double>& out_;
  std::string stage_;
  std::chrono::steady_clock::time_point start_;
};

HttpEndpoint endpoint_for(const BackendSpec& spec, std::string_view role) {
  auto ep = HttpEndpoint::from_env(role);
  if (!spec.url.empty()) ep.base_url = spec.url;
  if (!spec.model.empty()) ep.model = spec.model;
  if (!spec.api_key_env.empty()) {
    if (const char* key = std::getenv(spec.api_key_env.c_str())) ep.api_key = key;
  }
  if (ep.base_url.empty()) {
    std::string var = "KFQG_";
    for (char c : role) var.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    throw Error(ErrorCode::InvalidConfig,
                "http " + std::string(role) + " backend needs a url (config or " + var + "_URL)");
  }
  ep.retry.attempts = spec.retry_attempts;
  ep.retry.initial_backoff = std::chrono::milliseconds(spec.retry_backoff_ms);
  return ep;
}

Status status_from(const Error& e, std::string_view fallback_stage) {
  return Status::failed(e.stage().empty() ? std::string(fallback_stage) : e.stage(), std::string(to_string(e.code())),
                        e.what());
}

}  // namespace

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Full: return "full";
    case Variant::NoReranker: return "no_reranker";
    case Variant::NoKgSelection: return "no_kg_selection";
    case Variant::NoLlmKnowledge: return "no_llm_knowledge";
  }
  return "full";
}

Variant parse_variant(std::string_view s) {
  for (auto v : {Variant::Full, Variant::NoReranker, Variant::NoKgSelection, Variant::NoLlmKnowledge})
    if (to_string(v) == s) return v;
  throw Error(ErrorCode::InvalidArgument, "unknown variant: " + std::string(s));
}

std::string_view to_string(TraceLevel t) { return t == TraceLevel::Full ? "full" : "minimal"; }

PipelineConfig PipelineConfig::defaults() {
  PipelineConfig c;
  for (auto role : kRoles) {
    c.backends[std::string(role)] = BackendSpec{};
    c.bindings[std::string(role)] = std::string(role);
  }
  return c;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open config " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, "config " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(j, path.parent_path());
}

std::filesystem::path PipelineConfig::resolve(const std::string& p) const {
  std::filesystem::path path(p);
  if (path.is_absolute() || base_dir.empty()) return path;
  return base_dir / path;
}

const BackendSpec& PipelineConfig::backend_for(std::string_view role) const {
  auto b = bindings.find(std::string(role));
  if (b == bindings.end()) throw Error(ErrorCode::InvalidConfig, "no backend bound to role " + std::string(role));
  auto spec = backends.find(b->second);
  if (spec == backends.end())
    throw Error(ErrorCode::InvalidConfig,
                "role " + std::string(role) + " is bound to unknown backend '" + b->second + "'");
  return spec->second;
}

void PipelineConfig::validate() const {
  try {
    recognition.validate();
    selection.validate();
    generation.validate();
  } catch (const Error& e) {
    throw Error(ErrorCode::InvalidConfig, e.what());
  }
  if (workers == 0) throw Error(ErrorCode::InvalidConfig, "workers must be positive");
  for (auto role : kRoles) {
    const auto& spec = backend_for(role);
    if (spec.type == "mock" && role == "embedder" && spec.dim == 0)
      throw Error(ErrorCode::InvalidConfig, "mock embedder dim must be positive");
    if (spec.type == "mock" && role == "scorer" && spec.vocab_size < 2)
      throw Error(ErrorCode::InvalidConfig, "mock scorer vocab_size must be at least 2");
    if (spec.type == "mock" && role == "pages" && spec.path.empty())
      throw Error(ErrorCode::InvalidConfig, "mock page source needs a fixture directory path");
  }
}

std::string PipelineConfig::hash() const {
  json j = config_to_json(*this);
  j.erase("workers");
  j.erase("emit_timings");
  j["recognition"].erase("scorer_parallelism");
  j["selection"].erase("resolve_parallelism");
  // Only bound instances matter.
  json bound = json::object();
  for (auto role : kRoles) bound[std::string(role)] = j["backends"][bindings.at(std::string(role))];
  j["backends"] = bound;
  j.erase("bindings");
  return text::hex64(text::fnv1a(j.dump()));
}

Backends make_backends(const PipelineConfig& config) {
  Backends b;
  {
    const auto& s = config.backend_for("chat");
    if (s.type == "http")
      b.chat = std::make_shared<HttpChat>(endpoint_for(s, "chat"));
    else
      b.chat = std::make_shared<MockChat>(s.path.empty() ? MockChatConfig{}
                                                         : MockChat::load_config(config.resolve(s.path)));
  }
  {
    const auto& s = config.backend_for("embedder");
    if (s.type == "http")
      b.embedder = std::make_shared<HttpEmbedder>(endpoint_for(s, "embedder"));
    else
      b.embedder = std::make_shared<HashEmbedder>(s.dim);
  }
  {
    const auto& s = config.backend_for("scorer");
    if (s.type == "http")
      b.scorer = std::make_shared<HttpScorer>(endpoint_for(s, "scorer"));
    else if (s.path.empty())
      b.scorer = std::make_shared<TableScorer>(s.vocab_size);
    else
      b.scorer = std::make_shared<TableScorer>(TableScorer::load(config.resolve(s.path)));
  }
  {
    const auto& s = config.backend_for("pages");
    if (s.type == "http")
      b.pages = std::make_shared<HttpPageSource>(endpoint_for(s, "pages"));
    else
      b.pages = std::make_shared<FixtureCorpus>(FixtureCorpus::load_dir(config.resolve(s.path)));
  }
  return b;
}

ItemSeeds ItemSeeds::derive(std::uint64_t config_seed, std::size_t index) {
  ItemSeeds s;
  s.item = derive_seed(config_seed, static_cast<std::uint64_t>(index));
  s.walk = derive_seed(s.item, "walk");
  s.generation = derive_seed(s.item, "generation");
  s.ablation = derive_seed(s.item, "ablation");
  return s;
}

Pipeline::Pipeline(PipelineConfig config, Backends backends, PromptSet prompts)
    : config_(std::move(config)),
      backends_(std::move(backends)),
      prompts_(std::move(prompts)),
      cache_(std::make_shared<GraphCache>()) {
  config_.validate();
  if (!backends_.chat || !backends_.embedder || !backends_.scorer || !backends_.pages)
    throw Error(ErrorCode::InvalidConfig, "every backend role must be bound");
  config_hash_ = config_.hash();
}

Pipeline Pipeline::from_config(PipelineConfig config) {
  config.validate();
  auto backends = make_backends(config);
  auto prompts = config.prompts_dir.empty() ? PromptSet() : PromptSet::load_dir(config.resolve(config.prompts_dir));
  return Pipeline(std::move(config), std::move(backends), std::move(prompts));
}

Pipeline Pipeline::with_beta(const Beta& beta) const {
  Pipeline copy = *this;
  copy.config_.selection.beta = beta;
  copy.config_hash_ = copy.config_.hash();
  return copy;
}

KnowledgeGraph Pipeline::graph_for(const WikiPage& page, const GenerationParams& params) const {
  const auto& b = config_.selection.budget;
  std::ostringstream key;
  key << page.title << '\x1f' << page.url << '\x1f' << b.max_nodes << ',' << b.max_depth << ',' << b.max_children
      << '\x1f' << params.seed.value_or(0) << ',' << params.temperature << ',' << params.max_tokens << '\x1f'
      << prompts_.get(prompt_names::kExpansion).hash() << prompts_.get(prompt_names::kDefinition).hash();
  {
    std::lock_guard lock(cache_->mu);
    if (auto it = cache_->graphs.find(key.str()); it != cache_->graphs.end()) return it->second;
  }
  auto graph = build_graph(page, b, *backends_.chat, *backends_.pages, prompts_, params);
  std::lock_guard lock(cache_->mu);
  return cache_->graphs.emplace(key.str(), std::move(graph)).first->second;
}

void Pipeline::run_fusion(PipelineResult& result, Variant variant, const GenerationParams& params) const {
  auto& trace = result.trace;
  StageTimer timer(trace.timings_ms, "fusion");
  const auto& node = *trace.selected_node;
  if (variant == Variant::NoLlmKnowledge)
    trace.knowledge = raw_knowledge(node.definition, node.id);
  else
    trace.knowledge = continue_knowledge(trace.qa, node.definition, node.id, *backends_.chat, prompts_, params);
  auto q = generate_followup(trace.qa, *trace.knowledge, *backends_.chat, prompts_, params);
  q.trace_id = trace.trace_id;
  trace.question = q;
  result.question = q;
}

PipelineResult Pipeline::run(const QAPair& qa, std::size_t item_index, Variant variant) const {
  PipelineResult result;
  auto& trace = result.trace;
  const auto seeds = ItemSeeds::derive(config_.seed, item_index);
  trace.qa = qa;
  trace.variant = std::string(to_string(variant));
  trace.config_hash = config_hash_;
  trace.item_seed = seeds.item;
  trace.trace_id = text::hex64(
      text::fnv1a(config_hash_ + ":" + std::to_string(item_index) + ":" + trace.variant + ":" + qa.question));
  for (const auto& [name, tmpl] : prompts_.all()) trace.prompt_hashes[name] = tmpl.hash();

  GenerationParams params = config_.generation;
  params.seed = seeds.generation;
  const bool full_trace = config_.trace_level == TraceLevel::Full;

  const char* stage = "recognition";
  try {
    {
      StageTimer timer(trace.timings_ms, "recognition");
      qa.validate();
      trace.key_info = extract_key_info(qa, config_.recognition.n_keywords, *backends_.chat, prompts_, params);
      auto pages = iterative_retrieve(*trace.key_info, config_.recognition.candidate_limit, *backends_.pages);
      std::vector<RankedPage> ranking;
      if (variant == Variant::NoReranker || pages.size() == 1) {
        for (auto& p : pages) ranking.push_back({std::move(p), 0.0, false});
      } else {
        ranking = rerank(RerankQuery::from(*trace.key_info), pages, *backends_.scorer,
                         config_.recognition.scorer_parallelism);
      }
      trace.topic_page = ranking.front().page;
      trace.candidates = std::move(ranking);
    }

    stage = "selection";
    {
      StageTimer timer(trace.timings_ms, "selection");
      auto graph = graph_for(*trace.topic_page, params);
      SelectionConfig sel = config_.selection;
      sel.rng_seed = seeds.walk;
      auto selection = select_node(graph, RerankQuery::from(*trace.key_info).text, sel, *backends_.embedder);
      if (variant == Variant::NoKgSelection) {
        std::vector<std::size_t> others;
        for (std::size_t i = 0; i < graph.size(); ++i)
          if (graph.nodes()[i].id != graph.center_id()) others.push_back(i);
        Rng rng(seeds.ablation);
        selection.node = graph.nodes()[others[rng.index(others.size())]];
      }
      trace.selected_node = selection.node;
      if (full_trace) {
        trace.graph = std::move(graph);
        trace.node_scores = std::move(selection.scores);
      }
    }

    stage = "fusion";
    run_fusion(result, variant, params);
  } catch (const Error& e) {
    result.status = status_from(e, stage);
    result.question.reset();
    return result;
  } catch (const std::exception& e) {
    result.status = Status::failed(stage, "internal", e.what());
    result.question.reset();
    return result;
  }
  return result;
}

BatchResult Pipeline::run_batch(const std::vector<QAPair>& items, Variant variant) const {
  BatchResult out;
  out.results = parallel_map<PipelineResult>(items.size(), config_.workers,
                                             [&](std::size_t i) { return run(items[i], i, variant); });
  out.summary.total = out.results.size();
  for (const auto& r : out.results) {
    if (r.status.ok) {
      ++out.summary.ok;
    } else {
      ++out.summary.failed;
      ++out.summary.failed_by_stage[r.status.stage];
      ++out.summary.failed_by_code[r.status.error_code];
    }
  }
  return out;
}

PipelineResult Pipeline::reselect(const TraceRecord& trace, const Beta& beta, std::size_t item_index) const {
  if (!trace.graph || !trace.node_scores || !trace.knowledge)
    throw Error(ErrorCode::MissingTrace, "re-selection needs a full trace with graph and scores");
  PipelineResult result;
  result.trace = trace;
  auto& t = result.trace;
  t.knowledge.reset();
  t.question.reset();
  t.timings_ms.erase("fusion");

  auto scores = *trace.node_scores;
  rescore(scores, beta);
  auto best = best_candidate(scores, trace.graph->center_id(), beta);
  t.node_scores = scores;
  t.selected_node = trace.graph->node(scores[best].node_id);

  GenerationParams params = config_.generation;
  params.seed = ItemSeeds::derive(config_.seed, item_index).generation;
  try {
    run_fusion(result, parse_variant(trace.variant.empty() ? "full" : trace.variant), params);
  } catch (const Error& e) {
    result.status = status_from(e, "fusion");
    result.question.reset();
  }
  return result;
}

std::vector<FollowUpQuestion> Pipeline::followup_candidates(const TraceRecord& trace, std::size_t k) const {
  if (!trace.knowledge || !trace.question)
    throw Error(ErrorCode::MissingTrace, "follow-up candidates need a finished trace");
  std::vector<FollowUpQuestion> out;
  if (k == 0) return out;
  out.push_back(*trace.question);
  const auto base = derive_seed(trace.item_seed, "generation");
  // Colliding seeds are retried with fresh ones, within a fixed number of calls.
  for (std::size_t i = 1; i < 4 * k && out.size() < k; ++i) {
    GenerationParams params = config_.generation;
    params.seed = derive_seed(base, "candidate-" + std::to_string(i));
    try {
      auto q = generate_followup(trace.qa, *trace.knowledge, *backends_.chat, prompts_, params);
      q.trace_id = trace.trace_id;
      if (std::find(out.begin(), out.end(), q) == out.end()) out.push_back(std::move(q));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::NonQuestionOutput && e.code() != ErrorCode::DuplicateQuestion) throw;
    }
  }
  return out;
}

std::string Pipeline::answer(std::string_view question, std::uint64_t seed) const {
  GenerationParams params = config_.generation;
  params.seed = seed;
  return text::trim(backends_.chat->chat_complete(
      prompts_.get(prompt_names::kAnswer).render({{"question", std::string(question)}}), params));
}

}  // namespace kfqg
