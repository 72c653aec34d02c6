#include "kfqg/selection.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "kfqg/random.hpp"
#include "kfqg/text.hpp"

namespace kfqg {

Beta Beta::parse(std::string_view s) {
  auto t = text::to_lower(text::trim(s));
  if (t == "inf" || t == "infinity" || t == "+inf" || t == "\xe2\x88\x9e") return inf();
  try {
    std::size_t used = 0;
    double v = std::stod(t, &used);
    if (used != t.size() || !std::isfinite(v) || v < 0.0) throw std::invalid_argument(t);
    return {v, false};
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidConfig, "invalid beta: " + std::string(s));
  }
}

std::string Beta::label() const {
  if (infinite) return "\xe2\x88\x9e";
  std::ostringstream ss;
  ss << value;
  return ss.str();
}

void SelectionConfig::validate() const {
  if (!beta.infinite && !(beta.value >= 0.0 && std::isfinite(beta.value)))
    throw Error(ErrorCode::InvalidConfig, "beta must be >= 0 or infinite");
  if (walk_steps == 0) throw Error(ErrorCode::InvalidConfig, "walk_steps must be positive");
  if (!(pagerank_damping > 0.0 && pagerank_damping < 1.0))
    throw Error(ErrorCode::InvalidConfig, "pagerank_damping must be in (0,1)");
  if (!(restart_prob >= 0.0 && restart_prob < 1.0))
    throw Error(ErrorCode::InvalidConfig, "restart_prob must be in [0,1)");
  if (budget.max_nodes == 0 || budget.max_children == 0 || budget.resolve_parallelism == 0)
    throw Error(ErrorCode::InvalidConfig, "graph budget values must be positive");
}

ScoreMap pagerank(const KnowledgeGraph& graph, double damping, double tol, std::size_t max_iter) {
  graph.validate();
  const auto adj = graph.undirected_adjacency();
  const std::size_t n = adj.size();
  const double base = (1.0 - damping) / static_cast<double>(n);
  std::vector<double> rank(n, 1.0 / static_cast<double>(n)), next(n);

  for (std::size_t iter = 0; iter < max_iter; ++iter) {
    double dangling = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      if (adj[i].empty()) dangling += rank[i];
    const double spread = base + damping * dangling / static_cast<double>(n);
    std::fill(next.begin(), next.end(), spread);
    for (std::size_t j = 0; j < n; ++j) {
      if (adj[j].empty()) continue;
      const double share = damping * rank[j] / static_cast<double>(adj[j].size());
      for (auto i : adj[j]) next[i] += share;
    }
    double delta = 0.0;
    for (std::size_t i = 0; i < n; ++i) delta += std::abs(next[i] - rank[i]);
    rank.swap(next);
    if (delta < tol) break;
  }

  double total = 0.0;
  for (double r : rank) total += r;
  ScoreMap out;
  for (std::size_t i = 0; i < n; ++i) out.emplace(graph.nodes()[i].id, rank[i] / total);
  return out;
}

VisitMap random_walk_visits(const KnowledgeGraph& graph, std::size_t steps, double restart_prob,
                            std::uint64_t seed) {
  graph.validate();
  const auto adj = graph.undirected_adjacency();
  const std::size_t center = graph.index_of(graph.center_id());
  std::vector<std::uint64_t> counts(adj.size(), 0);
  Rng rng(seed);

  std::size_t cur = center;
  counts[cur] = 1;
  for (std::size_t s = 0; s < steps; ++s) {
    bool restart = restart_prob > 0.0 && rng.uniform() < restart_prob;
    if (restart || adj[cur].empty()) {
      cur = center;
    } else {
      cur = adj[cur][rng.index(adj[cur].size())];
    }
    ++counts[cur];
  }

  VisitMap out;
  for (std::size_t i = 0; i < adj.size(); ++i) out.emplace(graph.nodes()[i].id, counts[i]);
  return out;
}

ScoreMap importance(const ScoreMap& weights, const VisitMap& visits) {
  if (weights.size() != visits.size())
    throw Error(ErrorCode::KeyMismatch, "weight and visit maps have different sizes");
  ScoreMap out;
  for (const auto& [id, w] : weights) {
    auto it = visits.find(id);
    if (it == visits.end()) throw Error(ErrorCode::KeyMismatch, "no visit count for " + id);
    out.emplace(id, w * static_cast<double>(it->second));
  }
  return out;
}

ScoreMap normalize_importance(const ScoreMap& imp) {
  if (imp.empty()) throw Error(ErrorCode::InvalidArgument, "nothing to normalize");
  auto [lo, hi] = std::minmax_element(imp.begin(), imp.end(),
                                      [](const auto& a, const auto& b) { return a.second < b.second; });
  const double min = lo->second, max = hi->second;
  ScoreMap out;
  for (const auto& [id, v] : imp) {
    double norm = max == min ? 0.5 : (v - min) / (max - min);
    out.emplace(id, std::clamp(norm, 0.0, 1.0));
  }
  return out;
}

Similarity semantic_similarity(const Embedding& query, const Embedding& node) {
  auto c = cosine(query, node);
  if (!c) return {0.0, true};
  return {*c, false};
}

Similarity semantic_similarity(std::string_view query_text, const KGNode& node, const Embedder& embedder) {
  if (text::trim(query_text).empty() || text::trim(node.definition).empty())
    throw Error(ErrorCode::InvalidArgument, "similarity needs two non-empty texts");
  return semantic_similarity(embedder.embed(query_text), embedder.embed(node.definition));
}

ScoreMap composite_score(const ScoreMap& importance_norm, const ScoreMap& similarity, const Beta& beta) {
  if (importance_norm.size() != similarity.size())
    throw Error(ErrorCode::KeyMismatch, "importance and similarity maps have different sizes");
  ScoreMap out;
  for (const auto& [id, i_norm] : importance_norm) {
    auto it = similarity.find(id);
    if (it == similarity.end()) throw Error(ErrorCode::KeyMismatch, "no similarity for " + id);
    out.emplace(id, beta.infinite ? it->second : i_norm + beta.value * it->second);
  }
  return out;
}

bool ranks_before(const NodeScore& a, const NodeScore& b, const Beta& beta) {
  if (beta.infinite) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    if (a.importance_norm != b.importance_norm) return a.importance_norm > b.importance_norm;
    return a.node_id < b.node_id;
  }
  if (a.composite != b.composite) return a.composite > b.composite;
  if (a.similarity != b.similarity) return a.similarity > b.similarity;
  return a.node_id < b.node_id;
}

std::size_t best_candidate(const std::vector<NodeScore>& scores, const std::string& center_id, const Beta& beta) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (scores[i].node_id == center_id) continue;
    if (!best || ranks_before(scores[i], scores[*best], beta)) best = i;
  }
  if (!best) throw Error(ErrorCode::GraphTooSmall, "no candidate besides the center node");
  return *best;
}

void rescore(std::vector<NodeScore>& scores, const Beta& beta) {
  for (auto& s : scores)
    s.composite = beta.infinite ? s.similarity : s.importance_norm + beta.value * s.similarity;
}

Selection select_node(const KnowledgeGraph& graph, const ScoreMap& similarity, const SelectionConfig& config,
                      const std::map<std::string, bool>& zero_vector) {
  config.validate();
  if (graph.size() < 2) throw Error(ErrorCode::GraphTooSmall, "selection needs at least two nodes");
  auto w = pagerank(graph, config.pagerank_damping, config.pagerank_tol, config.pagerank_max_iter);
  auto n = random_walk_visits(graph, config.walk_steps, config.restart_prob, config.rng_seed);
  auto imp = importance(w, n);
  auto imp_norm = normalize_importance(imp);
  auto r = composite_score(imp_norm, similarity, config.beta);

  Selection out;
  for (const auto& node : graph.nodes()) {
    const auto& id = node.id;
    auto zv = zero_vector.find(id);
    out.scores.push_back({id, w.at(id), n.at(id), imp.at(id), imp_norm.at(id), similarity.at(id), r.at(id),
                          zv != zero_vector.end() && zv->second});
  }
  auto best = best_candidate(out.scores, graph.center_id(), config.beta);
  out.score = out.scores[best];
  out.node = graph.node(out.score.node_id);
  return out;
}

Selection select_node(const KnowledgeGraph& graph, std::string_view query_text, const SelectionConfig& config,
                      const Embedder& embedder) {
  if (text::trim(query_text).empty()) throw Error(ErrorCode::InvalidArgument, "selection query is empty");
  auto q = embedder.embed(query_text);
  ScoreMap sim;
  std::map<std::string, bool> zero;
  for (const auto& node : graph.nodes()) {
    auto s = semantic_similarity(q, embedder.embed(node.definition));
    sim.emplace(node.id, s.value);
    zero.emplace(node.id, s.zero_vector);
  }
  return select_node(graph, sim, config, zero);
}

}  // namespace kfqg
