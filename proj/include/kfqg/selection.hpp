#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "kfqg/backends.hpp"
#include "kfqg/graph.hpp"

namespace kfqg {

/// Weight of semantic similarity in the composite score. The infinite form
/// ranks purely by similarity.
struct Beta {
  double value = 1.0;
  bool infinite = false;

  static Beta inf() { return {0.0, true}; }
  /// Accepts a number or one of "inf", "infinity", "∞".
  static Beta parse(std::string_view s);
  /// "0", "0.5", "1", ... or "∞".
  std::string label() const;

  bool operator==(const Beta&) const = default;
};

struct SelectionConfig {
  Beta beta;
  std::size_t walk_steps = 100;
  double pagerank_damping = 0.85;
  double pagerank_tol = 1e-9;
  std::size_t pagerank_max_iter = 200;
  double restart_prob = 0.15;
  GraphBudget budget;
  std::uint64_t rng_seed = 0;

  void validate() const;
};

using ScoreMap = std::map<std::string, double>;
using VisitMap = std::map<std::string, std::uint64_t>;

/// PageRank with uniform teleport over the undirected graph. Iterates until
/// the L1 change drops below `tol` or `max_iter` is reached. Dangling mass is
/// spread uniformly. Weights sum to 1.
ScoreMap pagerank(const KnowledgeGraph& graph, double damping = 0.85, double tol = 1e-9,
                  std::size_t max_iter = 200);

/// Seeded walk from the center; the start position counts as a visit, so the
/// counts sum to steps + 1. Each step restarts at the center with
/// `restart_prob` (always, when the current node has no neighbors), otherwise
/// moves to a uniformly chosen undirected neighbor.
VisitMap random_walk_visits(const KnowledgeGraph& graph, std::size_t steps, double restart_prob,
                            std::uint64_t seed);

/// I = w * n per node. Throws KeyMismatch when the key sets differ.
ScoreMap importance(const ScoreMap& weights, const VisitMap& visits);

/// Min-max normalization; all-equal input maps to 0.5.
ScoreMap normalize_importance(const ScoreMap& importance);

struct Similarity {
  double value = 0.0;
  bool zero_vector = false;  // one side embedded to zeros; value forced to 0
};

Similarity semantic_similarity(const Embedding& query, const Embedding& node);
Similarity semantic_similarity(std::string_view query_text, const KGNode& node, const Embedder& embedder);

/// R = I_norm + beta * S; for infinite beta, R = S.
ScoreMap composite_score(const ScoreMap& importance_norm, const ScoreMap& similarity, const Beta& beta);

struct NodeScore {
  std::string node_id;
  double w = 0.0;
  std::uint64_t n = 0;
  double importance = 0.0;
  double importance_norm = 0.0;
  double similarity = 0.0;
  double composite = 0.0;
  bool zero_vector = false;

  bool operator==(const NodeScore&) const = default;
};

/// Strict ranking order: R desc, then S desc, then id asc. Under infinite
/// beta: S desc, then I_norm desc, then id asc.
bool ranks_before(const NodeScore& a, const NodeScore& b, const Beta& beta);

/// Index of the best non-center score. Throws GraphTooSmall if none.
std::size_t best_candidate(const std::vector<NodeScore>& scores, const std::string& center_id, const Beta& beta);

/// Recomputes R for every score under a new beta (w, n, I, I_norm, S kept).
void rescore(std::vector<NodeScore>& scores, const Beta& beta);

struct Selection {
  KGNode node;
  NodeScore score;
  std::vector<NodeScore> scores;  // graph node order
};

/// Scores every node and picks the best non-center node.
Selection select_node(const KnowledgeGraph& graph, std::string_view query_text, const SelectionConfig& config,
                      const Embedder& embedder);

/// Same as select_node with similarity values already computed.
Selection select_node(const KnowledgeGraph& graph, const ScoreMap& similarity, const SelectionConfig& config,
                      const std::map<std::string, bool>& zero_vector = {});

}  // namespace kfqg
