#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "kfqg/backends.hpp"
#include "kfqg/prompts.hpp"

namespace kfqg {

struct KGNode {
  std::string id;  // canonical lowercase title
  std::string title;
  std::string definition;
  std::optional<std::string> url;  // absent for nodes defined by the chat backend

  bool operator==(const KGNode&) const = default;
};

struct KGEdge {
  std::string source;
  std::string target;
  std::string relation;

  bool operator==(const KGEdge&) const = default;
};

/// Entity graph grown around a center node. Node order is insertion order,
/// which fixes the neighbor order seen by PageRank and the random walk.
class KnowledgeGraph {
 public:
  KnowledgeGraph() = default;
  explicit KnowledgeGraph(KGNode center);

  /// Returns false when a node with the same id already exists.
  bool add_node(KGNode node);
  /// Rejects self-loops, unknown endpoints and exact duplicates.
  bool add_edge(const std::string& source, const std::string& target, std::string relation);

  bool contains(const std::string& id) const { return index_.contains(id); }
  std::size_t index_of(const std::string& id) const;
  const KGNode& node(const std::string& id) const { return nodes_[index_of(id)]; }

  const std::vector<KGNode>& nodes() const { return nodes_; }
  const std::vector<KGEdge>& edges() const { return edges_; }
  const std::string& center_id() const { return center_; }
  std::size_t size() const { return nodes_.size(); }

  /// Sorted, duplicate-free neighbor indices with edges taken as undirected.
  std::vector<std::vector<std::size_t>> undirected_adjacency() const;

  /// Throws InvalidArgument unless every node is reachable from the center.
  void validate() const;

  bool operator==(const KnowledgeGraph&) const = default;

 private:
  std::vector<KGNode> nodes_;
  std::vector<KGEdge> edges_;
  std::unordered_map<std::string, std::size_t> index_;
  std::string center_;
};

/// Budget for online graph construction.
struct GraphBudget {
  std::size_t max_nodes = 40;
  std::size_t max_depth = 2;
  std::size_t max_children = 6;
  std::size_t resolve_parallelism = 4;
};

/// One "Entity | relation" line of an expansion reply.
struct RelatedEntity {
  std::string name;
  std::string relation;
};

std::vector<RelatedEntity> parse_expansion_reply(std::string_view reply, std::size_t max_children);

/// Breadth-first expansion from the seed page. Each frontier node's related
/// entities come from the chat backend; each is resolved through the page
/// source, falling back to a one-sentence chat definition (url-less node)
/// when no page exists. Throws GraphTooSmall if fewer than two nodes result.
KnowledgeGraph build_graph(const WikiPage& seed_page, const GraphBudget& budget, const ChatBackend& chat,
                           const PageSource& pages, const PromptSet& prompts, const GenerationParams& params);

}  // namespace kfqg
