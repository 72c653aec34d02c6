#include "kfqg/graph.hpp"

#include <algorithm>
#include <cctype>
#include <deque>

#include "kfqg/parallel.hpp"
#include "kfqg/text.hpp"

namespace kfqg {

KnowledgeGraph::KnowledgeGraph(KGNode center) {
  center_ = center.id;
  add_node(std::move(center));
}

bool KnowledgeGraph::add_node(KGNode node) {
  if (node.id.empty()) throw Error(ErrorCode::InvalidArgument, "node id is empty");
  if (text::trim(node.definition).empty())
    throw Error(ErrorCode::InvalidArgument, "node has no definition: " + node.id);
  if (index_.contains(node.id)) return false;
  index_.emplace(node.id, nodes_.size());
  nodes_.push_back(std::move(node));
  if (center_.empty()) center_ = nodes_.front().id;
  return true;
}

bool KnowledgeGraph::add_edge(const std::string& source, const std::string& target, std::string relation) {
  if (source == target || !contains(source) || !contains(target)) return false;
  KGEdge edge{source, target, std::move(relation)};
  if (std::find(edges_.begin(), edges_.end(), edge) != edges_.end()) return false;
  edges_.push_back(std::move(edge));
  return true;
}

std::size_t KnowledgeGraph::index_of(const std::string& id) const {
  auto it = index_.find(id);
  if (it == index_.end()) throw Error(ErrorCode::InvalidArgument, "unknown node: " + id);
  return it->second;
}

std::vector<std::vector<std::size_t>> KnowledgeGraph::undirected_adjacency() const {
  std::vector<std::vector<std::size_t>> adj(nodes_.size());
  for (const auto& e : edges_) {
    auto a = index_of(e.source), b = index_of(e.target);
    adj[a].push_back(b);
    adj[b].push_back(a);
  }
  for (auto& nbrs : adj) {
    std::sort(nbrs.begin(), nbrs.end());
    nbrs.erase(std::unique(nbrs.begin(), nbrs.end()), nbrs.end());
  }
  return adj;
}

void KnowledgeGraph::validate() const {
  if (nodes_.empty() || !contains(center_)) throw Error(ErrorCode::InvalidArgument, "graph has no center");
  auto adj = undirected_adjacency();
  std::vector<bool> seen(nodes_.size(), false);
  std::deque<std::size_t> queue{index_of(center_)};
  seen[queue.front()] = true;
  while (!queue.empty()) {
    auto cur = queue.front();
    queue.pop_front();
    for (auto nb : adj[cur])
      if (!seen[nb]) seen[nb] = true, queue.push_back(nb);
  }
  for (std::size_t i = 0; i < seen.size(); ++i)
    if (!seen[i]) throw Error(ErrorCode::InvalidArgument, "node not connected to center: " + nodes_[i].id);
}

std::vector<RelatedEntity> parse_expansion_reply(std::string_view reply, std::size_t max_children) {
  std::vector<RelatedEntity> out;
  for (const auto& raw : text::split_lines(reply)) {
    if (out.size() >= max_children) break;
    std::string line = text::trim(raw);
    // Drop list markers: "-", "*", "1.", "2)".
    std::size_t skip = 0;
    while (skip < line.size() && (line[skip] == '-' || line[skip] == '*' || line[skip] == ' ')) ++skip;
    std::size_t digits = skip;
    while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits]))) ++digits;
    if (digits > skip && digits < line.size() && (line[digits] == '.' || line[digits] == ')')) skip = digits + 1;
    line = text::trim(std::string_view(line).substr(skip));
    if (line.empty() || line.front() == '(') continue;

    RelatedEntity ent;
    auto bar = line.find('|');
    if (bar != std::string::npos) {
      ent.name = text::trim(std::string_view(line).substr(0, bar));
      ent.relation = text::trim(std::string_view(line).substr(bar + 1));
    } else {
      ent.name = line;
    }
    auto strip = std::string_view("\"'`*");
    while (!ent.name.empty() && strip.find(ent.name.front()) != std::string_view::npos) ent.name.erase(0, 1);
    while (!ent.name.empty() && strip.find(ent.name.back()) != std::string_view::npos) ent.name.pop_back();
    ent.name = text::trim(ent.name);
    if (ent.relation.empty()) ent.relation = "related to";
    if (!ent.name.empty()) out.push_back(std::move(ent));
  }
  return out;
}

namespace {

struct Resolved {
  std::optional<KGNode> node;
};

KGNode node_from_page(const WikiPage& page) {
  return {text::canonical_id(page.title), page.title, page.definition,
          page.url.empty() ? std::nullopt : std::optional<std::string>(page.url)};
}

}  // namespace

KnowledgeGraph build_graph(const WikiPage& seed_page, const GraphBudget& budget, const ChatBackend& chat,
                           const PageSource& pages, const PromptSet& prompts, const GenerationParams& params) {
  if (text::trim(seed_page.definition).empty())
    throw Error(ErrorCode::InvalidArgument, "seed page has no definition");
  if (budget.max_nodes == 0 || budget.max_children == 0)
    throw Error(ErrorCode::InvalidConfig, "graph budget must be positive");

  KnowledgeGraph graph(node_from_page(seed_page));
  // Entity names as emitted by the chat backend, mapped to the node they resolved to.
  std::unordered_map<std::string, std::string> alias{{graph.center_id(), graph.center_id()}};
  std::deque<std::pair<std::string, std::size_t>> frontier{{graph.center_id(), 0}};

  const auto& expansion = prompts.get(prompt_names::kExpansion);
  const auto& definition = prompts.get(prompt_names::kDefinition);

  while (!frontier.empty() && graph.size() < budget.max_nodes) {
    auto [parent_id, depth] = frontier.front();
    frontier.pop_front();
    if (depth >= budget.max_depth) continue;
    const KGNode parent = graph.node(parent_id);

    auto reply = chat.chat_complete(expansion.render({{"max_children", std::to_string(budget.max_children)},
                                                      {"entity", parent.title},
                                                      {"definition", parent.definition}}),
                                    params);
    auto related = parse_expansion_reply(reply, budget.max_children);

    std::vector<std::size_t> to_resolve;
    std::unordered_map<std::string, bool> queued;
    std::size_t room = budget.max_nodes - graph.size();
    for (std::size_t i = 0; i < related.size(); ++i) {
      auto key = text::canonical_id(related[i].name);
      if (key == parent_id || alias.contains(key) || queued.contains(key)) continue;
      queued.emplace(key, true);
      if (to_resolve.size() < room) to_resolve.push_back(i);
    }

    auto resolved = parallel_map<Resolved>(to_resolve.size(), budget.resolve_parallelism, [&](std::size_t k) {
      const auto& ent = related[to_resolve[k]];
      try {
        return Resolved{node_from_page(pages.fetch_page(ent.name))};
      } catch (const Error& e) {
        if (e.code() != ErrorCode::PageNotFound) throw;
      }
      try {
        auto def = text::trim(chat.chat_complete(
            definition.render({{"entity", ent.name}, {"parent", parent.title}}), params));
        return Resolved{KGNode{text::canonical_id(ent.name), ent.name, def, std::nullopt}};
      } catch (const Error& e) {
        if (e.code() != ErrorCode::EmptyCompletion) throw;
      }
      return Resolved{};
    });

    // Single-writer merge in reply order keeps construction deterministic.
    std::size_t next_resolved = 0;
    for (std::size_t i = 0; i < related.size(); ++i) {
      auto key = text::canonical_id(related[i].name);
      if (key == parent_id) continue;
      if (auto it = alias.find(key); it != alias.end()) {
        graph.add_edge(parent_id, it->second, related[i].relation);
        continue;
      }
      if (next_resolved >= to_resolve.size() || to_resolve[next_resolved] != i) continue;
      auto& r = resolved[next_resolved++];
      if (!r.node) continue;
      auto id = r.node->id;
      alias.emplace(key, id);
      if (graph.contains(id)) {
        graph.add_edge(parent_id, id, related[i].relation);
        continue;
      }
      if (graph.size() >= budget.max_nodes) continue;
      graph.add_node(std::move(*r.node));
      graph.add_edge(parent_id, id, related[i].relation);
      frontier.emplace_back(id, depth + 1);
    }
  }

  if (graph.size() < 2)
    throw Error(ErrorCode::GraphTooSmall, "knowledge graph has " + std::to_string(graph.size()) + " node(s)");
  return graph;
}

}  // namespace kfqg
