#include <doctest.h>

#include <deque>

#include "kfqg/graph.hpp"
#include "kfqg/mock_backends.hpp"
#include "kfqg/pipeline.hpp"
#include "support/fixtures.hpp"

using namespace kfqg;

namespace {

std::string between(const std::string& s, const std::string& a, const std::string& b) {
  auto i = s.find(a);
  if (i == std::string::npos) return {};
  i += a.size();
  return s.substr(i, s.find(b, i) - i);
}

// Every entity gets `fan` fresh children named "<entity>.<k>".
class FanChat final : public ChatBackend {
 public:
  explicit FanChat(int fan) : fan_(fan) {}

 protected:
  std::string do_complete(std::string_view prompt, const GenerationParams&) const override {
    std::string p(prompt);
    if (p.rfind("List up to", 0) == 0) {
      auto entity = between(p, "closely related to \"", "\"");
      std::string out;
      for (int k = 1; k <= fan_; ++k) out += entity + "." + std::to_string(k) + " | part of\n";
      return out;
    }
    return "A thing within " + between(p, "context of \"", "\"") + ".";
  }

 private:
  int fan_;
};

WikiPage root_page() { return {"Root", "https://example.org/wiki/Root", "The root entity.", ""}; }

std::size_t simulate_fan(std::size_t fan, std::size_t depth, std::size_t cap) {
  std::size_t count = 1, level = 1;
  for (std::size_t d = 0; d < depth; ++d) {
    level *= fan;
    count += level;
  }
  return std::min(count, cap);
}

}  // namespace

TEST_CASE("expansion reply parsing") {
  auto r = parse_expansion_reply("1. Temperature | depends on\n- \"Medium\"\n\n(none)\n* Air | made of", 6);
  REQUIRE(r.size() == 3);
  CHECK(r[0].name == "Temperature");
  CHECK(r[0].relation == "depends on");
  CHECK(r[1].name == "Medium");
  CHECK(r[1].relation == "related to");
  CHECK(r[2].name == "Air");
  CHECK(parse_expansion_reply("a\nb\nc", 2).size() == 2);
  CHECK(parse_expansion_reply("(none)", 6).empty());
}

TEST_CASE("fixed 3-child fan at depth 2 yields 13 nodes") {
  FanChat chat(3);
  FixtureCorpus none;
  GraphBudget budget;
  budget.max_children = 6;
  auto g = build_graph(root_page(), budget, chat, none, PromptSet(), {});
  CHECK(g.size() == simulate_fan(3, 2, 40));
  CHECK(g.size() == 13);
  CHECK(g.edges().size() == 12);
  CHECK_NOTHROW(g.validate());
  CHECK(g.center_id() == "root");
  CHECK_FALSE(g.node("root.1").url.has_value());
  CHECK(g.node("root").url == "https://example.org/wiki/Root");
}

TEST_CASE("budgets cap children, depth and node count") {
  FanChat chat(8);
  FixtureCorpus none;
  GraphBudget budget;
  budget.max_children = 4;
  budget.max_depth = 1;
  CHECK(build_graph(root_page(), budget, chat, none, PromptSet(), {}).size() == 5);
  budget.max_depth = 3;
  budget.max_nodes = 10;
  CHECK(build_graph(root_page(), budget, chat, none, PromptSet(), {}).size() == 10);
}

TEST_CASE("max_nodes of one is too small") {
  FanChat chat(3);
  FixtureCorpus none;
  GraphBudget budget;
  budget.max_nodes = 1;
  try {
    build_graph(root_page(), budget, chat, none, PromptSet(), {});
    FAIL("expected GraphTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::GraphTooSmall);
  }
}

TEST_CASE("children differing only by case collapse into one node") {
  ScriptedChat chat({"Air | made of\nAIR | also\nair | again", "(none)"});
  FixtureCorpus corpus({{"Air", "", "The mixture of gases around Earth.", ""}});
  GraphBudget budget;
  budget.max_depth = 1;
  auto g = build_graph(root_page(), budget, chat, corpus, PromptSet(), {});
  CHECK(g.size() == 2);
  // One neighbour per pair regardless of how many relations name it.
  CHECK(g.undirected_adjacency()[1].size() == 1);
}

TEST_CASE("graph containers reject bad input") {
  KnowledgeGraph g(KGNode{"a", "A", "def", std::nullopt});
  CHECK(g.add_node({"b", "B", "def", std::nullopt}));
  CHECK_FALSE(g.add_node({"b", "B2", "def", std::nullopt}));
  CHECK_THROWS(g.add_node({"c", "C", "  ", std::nullopt}));
  CHECK(g.add_edge("a", "b", "r"));
  CHECK_FALSE(g.add_edge("a", "b", "r"));
  CHECK_FALSE(g.add_edge("a", "a", "r"));
  CHECK_FALSE(g.add_edge("a", "zz", "r"));
  CHECK(g.undirected_adjacency() == std::vector<std::vector<std::size_t>>{{1}, {0}});
  g.add_node({"c", "C", "def", std::nullopt});
  CHECK_THROWS(g.validate());
}

TEST_CASE("mock fixture graph around the speed of sound") {
  auto cfg = fixtures::mock_config();
  auto b = make_backends(cfg);
  auto page = b.pages->fetch_page("Speed of sound");
  auto g = build_graph(page, cfg.selection.budget, *b.chat, *b.pages, PromptSet(), cfg.generation);
  CHECK(g.size() > 10);
  CHECK(g.size() <= 40);
  CHECK_NOTHROW(g.validate());
  CHECK(g.contains("temperature"));
  CHECK(g.node("temperature").url.has_value());
  auto again = build_graph(page, cfg.selection.budget, *b.chat, *b.pages, PromptSet(), cfg.generation);
  CHECK(again == g);
}
