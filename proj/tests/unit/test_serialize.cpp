#include <doctest.h>

#include "kfqg/error.hpp"
#include "kfqg/serialize.hpp"
#include "support/fixtures.hpp"

using namespace kfqg;

TEST_CASE("beta json") {
  CHECK(json(Beta::inf()) == "inf");
  CHECK(json(Beta{1.5, false}) == 1.5);
  CHECK(json("inf").get<Beta>() == Beta::inf());
  CHECK(json("\xe2\x88\x9e").get<Beta>() == Beta::inf());
  CHECK(json(2).get<Beta>() == Beta{2.0, false});
  CHECK_THROWS_AS(json(-1).get<Beta>(), Error);
  CHECK_THROWS_AS(json(true).get<Beta>(), Error);
}

TEST_CASE("status json") {
  auto s = Status::failed("selection", "graph-too-small", "one node");
  auto back = json(s).get<Status>();
  CHECK_FALSE(back.ok);
  CHECK(back.stage == "selection");
  CHECK(back.error_code == "graph-too-small");
  CHECK(back.message == "one node");
}

TEST_CASE("trace and result round trip") {
  auto p = Pipeline::from_config(fixtures::mock_config());
  auto r = p.run(fixtures::speed_of_sound(), 0);
  REQUIRE(r.status.ok);
  auto j = result_to_json(r);
  CHECK_FALSE(j["trace"].contains("timings_ms"));
  CHECK(result_to_json(r, true)["trace"].contains("timings_ms"));
  auto back = result_from_json(j);
  CHECK(result_to_json(back) == j);
  CHECK(back.trace.graph->size() == r.trace.graph->size());
  CHECK(back.trace.graph->center_id() == r.trace.graph->center_id());
  CHECK(back.trace.node_scores->size() == r.trace.node_scores->size());
  CHECK(back.question->text == r.question->text);
  CHECK(trace_to_json(trace_from_json(trace_to_json(r.trace))) == trace_to_json(r.trace));
}

TEST_CASE("graph json carries scores and the selected flag") {
  auto p = Pipeline::from_config(fixtures::mock_config());
  auto r = p.run(fixtures::speed_of_sound(), 0);
  REQUIRE(r.status.ok);
  const auto& tr = r.trace;
  const auto sel = tr.selected_node->id;
  auto j = graph_to_json(*tr.graph, &*tr.node_scores, &sel);
  CHECK(j["center"] == tr.graph->center_id());
  CHECK(j["nodes"].size() == tr.graph->size());
  CHECK(j["edges"].size() == tr.graph->edges().size());
  int selected = 0, centers = 0;
  for (const auto& n : j["nodes"]) {
    selected += n["selected"].get<bool>();
    centers += n["center"].get<bool>();
    CHECK(n["score"].contains("R"));
    CHECK(n["score"].contains("I_norm"));
  }
  CHECK(selected == 1);
  CHECK(centers == 1);
  auto plain = graph_to_json(*tr.graph);
  CHECK_FALSE(plain["nodes"][0].contains("score"));
  CHECK(graph_to_json(graph_from_json(plain)) == plain);
}

TEST_CASE("config round trip") {
  auto c = fixtures::mock_config();
  c.selection.beta = Beta::inf();
  c.seed = 99;
  auto j = config_to_json(c);
  CHECK(j["selection"]["beta"] == "inf");
  auto back = config_from_json(j, fixtures::kRoot);
  CHECK(config_to_json(back) == j);
  CHECK(back.hash() == c.hash());
}

TEST_CASE("config rejects unknown keys and bad values") {
  auto j = config_to_json(fixtures::mock_config());
  auto extra = j;
  extra["selection"]["gamma"] = 1;
  CHECK_THROWS_AS(config_from_json(extra), Error);
  auto bad = j;
  bad["selection"]["beta"] = -2;
  CHECK_THROWS_AS(config_from_json(bad), Error);
  // Defaults use the mock page source, which has no built-in directory.
  CHECK_THROWS_AS(config_from_json(json::object()), Error);
}
