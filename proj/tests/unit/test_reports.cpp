#include <doctest.h>

#include <cmath>

#include "kfqg/corpus.hpp"
#include "kfqg/mock_backends.hpp"
#include "kfqg/reports.hpp"
#include "support/fixtures.hpp"

using namespace kfqg;

namespace {

std::vector<EvalSample> samples() {
  return {{"Why is the sky blue?", "Air scatters blue light.", "Does red light scatter less than blue light?",
           std::string("Why is red light scattered less?")},
          {"How do tides work?", "The moon pulls on the oceans.", "How does the sun change the tides?",
           std::string("Does the sun affect tides as well?")},
          {"What melts glaciers?", "Warm air and warm water.", "Could warmer oceans speed glacier melt?",
           std::string("How fast do glaciers melt today?")}};
}

std::vector<QAPair> fixture_items() {
  std::vector<QAPair> out;
  for (const auto& t : load_triplets(fixtures::path("data/fixtures/qa10.jsonl")).triplets)
    out.push_back({t.initial_question, t.answer});
  return out;
}

}  // namespace

TEST_CASE("metric group parsing") {
  CHECK(parse_metric_groups("bleu, ppl") == std::set<std::string>{"bleu", "perplexity"});
  CHECK(parse_metric_groups("topic,mi,distinct_2") ==
        std::set<std::string>{"topic_consistency", "mutual_information", "distinct"});
  CHECK_THROWS(parse_metric_groups("nope"));
  CHECK_THROWS(parse_metric_groups(" , "));
}

TEST_CASE("evaluate fills only the requested metrics") {
  EvalOptions opt;
  opt.metrics = {"distinct", "bleu"};
  auto r = evaluate(samples(), opt, nullptr);
  CHECK(r.distinct_1.has_value());
  CHECK(r.bleu_2.has_value());
  CHECK_FALSE(r.ttr.has_value());
  CHECK_FALSE(r.perplexity.has_value());
  CHECK_FALSE(r.topic_consistency.has_value());
  CHECK(r.per_sample.size() == 3);
  CHECK(r.per_sample[0].values.contains("bleu_1"));

  std::vector<std::string> gen;
  std::vector<metrics::TextPair> refs;
  for (const auto& s : samples()) {
    gen.push_back(s.generated);
    refs.emplace_back(s.generated, *s.reference);
  }
  CHECK(*r.distinct_1 == metrics::distinct_n(gen, 1));
  CHECK(*r.bleu_1 == metrics::corpus_bleu(refs, 1));
}

TEST_CASE("perplexity is the mean of per-sample values and needs a scorer") {
  EvalOptions opt;
  opt.metrics = {"perplexity"};
  CHECK_THROWS(evaluate(samples(), opt, nullptr));
  TableScorer uniform(50);
  auto r = evaluate(samples(), opt, &uniform);
  CHECK(*r.perplexity == doctest::Approx(50.0));
  CHECK_THROWS(evaluate({}, opt, &uniform));
}

TEST_CASE("every metric group on a small corpus") {
  EvalOptions opt;
  opt.topic.topics = 2;
  opt.topic.iterations = 50;
  TableScorer uniform(50);
  auto r = evaluate(samples(), opt, &uniform);
  auto j = to_json(r);
  for (const char* k : {"topic_consistency", "mutual_information", "distinct_1", "distinct_2", "ttr", "bleu_1",
                        "bleu_2", "perplexity"})
    CHECK_FALSE(j[k].is_null());
  auto table = render_table(r);
  CHECK(table.find("Consistency(%)") != std::string::npos);
  CHECK(table.find("Perplexity") != std::string::npos);
}

TEST_CASE("ablation labels") {
  CHECK(ablation_label(Variant::NoReranker) == "w/o re-ranker");
  CHECK(ablation_label(Variant::NoKgSelection) == "w/o KGselection");
  CHECK(ablation_label(Variant::NoLlmKnowledge) == "w/o llmknowledge");
  CHECK(ablation_label(Variant::Full) == "Ours");
}

TEST_CASE("ablation report averages semantic distances per variant") {
  auto p = Pipeline::from_config(fixtures::mock_config());
  auto items = fixture_items();
  items.resize(4);
  items[1].answer = " ";
  std::vector<std::pair<Variant, std::vector<PipelineResult>>> runs;
  for (auto v : {Variant::NoReranker, Variant::NoKgSelection, Variant::NoLlmKnowledge})
    runs.emplace_back(v, p.run_batch(items, v).results);
  auto report = ablation_report(runs, *p.backends().embedder);
  REQUIRE(report.rows.size() == 3);
  for (const auto& row : report.rows) {
    CHECK(row.samples == 3);
    CHECK(row.failed == 1);
  }
  const auto& first = runs[0].second;
  double sum = 0;
  for (const auto& r : first)
    if (r.status.ok)
      sum += metrics::semantic_distance(r.trace.knowledge->wiki_text, r.trace.qa.question, *p.backends().embedder).value;
  CHECK(*report.rows[0].dis_wiki_q == doctest::Approx(sum / 3));

  auto table = render_table(report);
  CHECK(table.find("w/o KGselection") != std::string::npos);
  CHECK(to_json(report)["rows"].size() == 3);

  auto broken = runs;
  broken[0].second[0].trace.knowledge.reset();
  CHECK_THROWS_AS(ablation_report(broken, *p.backends().embedder), Error);
}

TEST_CASE("beta sweep has one column per beta and is deterministic") {
  auto p = Pipeline::from_config(fixtures::mock_config());
  auto items = fixture_items();
  SweepOptions opt;
  opt.topic.topics = 3;
  opt.topic.iterations = 50;
  auto a = beta_sweep(p, items, kDefaultBetas, opt);
  auto b = beta_sweep(p, items, kDefaultBetas, opt);
  REQUIRE(a.columns.size() == 6);
  CHECK(to_json(a) == to_json(b));
  CHECK_FALSE(a.any_failed());
  CHECK(a.columns[5].beta.infinite);
  CHECK(a.columns[0].ok == 10);
  auto table = render_table(a);
  CHECK(table.substr(0, table.find('\n')).find("\xce\xb2=\xe2\x88\x9e") != std::string::npos);

  // BLEU-1 of a column recomputed from the selected definitions.
  auto batch = p.with_beta(kDefaultBetas[2]).run_batch(items);
  std::vector<metrics::TextPair> pairs;
  for (const auto& r : batch.results)
    pairs.emplace_back(r.trace.selected_node->definition, r.trace.qa.question + " " + r.trace.qa.answer);
  CHECK(*a.columns[2].bleu_1.value == doctest::Approx(metrics::corpus_bleu(pairs, 1)));
  CHECK_THROWS(beta_sweep(p, {}, kDefaultBetas));
}

TEST_CASE("sweep cells fail softly when nothing reaches selection") {
  auto cfg = fixtures::mock_config();
  auto b = make_backends(cfg);
  b.pages = std::make_shared<FixtureCorpus>();
  Pipeline p(cfg, b, PromptSet());
  auto r = beta_sweep(p, {fixtures::speed_of_sound()}, {Beta{1.0, false}});
  CHECK(r.any_failed());
  CHECK(r.columns[0].failed == 1);
  CHECK(render_table(r).find("failed") != std::string::npos);
}
