#include <doctest.h>

#include <cmath>
#include <map>

#include "kfqg/mock_backends.hpp"
#include "kfqg/pipeline.hpp"
#include "kfqg/recognition.hpp"
#include "kfqg/text.hpp"
#include "support/fixtures.hpp"
#include "support/oracles.hpp"

using namespace kfqg;

namespace {

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

const QAPair kQa{"Why does a bell ring after it is struck?",
                 "Striking the bell makes its metal vibrate, and the vibration pushes air into sound waves; "
                 "the bell keeps ringing while the metal vibrate."};

}  // namespace

TEST_CASE("extraction reply parsing") {
  auto r = ExtractionReply::parse("TOPIC: sound\nKEYWORDS: temperature, medium, formula");
  CHECK(r.problem.empty());
  CHECK(r.topic == "sound");
  CHECK(r.keywords == std::vector<std::string>{"temperature", "medium", "formula"});

  auto md = ExtractionReply::parse("**Topic:** \"Sound\".\n- keywords: Temperature; MEDIUM");
  CHECK(md.topic == "Sound");
  CHECK(md.keywords == std::vector<std::string>{"temperature", "medium"});

  CHECK_FALSE(ExtractionReply::parse("TOPIC: speed of\nKEYWORDS: a").problem.empty());
  CHECK_FALSE(ExtractionReply::parse("no format at all").problem.empty());
}

TEST_CASE("extract_key_info accepts a well-formed reply") {
  ScriptedChat chat({"TOPIC: sound\nKEYWORDS: temperature, medium, formula"});
  auto info = extract_key_info(fixtures::speed_of_sound(), 3, chat, PromptSet(), {});
  CHECK(info == KeyInfo{"sound", {"temperature", "medium", "formula"}});
  CHECK(chat.calls() == 1);
}

TEST_CASE("a multi-word topic is retried once, then rejected") {
  ScriptedChat chat({"TOPIC: speed of\nKEYWORDS: a, b, c"});
  CHECK(code_of([&] { extract_key_info(kQa, 3, chat, PromptSet(), {}); }) == ErrorCode::ExtractionUnparseable);
  CHECK(chat.calls() == 2);

  ScriptedChat recovers({"TOPIC: speed of\nKEYWORDS: a", "TOPIC: bell\nKEYWORDS: metal, vibration, air"});
  CHECK(extract_key_info(kQa, 3, recovers, PromptSet(), {}).topic == "bell");
}

TEST_CASE("duplicate keywords trigger a re-prompt, then padding from QA word frequency") {
  ScriptedChat chat({"TOPIC: bell\nKEYWORDS: metal, metal, bell", "KEYWORDS: metal"});
  auto info = extract_key_info(kQa, 3, chat, PromptSet(), {});
  REQUIRE(chat.calls() == 2);
  CHECK(chat.prompts()[1].rfind("Extract 2 more keywords", 0) == 0);

  // Most frequent non-stopword QA tokens, first occurrence breaking ties.
  std::map<std::string, int> freq;
  std::vector<std::string> order;
  for (const auto& w : oracle::words(kQa.question + " " + kQa.answer)) {
    if (text::is_stopword(w) || w.size() < 2) continue;
    if (freq[w]++ == 0) order.push_back(w);
  }
  std::stable_sort(order.begin(), order.end(), [&](auto& a, auto& b) { return freq[a] > freq[b]; });
  std::vector<std::string> expect{"metal"};
  for (const auto& w : order)
    if (expect.size() < 3 && w != "bell" && w != "metal") expect.push_back(w);
  CHECK(info.keywords == expect);
}

TEST_CASE("KeyInfo invariants") {
  CHECK_NOTHROW(KeyInfo{"sound", {"a", "b", "c"}}.validate(3));
  CHECK_THROWS(KeyInfo{"two words", {"a", "b", "c"}}.validate(3));
  CHECK_THROWS(KeyInfo{"sound", {"a", "a", "c"}}.validate(3));
  CHECK_THROWS(KeyInfo{"sound", {"a", "B", "c"}}.validate(3));
  CHECK_THROWS(KeyInfo{"sound", {"a", "b"}}.validate(3));
  CHECK_THROWS(KeyInfo{"sound", {"a", "sound", "c"}}.validate(3));
  CHECK(RerankQuery::from({"sound", {"a", "b"}}).text == "sound a b");
}

namespace {

FixtureCorpus small_corpus() {
  return FixtureCorpus({{"Sound", "", "Sound is a vibration.", "a vibration carried through a medium"},
                        {"Speed of sound", "", "How fast sound moves.", "depends on temperature and the medium"},
                        {"Drum", "", "A percussion instrument.", "its skin shows vibration when struck"},
                        {"Bell", "", "A hollow instrument.", "metal vibration makes the tone"},
                        {"Light", "", "Radiation.", "travels fast"}});
}

}  // namespace

TEST_CASE("iterative retrieval narrows by keyword and stops at one page") {
  auto corpus = small_corpus();
  bool fallback = true;
  auto pages = iterative_retrieve({"sound", {"temperature", "medium", "air"}}, 50, corpus, &fallback);
  CHECK_FALSE(fallback);
  REQUIRE(pages.size() == 1);
  CHECK(pages[0].title == "Speed of sound");
}

TEST_CASE("a keyword that matches nothing is skipped") {
  auto corpus = small_corpus();
  auto pages = iterative_retrieve({"sound", {"zebra", "medium", "quartz"}}, 50, corpus);
  CHECK(pages.size() == 2);
}

TEST_CASE("no title match falls back to body search") {
  auto corpus = small_corpus();
  bool fallback = false;
  auto pages = iterative_retrieve({"vibration", {"zebra", "quartz", "onyx"}}, 50, corpus, &fallback);
  CHECK(fallback);
  std::vector<std::string> got;
  for (const auto& p : pages) got.push_back(p.title);
  std::sort(got.begin(), got.end());
  CHECK(got == std::vector<std::string>{"Bell", "Drum", "Sound"});

  CHECK(code_of([&] { iterative_retrieve({"zebra", {"quartz", "onyx", "jade"}}, 50, corpus); }) ==
        ErrorCode::EmptyCandidates);
}

TEST_CASE("rerank by length-normalized query likelihood") {
  TableScorer scorer(1000);
  std::vector<WikiPage> pages{{"B", "", "def b", ""}, {"A", "", "def a", ""}};
  for (const char* t : {"x", "y", "z"}) {
    scorer.set("def a", t, -1.0);
    scorer.set("def b", t, -2.0);
  }
  auto ranked = rerank({"x y z"}, pages, scorer);
  REQUIRE(ranked.size() == 2);
  CHECK(ranked[0].page.title == "A");
  CHECK(ranked[0].log_score == doctest::Approx(-3 - std::log(3.0)).epsilon(1e-12));
  CHECK(ranked[1].log_score == doctest::Approx(-6 - std::log(3.0)).epsilon(1e-12));
}

TEST_CASE("rerank ties keep retrieval order") {
  TableScorer uniform(50);
  std::vector<WikiPage> pages{{"P1", "", "d1", ""}, {"P2", "", "d2", ""}, {"P3", "", "d3", ""}};
  auto ranked = rerank({"a b"}, pages, uniform, 3);
  CHECK(ranked[0].log_score == ranked[2].log_score);
  CHECK(ranked[0].page.title == "P1");
  CHECK(ranked[1].page.title == "P2");
  CHECK(ranked[2].page.title == "P3");
  CHECK(rerank({"a"}, {pages[1]}, uniform).front().page.title == "P2");
  CHECK_THROWS(rerank({"a"}, {}, uniform));
}

TEST_CASE("recognize picks the speed of sound page for the warm air question") {
  auto cfg = fixtures::mock_config();
  auto b = make_backends(cfg);
  auto r = recognize(fixtures::speed_of_sound(), cfg.recognition, *b.chat, *b.pages, *b.scorer, PromptSet(),
                     cfg.generation);
  CHECK(r.key_info == KeyInfo{"sound", {"speed", "temperature", "medium"}});
  CHECK(r.topic_page.title == "Speed of sound");
  CHECK(r.ranking.size() >= 2);
}

TEST_CASE("single candidate skips reranking with the same outcome") {
  FixtureCorpus corpus({{"Bell", "", "A hollow instrument.", "metal"}});
  ScriptedChat chat({"TOPIC: bell\nKEYWORDS: metal, vibration, air"});
  TableScorer scorer;
  auto r = recognize(kQa, {}, chat, corpus, scorer, PromptSet(), {});
  REQUIRE(r.ranking.size() == 1);
  CHECK_FALSE(r.ranking[0].scored);
  CHECK(r.topic_page.title == rerank({"bell metal"}, corpus.pages(), scorer).front().page.title);
}

TEST_CASE("recognition errors are tagged with their stage") {
  FixtureCorpus empty;
  MockChat chat;
  TableScorer scorer;
  try {
    recognize(kQa, {}, chat, empty, scorer, PromptSet(), {});
    FAIL("expected EmptyCandidates");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyCandidates);
    CHECK(e.stage() == "recognition");
  }
}
