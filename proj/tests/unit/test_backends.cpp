#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <fstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "kfqg/http_backends.hpp"
#include "kfqg/mock_backends.hpp"
#include "kfqg/text.hpp"
#include "support/fixtures.hpp"

using namespace kfqg;
using nlohmann::json;

TEST_CASE("mock chat is a pure function of prompt and seed") {
  MockChat chat;
  GenerationParams p;
  p.seed = 1;
  auto a = chat.chat_complete("say A", p);
  CHECK(a == chat.chat_complete("say A", p));
  CHECK_FALSE(a.empty());
  GenerationParams q;
  q.seed = 2;
  CHECK(a != chat.chat_complete("say A", q));
}

TEST_CASE("chat rejects empty prompts and empty completions") {
  MockChat chat;
  CHECK_THROWS_AS(chat.chat_complete("", {}), Error);
  try {
    chat.chat_complete("", {});
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyPrompt);
  }
  ScriptedChat blank({"   "});
  try {
    blank.chat_complete("x", {});
    FAIL("expected EmptyCompletion");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::EmptyCompletion);
  }
}

TEST_CASE("mock chat rules take precedence") {
  MockChatConfig cfg;
  cfg.rules.emplace_back("magic", "fixed reply");
  MockChat chat(cfg);
  CHECK(chat.chat_complete("some magic prompt", {}) == "fixed reply");
}

TEST_CASE("scripted chat replays replies then repeats the last") {
  ScriptedChat chat({"one", "two"});
  CHECK(chat.chat_complete("a", {}) == "one");
  CHECK(chat.chat_complete("b", {}) == "two");
  CHECK(chat.chat_complete("c", {}) == "two");
  CHECK(chat.calls() == 3);
  CHECK(chat.prompts() == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("hash embedder is deterministic") {
  HashEmbedder e(64);
  auto a = e.embed("speed of sound");
  CHECK(a.values == e.embed("speed of sound").values);
  CHECK(a.dim() == 64);
  CHECK(*cosine(a, a) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(e.embed(""), Error);
}

TEST_CASE("texts with disjoint hash buckets have cosine 0") {
  HashEmbedder e(256);
  // Brute-force a pair of short tokens landing in different buckets.
  std::string a, b;
  for (char x = 'a'; x <= 'z' && a.empty(); ++x)
    for (char y = 'a'; y <= 'z'; ++y) {
      std::string s{x}, t{y};
      if (s != t && e.bucket(s) != e.bucket(t)) {
        a = s, b = t;
        break;
      }
    }
  REQUIRE_FALSE(a.empty());
  CHECK(*cosine(e.embed(a), e.embed(b)) == 0.0);
}

TEST_CASE("cosine of a zero vector is undefined") {
  Embedding z{{0, 0, 0}}, v{{1, 2, 3}};
  CHECK_FALSE(cosine(z, v).has_value());
  CHECK_THROWS_AS(cosine(Embedding{{1, 2}}, v), Error);
}

TEST_CASE("uniform table scorer sums to -n ln V") {
  TableScorer s(100);
  auto lp = s.score_conditional("anything", "one two three four");
  CHECK(lp.tokens.size() == 4);
  CHECK(lp.sum() == doctest::Approx(-4 * std::log(100.0)).epsilon(1e-12));
  CHECK_THROWS_AS(s.score_conditional("c", " ,. "), Error);
}

TEST_CASE("fixture scorer returns the stored table values") {
  auto table = json::parse(std::ifstream(fixtures::path("data/fixtures/scorer_table.json")));
  auto s = TableScorer::load(fixtures::path("data/fixtures/scorer_table.json"));
  for (const auto& e : table["entries"]) {
    auto lp = s.score_conditional(e["condition"].get<std::string>(), e["token"].get<std::string>());
    REQUIRE(lp.logprobs.size() == 1);
    CHECK(lp.logprobs[0] == e["logprob"].get<double>());
  }
  CHECK_THROWS_AS(TableScorer(10).set("c", "t", 0.5), Error);
}

TEST_CASE("wildcard condition applies when no specific entry exists") {
  TableScorer s(10);
  s.set("*", "x", -0.25);
  s.set("ctx", "x", -0.5);
  CHECK(s.score_conditional("other", "x").logprobs[0] == -0.25);
  CHECK(s.score_conditional("ctx", "x").logprobs[0] == -0.5);
}

namespace {

FixtureCorpus five_pages() {
  return FixtureCorpus({{"Sound", "https://en.wikipedia.org/wiki/Sound", "Sound is a vibration.", "wave medium"},
                        {"Speed of sound", "https://en.wikipedia.org/wiki/Speed_of_sound", "Distance per time.",
                         "depends on temperature and medium"},
                        {"Light", "", "Electromagnetic radiation.", "speed of light"},
                        {"Temperature", "", "A physical quantity.", "heat"},
                        {"Music", "", "Organized sound.", "rhythm"}});
}

std::vector<std::string> titles(const std::vector<WikiPage>& pages) {
  std::vector<std::string> out;
  for (const auto& p : pages) out.push_back(p.title);
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("page search matches a brute-force filter") {
  auto corpus = five_pages();
  SearchQuery q;
  q.must_title_contain = "sound";
  std::vector<std::string> expect;
  for (const auto& p : corpus.pages())
    if (text::contains_ci(p.title, "sound")) expect.push_back(p.title);
  std::sort(expect.begin(), expect.end());
  CHECK(titles(corpus.search_pages(q)) == expect);
  CHECK(expect.size() == 2);

  q.must_title_contain = "speed of sound";
  q.must_body_contain = {"temperature"};
  CHECK(titles(corpus.search_pages(q)) == std::vector<std::string>{"Speed of sound"});

  q.must_title_contain = "nothing here";
  CHECK(corpus.search_pages(q).empty());
  CHECK_THROWS_AS(corpus.search_pages(SearchQuery{}), Error);
}

TEST_CASE("search honours the limit") {
  auto corpus = five_pages();
  SearchQuery q;
  q.must_body_contain = {"e"};
  q.limit = 2;
  CHECK(corpus.search_pages(q).size() == 2);
}

TEST_CASE("fetch by title or url") {
  auto corpus = five_pages();
  CHECK(corpus.fetch_page("speed of sound").title == "Speed of sound");
  CHECK(corpus.fetch_page("https://en.wikipedia.org/wiki/Speed_of_sound") == corpus.fetch_page("Speed of sound"));
  try {
    corpus.fetch_page("Unknown page");
    FAIL("expected PageNotFound");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PageNotFound);
  }
  CHECK(title_from_url("https://en.wikipedia.org/wiki/Speed_of_sound") == "speed of sound");
}

TEST_CASE("bundled page fixtures load") {
  auto corpus = FixtureCorpus::load_dir(fixtures::path("data/fixtures/pages"));
  CHECK(corpus.pages().size() >= 20);
  CHECK(corpus.fetch_page("Speed of sound").definition.find("343 m/s") != std::string::npos);
  CHECK_THROWS_AS(FixtureCorpus::load_dir(fixtures::path("no/such/dir")), Error);
}

TEST_CASE("retry gives up on non-retryable errors and retries transient ones") {
  RetryPolicy policy{3, std::chrono::milliseconds(0), 2.0};
  int calls = 0;
  CHECK(with_retry(policy, [&] {
          if (++calls < 3) throw Error(ErrorCode::RateLimited, "slow down");
          return 7;
        }) == 7);
  CHECK(calls == 3);
  calls = 0;
  CHECK_THROWS_AS(with_retry(policy,
                             [&]() -> int {
                               ++calls;
                               throw Error(ErrorCode::InvalidArgument, "bad");
                             }),
                  Error);
  CHECK(calls == 1);
}

namespace {

struct LocalServer {
  httplib::Server server;
  int port = 0;
  std::thread thread;

  LocalServer() {}
  void start() {
    port = server.bind_to_any_port("127.0.0.1");
    thread = std::thread([this] { server.listen_after_bind(); });
    server.wait_until_ready();
  }
  ~LocalServer() {
    server.stop();
    if (thread.joinable()) thread.join();
  }
  HttpEndpoint endpoint() const {
    HttpEndpoint ep;
    ep.base_url = "http://127.0.0.1:" + std::to_string(port) + "/v1";
    ep.model = "m";
    ep.retry = {3, std::chrono::milliseconds(0), 2.0};
    ep.timeout = std::chrono::seconds(5);
    return ep;
  }
};

}  // namespace

TEST_CASE("http backends speak the expected wire format") {
  LocalServer s;
  std::atomic<int> chat_calls{0};
  s.server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    auto body = json::parse(req.body);
    if (++chat_calls == 1) {
      res.status = 429;
      return;
    }
    std::string prompt = body["messages"][0]["content"];
    res.set_content(json{{"choices", {{{"message", {{"content", "echo: " + prompt}}}}}}}.dump(), "application/json");
  });
  s.server.Post("/v1/embeddings", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(json{{"data", {{{"embedding", {0.5, 0.5}}}}}}.dump(), "application/json");
  });
  s.server.Post("/v1/score", [](const httplib::Request& req, httplib::Response& res) {
    auto body = json::parse(req.body);
    auto toks = text::word_tokens(body["target"].get<std::string>());
    res.set_content(json{{"tokens", toks}, {"logprobs", std::vector<double>(toks.size(), -1.0)}}.dump(),
                    "application/json");
  });
  s.server.Post("/v1/search", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"pages":[{"title":"Sound","url":"u","definition":"d","body":"b"},
                                  {"title":"Other","url":"v","definition":"d","body":"b"}]})",
                    "application/json");
  });
  s.server.Post("/v1/page", [](const httplib::Request& req, httplib::Response& res) {
    auto id = json::parse(req.body)["id"].get<std::string>();
    if (id != "Sound") {
      res.status = 404;
      return;
    }
    res.set_content(R"({"title":"Sound","url":"u","definition":"d","body":"b"})", "application/json");
  });
  s.start();

  HttpChat chat(s.endpoint());
  CHECK(chat.chat_complete("hi", {}) == "echo: hi");
  CHECK(chat_calls == 2);

  HttpEmbedder emb(s.endpoint());
  CHECK(emb.embed("x").values == std::vector<double>{0.5, 0.5});

  HttpScorer scorer(s.endpoint());
  CHECK(scorer.score_conditional("c", "a b").sum() == -2.0);

  HttpPageSource pages(s.endpoint());
  SearchQuery q;
  q.must_title_contain = "sound";
  auto hits = pages.search_pages(q);
  REQUIRE(hits.size() == 1);  // fuzzy hit "Other" filtered out
  CHECK(hits[0].title == "Sound");
  CHECK(pages.fetch_page("Sound").url == "u");
  try {
    pages.fetch_page("Missing");
    FAIL("expected PageNotFound");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::PageNotFound);
  }
}

TEST_CASE("unreachable http backend reports backend-unreachable") {
  HttpEndpoint ep;
  ep.base_url = "http://127.0.0.1:1";
  ep.retry = {1, std::chrono::milliseconds(0), 2.0};
  ep.timeout = std::chrono::seconds(1);
  HttpChat chat(ep);
  try {
    chat.chat_complete("x", {});
    FAIL("expected BackendUnreachable");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::BackendUnreachable);
  }
}
