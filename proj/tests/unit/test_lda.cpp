#include <doctest.h>

#include <random>

#include "kfqg/error.hpp"
#include "kfqg/lda.hpp"

using namespace kfqg;

namespace {

std::vector<std::vector<std::string>> two_groups(std::size_t docs, std::size_t len, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick(0, 7);
  std::vector<std::vector<std::string>> out;
  for (std::size_t d = 0; d < docs; ++d) {
    std::vector<std::string> doc;
    for (std::size_t k = 0; k < len; ++k) doc.push_back((d % 2 ? "ocean" : "desert") + std::to_string(pick(rng)));
    out.push_back(doc);
  }
  return out;
}

}  // namespace

TEST_CASE("disjoint vocabularies separate into two topics") {
  auto docs = two_groups(40, 30, 1);
  auto m = lda_fit(docs, {2, 200, 3});
  for (std::size_t t = 0; t < 2; ++t) {
    auto top = m.top_words(t, 8);
    auto prefix = top.front().substr(0, 5);
    for (const auto& w : top) CHECK(w.substr(0, 5) == prefix);
  }
  CHECK(m.top_words(0, 8).front().substr(0, 5) != m.top_words(1, 8).front().substr(0, 5));
}

TEST_CASE("same seed, same model") {
  auto docs = two_groups(20, 20, 2);
  auto a = lda_fit(docs, {3, 50, 9});
  auto b = lda_fit(docs, {3, 50, 9});
  CHECK(a.topic_word == b.topic_word);
  auto c = lda_fit(docs, {3, 50, 10});
  CHECK(a.topic_word != c.topic_word);
}

TEST_CASE("model shape and defaults") {
  auto docs = two_groups(10, 10, 3);
  auto m = lda_fit(docs, {4, 10, 0});
  CHECK(m.topics == 4);
  CHECK(m.alpha == doctest::Approx(12.5));
  CHECK(m.eta == doctest::Approx(0.01));
  CHECK(m.vocab.size() == m.index.size());
  CHECK(m.vocab[0] == docs[0][0]);
  for (const auto& row : m.topic_word) {
    double s = 0;
    for (double v : row) s += v;
    CHECK(s == doctest::Approx(1.0));
  }
  CHECK(m.top_words(0, 100).size() == m.vocab.size());
}

TEST_CASE("more topics than documents is rejected") {
  std::vector<std::vector<std::string>> docs{{"a"}, {"b"}, {}};
  try {
    lda_fit(docs, {3, 10, 0});
    FAIL("expected CorpusTooSmall");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::CorpusTooSmall);
  }
  CHECK_NOTHROW(lda_fit(docs, {2, 10, 0}));
}
