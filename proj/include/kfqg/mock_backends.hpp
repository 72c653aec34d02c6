#pragma once

#include <cstdint>
#include <deque>
#include <filesystem>
#include <map>
#include <mutex>
#include <string>
#include <unordered_map>
#include <vector>

#include "kfqg/backends.hpp"

namespace kfqg {

/// A related entity the mock chat backend reports for graph expansion.
struct MockRelation {
  std::string entity;
  std::string relation;
};

struct MockChatConfig {
  /// First rule whose `contains` is a substring of the prompt wins.
  std::vector<std::pair<std::string, std::string>> rules;
  /// Keyed by canonical entity id; overrides definition-derived children.
  std::map<std::string, std::vector<MockRelation>> relations;
};

/// Deterministic chat backend: a pure function of (prompt, seed).
///
/// Recognizes the built-in prompt templates (key-info extraction, graph
/// expansion, entity definition, knowledge continuation, follow-up question,
/// answering) and composes plausible replies from the words in the prompt.
/// Configured rules take precedence, which lets tests pin exact replies.
class MockChat final : public ChatBackend {
 public:
  MockChat() = default;
  explicit MockChat(MockChatConfig config) : config_(std::move(config)) {}

  static MockChatConfig load_config(const std::filesystem::path& path);

 protected:
  std::string do_complete(std::string_view prompt, const GenerationParams& params) const override;

 private:
  MockChatConfig config_;
};

/// Replays queued replies in order and records every prompt. Once the queue
/// is drained the last reply repeats. Intended for tests of retry paths.
class ScriptedChat final : public ChatBackend {
 public:
  explicit ScriptedChat(std::vector<std::string> replies) : replies_(replies.begin(), replies.end()) {}

  std::vector<std::string> prompts() const;
  std::size_t calls() const;

 protected:
  std::string do_complete(std::string_view prompt, const GenerationParams& params) const override;

 private:
  mutable std::mutex mu_;
  mutable std::deque<std::string> replies_;
  mutable std::string last_;
  mutable std::vector<std::string> prompts_;
};

/// Whitespace + lowercase tokens hashed into a fixed-size count vector.
class HashEmbedder final : public Embedder {
 public:
  explicit HashEmbedder(std::size_t dim = 256);

  std::size_t dim() const { return dim_; }
  std::size_t bucket(std::string_view token) const;

 protected:
  Embedding do_embed(std::string_view text) const override;

 private:
  std::size_t dim_;
};

/// Per-(condition, token) log-probability table with a uniform fallback of
/// -ln(vocab_size). Condition "*" applies to every condition.
class TableScorer final : public ConditionalScorer {
 public:
  explicit TableScorer(std::size_t vocab_size = 32000);

  void set(std::string_view condition, std::string_view token, double logprob);
  std::size_t vocab_size() const { return vocab_size_; }

  static TableScorer load(const std::filesystem::path& path);

 protected:
  TokenLogProbs do_score(std::string_view condition, std::string_view target) const override;

 private:
  std::size_t vocab_size_;
  std::unordered_map<std::uint64_t, std::unordered_map<std::string, double>> table_;
};

/// In-memory page corpus with a lightweight relevance score. Loads a directory
/// of JSON page files {title, url, definition, body}; a file may also hold an
/// array of such objects.
class FixtureCorpus final : public PageSource {
 public:
  FixtureCorpus() = default;
  explicit FixtureCorpus(std::vector<WikiPage> pages);

  static FixtureCorpus load_dir(const std::filesystem::path& dir);

  void add(WikiPage page);
  const std::vector<WikiPage>& pages() const { return pages_; }

  /// Relevance used for ordering; exposed for tests.
  double relevance(const WikiPage& page, const SearchQuery& query) const;

 protected:
  std::vector<WikiPage> do_search(const SearchQuery& query) const override;
  WikiPage do_fetch(std::string_view title_or_url) const override;

 private:
  std::vector<WikiPage> pages_;
  std::unordered_map<std::string, std::size_t> by_title_;
  std::unordered_map<std::string, std::size_t> by_url_;
};

/// Title implied by a wiki-style URL ("…/wiki/Speed_of_sound" -> "speed of sound").
std::string title_from_url(std::string_view url);

}  // namespace kfqg
