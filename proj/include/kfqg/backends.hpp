#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "kfqg/error.hpp"

namespace kfqg {

struct GenerationParams {
  double temperature = 1.0;
  int max_tokens = 512;
  std::optional<std::uint64_t> seed;

  void validate() const;
};

struct Embedding {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
  bool is_zero() const;
};

/// Cosine of two equal-length embeddings; nullopt when either is the zero vector.
std::optional<double> cosine(const Embedding& a, const Embedding& b);

struct TokenLogProbs {
  std::vector<std::string> tokens;
  std::vector<double> logprobs;

  double sum() const;
};

struct WikiPage {
  std::string title;
  std::string url;
  std::string definition;
  std::string body;

  bool operator==(const WikiPage&) const = default;
};

/// Chat generation. Implementations must be safe to call concurrently.
class ChatBackend {
 public:
  virtual ~ChatBackend() = default;

  /// Throws EmptyPrompt on an empty prompt and EmptyCompletion when the
  /// backend produced nothing.
  std::string chat_complete(std::string_view prompt, const GenerationParams& params) const;

 protected:
  virtual std::string do_complete(std::string_view prompt, const GenerationParams& params) const = 0;
};

class Embedder {
 public:
  virtual ~Embedder() = default;
  Embedding embed(std::string_view text) const;

 protected:
  virtual Embedding do_embed(std::string_view text) const = 0;
};

/// Per-token conditional log probabilities of `target` given `condition`.
class ConditionalScorer {
 public:
  virtual ~ConditionalScorer() = default;
  TokenLogProbs score_conditional(std::string_view condition, std::string_view target) const;

 protected:
  virtual TokenLogProbs do_score(std::string_view condition, std::string_view target) const = 0;
};

struct SearchQuery {
  std::optional<std::string> must_title_contain;
  std::vector<std::string> must_body_contain;
  std::size_t limit = 50;
};

/// Page search + fetch over an encyclopedia-like corpus.
class PageSource {
 public:
  virtual ~PageSource() = default;

  /// Every returned page satisfies all constraints (case-insensitive
  /// substring); ordered by relevance, descending; at most `limit` pages.
  std::vector<WikiPage> search_pages(const SearchQuery& query) const;

  /// Throws PageNotFound when the identifier resolves to nothing.
  WikiPage fetch_page(std::string_view title_or_url) const;

 protected:
  virtual std::vector<WikiPage> do_search(const SearchQuery& query) const = 0;
  virtual WikiPage do_fetch(std::string_view title_or_url) const = 0;
};

struct RetryPolicy {
  int attempts = 3;
  std::chrono::milliseconds initial_backoff{200};
  double multiplier = 2.0;
};

/// Runs `call`, retrying retryable kfqg::Errors with exponential backoff.
template <typename F>
auto with_retry(const RetryPolicy& policy, F&& call) -> decltype(call()) {
  auto delay = policy.initial_backoff;
  for (int attempt = 1;; ++attempt) {
    try {
      return call();
    } catch (const Error& e) {
      if (!is_retryable(e.code()) || attempt >= policy.attempts) throw;
    }
    if (delay.count() > 0) std::this_thread::sleep_for(delay);
    delay = std::chrono::milliseconds(
        static_cast<std::int64_t>(static_cast<double>(delay.count()) * policy.multiplier));
  }
}

}  // namespace kfqg
