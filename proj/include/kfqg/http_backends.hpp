#pragma once

#include <atomic>
#include <chrono>
#include <string>

#include "kfqg/backends.hpp"

namespace kfqg {

/// Where and how to reach an HTTP model or page service.
struct HttpEndpoint {
  std::string base_url;  // scheme://host[:port][/prefix]
  std::string model;
  std::string api_key;
  std::chrono::seconds timeout{60};
  RetryPolicy retry;

  /// Reads KFQG_<KIND>_URL, KFQG_<KIND>_MODEL and KFQG_<KIND>_API_KEY
  /// (falling back to KFQG_API_KEY). Missing values stay empty.
  static HttpEndpoint from_env(std::string_view kind);
};

/// OpenAI-compatible POST {base}/chat/completions.
class HttpChat final : public ChatBackend {
 public:
  explicit HttpChat(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

 protected:
  std::string do_complete(std::string_view prompt, const GenerationParams& params) const override;

 private:
  HttpEndpoint endpoint_;
};

/// OpenAI-compatible POST {base}/embeddings.
class HttpEmbedder final : public Embedder {
 public:
  explicit HttpEmbedder(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

 protected:
  Embedding do_embed(std::string_view text) const override;

 private:
  HttpEndpoint endpoint_;
  mutable std::atomic<std::size_t> dim_{0};
};

/// POST {base}/score with {"model","condition","target"}; the reply carries
/// parallel "tokens" and "logprobs" arrays (natural log).
class HttpScorer final : public ConditionalScorer {
 public:
  explicit HttpScorer(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

 protected:
  TokenLogProbs do_score(std::string_view condition, std::string_view target) const override;

 private:
  HttpEndpoint endpoint_;
};

/// POST {base}/search {"title","body","limit"} -> {"pages":[...]};
/// POST {base}/page {"id"} -> page object, 404 when unknown.
class HttpPageSource final : public PageSource {
 public:
  explicit HttpPageSource(HttpEndpoint endpoint) : endpoint_(std::move(endpoint)) {}

 protected:
  std::vector<WikiPage> do_search(const SearchQuery& query) const override;
  WikiPage do_fetch(std::string_view title_or_url) const override;

 private:
  HttpEndpoint endpoint_;
};

}  // namespace kfqg
