#pragma once

#include <string>
#include <vector>

#include "kfqg/backends.hpp"
#include "kfqg/prompts.hpp"

namespace kfqg {

struct QAPair {
  std::string question;
  std::string answer;

  /// Throws InvalidArgument when either side is blank.
  void validate() const;
  bool operator==(const QAPair&) const = default;
};

/// One-word topic plus n distinct lowercase keywords.
struct KeyInfo {
  std::string topic;
  std::vector<std::string> keywords;

  /// Throws InvalidArgument when an invariant is broken.
  void validate(std::size_t n) const;
  bool operator==(const KeyInfo&) const = default;
};

/// Topic followed by keywords, space separated.
struct RerankQuery {
  std::string text;

  static RerankQuery from(const KeyInfo& info);
};

struct RankedPage {
  WikiPage page;
  /// Length-normalized log likelihood: sum of token logprobs minus ln|Q|.
  double log_score = 0.0;
  /// False when scoring was skipped because the candidate was alone.
  bool scored = true;
};

struct RecognitionConfig {
  std::size_t n_keywords = 3;
  std::size_t candidate_limit = 50;
  std::size_t scorer_parallelism = 4;

  void validate() const;
};

/// Parsed form of an extraction reply; exposed for tests.
struct ExtractionReply {
  std::string topic;
  std::vector<std::string> keywords;
  std::string problem;  // empty when the topic line is usable

  static ExtractionReply parse(std::string_view reply);
};

/// Prompts the chat backend for the topic and keywords of a QA pair.
///
/// A reply with an unusable topic is re-prompted once. A short keyword list
/// triggers one follow-up prompt for the missing count; anything still
/// missing is padded with the most frequent non-stopword tokens of the pair.
KeyInfo extract_key_info(const QAPair& qa, std::size_t n, const ChatBackend& chat, const PromptSet& prompts,
                         const GenerationParams& params);

/// Narrows title matches of the topic by each keyword in turn (a keyword
/// that would empty the set is skipped) and stops as soon as one page is left.
/// Falls back to body search over topic + keywords when no title matches.
std::vector<WikiPage> iterative_retrieve(const KeyInfo& info, std::size_t limit, const PageSource& pages,
                                         bool* used_fallback = nullptr);

/// Query-likelihood re-ranking. Stable: ties keep retrieval order.
std::vector<RankedPage> rerank(const RerankQuery& query, const std::vector<WikiPage>& candidates,
                               const ConditionalScorer& scorer, std::size_t parallelism = 1);

struct Recognition {
  KeyInfo key_info;
  std::vector<RankedPage> ranking;
  WikiPage topic_page;
};

/// extract_key_info -> iterative_retrieve -> rerank. Errors carry stage
/// "recognition".
Recognition recognize(const QAPair& qa, const RecognitionConfig& config, const ChatBackend& chat,
                      const PageSource& pages, const ConditionalScorer& scorer, const PromptSet& prompts,
                      const GenerationParams& params);

}  // namespace kfqg
