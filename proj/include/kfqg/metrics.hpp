#pragma once

#include <string>
#include <utility>
#include <vector>

#include "kfqg/backends.hpp"
#include "kfqg/lda.hpp"

namespace kfqg::metrics {

/// (first text, second text); meaning depends on the metric.
using TextPair = std::pair<std::string, std::string>;

/// Unique n-grams over all texts divided by the total n-gram count.
/// Throws NoNgrams when no text has n tokens.
double distinct_n(const std::vector<std::string>& texts, std::size_t n);

/// Type-token ratio. Per-text ratios averaged over texts with at least one
/// token, or one ratio over the concatenated stream when `pooled`.
/// Throws NoTokens when there are no tokens at all.
double ttr(const std::vector<std::string>& texts, bool pooled = false);

/// BLEU with uniform weights over orders 1..max_n, clipped precision and
/// brevity penalty exp(1 - r/c) when c < r. Any zero precision gives 0.
double bleu(std::string_view candidate, std::string_view reference, int max_n);

/// Corpus BLEU over (candidate, reference) pairs: clipped counts and lengths
/// are summed before precisions and the brevity penalty are taken.
double corpus_bleu(const std::vector<TextPair>& pairs, int max_n);

/// exp of the mean negative log-probability of `text` under an empty condition.
double perplexity(std::string_view text, const ConditionalScorer& scorer);

struct MiOptions {
  std::size_t vocab_cap = 5000;
  double smoothing = 1.0;
};

/// Token-level mutual information in bits between initial questions (X) and
/// follow-ups (Y). Every (x, y) token combination inside a pair is one joint
/// observation; stopwords are dropped, each side keeps its vocab_cap most
/// frequent tokens and every cell of the |Vx| x |Vy| table gets `smoothing`
/// added. Throws EmptyAfterFiltering when no joint observation remains.
double mutual_information(const std::vector<TextPair>& pairs, const MiOptions& options = {});

struct Distance {
  double value = 0.0;
  bool zero_vector = false;  // an embedding was all zeros; value is 100
};

/// 100 * (1 - cosine(embed(a), embed(b))). Identical texts give 0.
Distance semantic_distance(std::string_view a, std::string_view b, const Embedder& embedder);

struct TopicOptions {
  std::size_t topics = 10;
  std::size_t top_n = 10;
  std::size_t iterations = 500;
  std::uint64_t seed = 0;
};

/// Lowercased, stopword-free tokens used for LDA documents.
std::vector<std::string> topic_tokens(std::string_view text);

/// Mean over pairs of the mean over topics of
/// |top_n(t) ∩ tokens(context) ∩ tokens(question)| / top_n.
double topic_consistency_score(const LdaModel& model, const std::vector<TextPair>& context_question, std::size_t top_n);

/// Fits LDA jointly on every context and question (separate documents) and
/// scores the pairs. Throws CorpusTooSmall through lda_fit.
double topic_consistency(const std::vector<TextPair>& context_question, const TopicOptions& options = {});

}  // namespace kfqg::metrics
