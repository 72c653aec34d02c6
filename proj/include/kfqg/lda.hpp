#pragma once

#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

namespace kfqg {

struct LdaOptions {
  std::size_t topics = 10;
  std::size_t iterations = 500;
  std::uint64_t seed = 0;
  double alpha = -1.0;  // negative: 50 / topics
  double eta = 0.01;
};

/// Topic-word distributions from a collapsed Gibbs sampler.
struct LdaModel {
  std::size_t topics = 0;
  std::vector<std::string> vocab;  // first-occurrence order
  std::unordered_map<std::string, std::size_t> index;
  std::vector<std::vector<double>> topic_word;  // topics x vocab, rows sum to 1
  std::size_t iterations = 0;
  std::uint64_t seed = 0;
  double alpha = 0.0;
  double eta = 0.0;

  /// The n most probable words of a topic; ties go to the earlier vocab entry.
  std::vector<std::string> top_words(std::size_t topic, std::size_t n) const;
};

/// Throws CorpusTooSmall when fewer than `topics` documents are non-empty.
/// Empty documents are ignored.
LdaModel lda_fit(const std::vector<std::vector<std::string>>& docs, const LdaOptions& options);

}  // namespace kfqg
