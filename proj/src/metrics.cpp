#include "kfqg/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include "kfqg/error.hpp"
#include "kfqg/text.hpp"

namespace kfqg::metrics {

namespace {

using Ngram = std::vector<std::string>;

std::map<Ngram, std::size_t> ngram_counts(const std::vector<std::string>& tokens, std::size_t n) {
  std::map<Ngram, std::size_t> out;
  if (tokens.size() < n) return out;
  for (std::size_t i = 0; i + n <= tokens.size(); ++i)
    ++out[Ngram(tokens.begin() + static_cast<std::ptrdiff_t>(i), tokens.begin() + static_cast<std::ptrdiff_t>(i + n))];
  return out;
}

struct BleuStats {
  std::vector<double> matched, total;
  double cand_len = 0, ref_len = 0;
};

void accumulate(BleuStats& s, std::string_view candidate, std::string_view reference, int max_n) {
  auto c = text::word_tokens(candidate);
  auto r = text::word_tokens(reference);
  if (c.empty() || r.empty()) throw Error(ErrorCode::InvalidArgument, "BLEU needs non-empty candidate and reference");
  s.cand_len += static_cast<double>(c.size());
  s.ref_len += static_cast<double>(r.size());
  for (int n = 1; n <= max_n; ++n) {
    auto cc = ngram_counts(c, static_cast<std::size_t>(n));
    auto rc = ngram_counts(r, static_cast<std::size_t>(n));
    for (const auto& [g, k] : cc) {
      auto it = rc.find(g);
      s.matched[n - 1] += static_cast<double>(std::min(k, it == rc.end() ? 0 : it->second));
      s.total[n - 1] += static_cast<double>(k);
    }
  }
}

double finish(const BleuStats& s, int max_n) {
  double log_sum = 0.0;
  for (int n = 0; n < max_n; ++n) {
    if (s.matched[n] == 0.0) return 0.0;
    log_sum += std::log(s.matched[n] / s.total[n]);
  }
  double bp = s.cand_len < s.ref_len ? std::exp(1.0 - s.ref_len / s.cand_len) : 1.0;
  return bp * std::exp(log_sum / max_n);
}

void check_order(int max_n) {
  if (max_n < 1) throw Error(ErrorCode::InvalidArgument, "BLEU order must be positive");
}

// Keeps the `cap` most frequent tokens (ties: lexicographic).
std::set<std::string> capped_vocab(const std::unordered_map<std::string, std::size_t>& freq, std::size_t cap) {
  std::vector<std::pair<std::string, std::size_t>> v(freq.begin(), freq.end());
  std::sort(v.begin(), v.end(), [](const auto& a, const auto& b) {
    return a.second != b.second ? a.second > b.second : a.first < b.first;
  });
  if (v.size() > cap) v.resize(cap);
  std::set<std::string> out;
  for (auto& [t, _] : v) out.insert(t);
  return out;
}

}  // namespace

double distinct_n(const std::vector<std::string>& texts, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "n must be positive");
  std::set<Ngram> unique;
  std::size_t total = 0;
  for (const auto& t : texts) {
    for (const auto& [g, k] : ngram_counts(text::word_tokens(t), n)) {
      unique.insert(g);
      total += k;
    }
  }
  if (total == 0) throw Error(ErrorCode::NoNgrams, "no text has " + std::to_string(n) + " tokens");
  return static_cast<double>(unique.size()) / static_cast<double>(total);
}

double ttr(const std::vector<std::string>& texts, bool pooled) {
  if (pooled) {
    std::set<std::string> types;
    std::size_t total = 0;
    for (const auto& t : texts) {
      auto tokens = text::word_tokens(t);
      types.insert(tokens.begin(), tokens.end());
      total += tokens.size();
    }
    if (total == 0) throw Error(ErrorCode::NoTokens, "no tokens");
    return static_cast<double>(types.size()) / static_cast<double>(total);
  }
  double sum = 0.0;
  std::size_t counted = 0;
  for (const auto& t : texts) {
    auto tokens = text::word_tokens(t);
    if (tokens.empty()) continue;
    std::set<std::string> types(tokens.begin(), tokens.end());
    sum += static_cast<double>(types.size()) / static_cast<double>(tokens.size());
    ++counted;
  }
  if (counted == 0) throw Error(ErrorCode::NoTokens, "no tokens");
  return sum / static_cast<double>(counted);
}

double bleu(std::string_view candidate, std::string_view reference, int max_n) {
  check_order(max_n);
  BleuStats s{std::vector<double>(max_n, 0.0), std::vector<double>(max_n, 0.0)};
  accumulate(s, candidate, reference, max_n);
  return finish(s, max_n);
}

double corpus_bleu(const std::vector<TextPair>& pairs, int max_n) {
  check_order(max_n);
  if (pairs.empty()) throw Error(ErrorCode::InvalidArgument, "BLEU needs at least one pair");
  BleuStats s{std::vector<double>(max_n, 0.0), std::vector<double>(max_n, 0.0)};
  for (const auto& [c, r] : pairs) accumulate(s, c, r, max_n);
  return finish(s, max_n);
}

double perplexity(std::string_view text, const ConditionalScorer& scorer) {
  auto lp = scorer.score_conditional("", text);
  return std::exp(-lp.sum() / static_cast<double>(lp.tokens.size()));
}

double mutual_information(const std::vector<TextPair>& pairs, const MiOptions& options) {
  if (pairs.empty()) throw Error(ErrorCode::InvalidArgument, "MI needs at least one pair");
  if (options.vocab_cap == 0) throw Error(ErrorCode::InvalidArgument, "vocab_cap must be positive");
  if (options.smoothing < 0.0) throw Error(ErrorCode::InvalidArgument, "smoothing must be >= 0");

  std::vector<std::pair<std::vector<std::string>, std::vector<std::string>>> tokens;
  std::unordered_map<std::string, std::size_t> fx, fy;
  for (const auto& [x, y] : pairs) {
    auto tx = text::content_tokens(x);
    auto ty = text::content_tokens(y);
    for (const auto& t : tx) ++fx[t];
    for (const auto& t : ty) ++fy[t];
    tokens.emplace_back(std::move(tx), std::move(ty));
  }
  auto vx = capped_vocab(fx, options.vocab_cap);
  auto vy = capped_vocab(fy, options.vocab_cap);
  if (vx.empty() || vy.empty()) throw Error(ErrorCode::EmptyAfterFiltering, "no tokens left after filtering");

  std::map<std::string, std::size_t> ix, iy;
  for (const auto& t : vx) ix.emplace(t, ix.size());
  for (const auto& t : vy) iy.emplace(t, iy.size());
  const std::size_t nx = ix.size(), ny = iy.size();
  std::vector<double> joint(nx * ny, 0.0);
  double observed = 0.0;
  for (const auto& [tx, ty] : tokens) {
    for (const auto& a : tx) {
      auto ia = ix.find(a);
      if (ia == ix.end()) continue;
      for (const auto& b : ty) {
        auto ib = iy.find(b);
        if (ib == iy.end()) continue;
        joint[ia->second * ny + ib->second] += 1.0;
        observed += 1.0;
      }
    }
  }
  if (observed == 0.0) throw Error(ErrorCode::EmptyAfterFiltering, "no joint token observation");

  const double total = observed + options.smoothing * static_cast<double>(nx * ny);
  std::vector<double> px(nx, 0.0), py(ny, 0.0);
  for (auto& c : joint) c = (c + options.smoothing) / total;
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      px[i] += joint[i * ny + j];
      py[j] += joint[i * ny + j];
    }
  double mi = 0.0;
  for (std::size_t i = 0; i < nx; ++i)
    for (std::size_t j = 0; j < ny; ++j) {
      double p = joint[i * ny + j];
      if (p > 0.0) mi += p * std::log2(p / (px[i] * py[j]));
    }
  return std::max(0.0, mi);
}

Distance semantic_distance(std::string_view a, std::string_view b, const Embedder& embedder) {
  if (text::trim(a).empty() || text::trim(b).empty())
    throw Error(ErrorCode::InvalidArgument, "semantic distance needs non-empty texts");
  if (a == b) return {0.0, false};
  auto c = cosine(embedder.embed(a), embedder.embed(b));
  if (!c) return {100.0, true};
  return {std::max(0.0, 100.0 * (1.0 - *c)), false};
}

std::vector<std::string> topic_tokens(std::string_view t) { return text::content_tokens(t); }

double topic_consistency_score(const LdaModel& model, const std::vector<TextPair>& context_question, std::size_t top_n) {
  if (context_question.empty()) throw Error(ErrorCode::InvalidArgument, "topic consistency needs pairs");
  if (top_n == 0) throw Error(ErrorCode::InvalidArgument, "top_n must be positive");
  std::vector<std::set<std::string>> top(model.topics);
  for (std::size_t t = 0; t < model.topics; ++t) {
    auto words = model.top_words(t, top_n);
    top[t] = {words.begin(), words.end()};
  }
  double sum = 0.0;
  for (const auto& [context, question] : context_question) {
    auto c = topic_tokens(context);
    auto q = topic_tokens(question);
    std::set<std::string> shared;
    std::set<std::string> cs(c.begin(), c.end());
    for (const auto& w : q)
      if (cs.contains(w)) shared.insert(w);
    double per_pair = 0.0;
    for (const auto& words : top) {
      std::size_t hits = 0;
      for (const auto& w : shared) hits += words.contains(w);
      per_pair += static_cast<double>(hits) / static_cast<double>(top_n);
    }
    sum += per_pair / static_cast<double>(model.topics);
  }
  return sum / static_cast<double>(context_question.size());
}

double topic_consistency(const std::vector<TextPair>& context_question, const TopicOptions& options) {
  if (context_question.empty()) throw Error(ErrorCode::InvalidArgument, "topic consistency needs pairs");
  std::vector<std::vector<std::string>> docs;
  docs.reserve(context_question.size() * 2);
  for (const auto& [context, question] : context_question) {
    docs.push_back(topic_tokens(context));
    docs.push_back(topic_tokens(question));
  }
  auto model = lda_fit(docs, {options.topics, options.iterations, options.seed});
  return topic_consistency_score(model, context_question, options.top_n);
}

}  // namespace kfqg::metrics
