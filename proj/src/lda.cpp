#include "kfqg/lda.hpp"

#include <algorithm>
#include <numeric>

#include "kfqg/error.hpp"
#include "kfqg/random.hpp"

namespace kfqg {

std::vector<std::string> LdaModel::top_words(std::size_t topic, std::size_t n) const {
  const auto& row = topic_word.at(topic);
  std::vector<std::size_t> order(row.size());
  std::iota(order.begin(), order.end(), 0);
  n = std::min(n, order.size());
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n), order.end(),
                    [&](std::size_t a, std::size_t b) { return row[a] != row[b] ? row[a] > row[b] : a < b; });
  std::vector<std::string> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(vocab[order[i]]);
  return out;
}

LdaModel lda_fit(const std::vector<std::vector<std::string>>& docs, const LdaOptions& options) {
  const std::size_t K = options.topics;
  if (K == 0) throw Error(ErrorCode::InvalidArgument, "topic count must be positive");
  if (!(options.eta > 0.0)) throw Error(ErrorCode::InvalidArgument, "eta must be positive");

  LdaModel m;
  m.topics = K;
  m.iterations = options.iterations;
  m.seed = options.seed;
  m.alpha = options.alpha > 0.0 ? options.alpha : 50.0 / static_cast<double>(K);
  m.eta = options.eta;

  std::vector<std::vector<std::size_t>> words;
  for (const auto& d : docs) {
    if (d.empty()) continue;
    std::vector<std::size_t> ids;
    ids.reserve(d.size());
    for (const auto& w : d) {
      auto [it, inserted] = m.index.try_emplace(w, m.vocab.size());
      if (inserted) m.vocab.push_back(w);
      ids.push_back(it->second);
    }
    words.push_back(std::move(ids));
  }
  if (words.size() < K)
    throw Error(ErrorCode::CorpusTooSmall, "LDA needs at least as many non-empty documents as topics");

  const std::size_t V = m.vocab.size();
  const double v_eta = static_cast<double>(V) * m.eta;
  std::vector<std::vector<std::size_t>> z(words.size());
  std::vector<std::vector<std::uint32_t>> n_dk(words.size(), std::vector<std::uint32_t>(K, 0));
  std::vector<std::uint32_t> n_kw(K * V, 0), n_k(K, 0);

  Rng rng(options.seed);
  for (std::size_t d = 0; d < words.size(); ++d) {
    z[d].resize(words[d].size());
    for (std::size_t i = 0; i < words[d].size(); ++i) {
      auto k = rng.index(K);
      z[d][i] = k;
      ++n_dk[d][k];
      ++n_kw[k * V + words[d][i]];
      ++n_k[k];
    }
  }

  std::vector<double> p(K);
  for (std::size_t it = 0; it < options.iterations; ++it) {
    for (std::size_t d = 0; d < words.size(); ++d) {
      for (std::size_t i = 0; i < words[d].size(); ++i) {
        const auto w = words[d][i];
        auto k = z[d][i];
        --n_dk[d][k];
        --n_kw[k * V + w];
        --n_k[k];
        double total = 0.0;
        for (std::size_t t = 0; t < K; ++t) {
          total += (n_dk[d][t] + m.alpha) * (n_kw[t * V + w] + m.eta) / (n_k[t] + v_eta);
          p[t] = total;
        }
        const double u = rng.uniform() * total;
        k = static_cast<std::size_t>(std::upper_bound(p.begin(), p.end(), u) - p.begin());
        if (k >= K) k = K - 1;
        z[d][i] = k;
        ++n_dk[d][k];
        ++n_kw[k * V + w];
        ++n_k[k];
      }
    }
  }

  m.topic_word.assign(K, std::vector<double>(V));
  for (std::size_t k = 0; k < K; ++k)
    for (std::size_t w = 0; w < V; ++w) m.topic_word[k][w] = (n_kw[k * V + w] + m.eta) / (n_k[k] + v_eta);
  return m;
}

}  // namespace kfqg
