#include "kfqg/backends.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "kfqg/text.hpp"

namespace kfqg {

void GenerationParams::validate() const {
  if (!(temperature >= 0.0) || !std::isfinite(temperature))
    throw Error(ErrorCode::InvalidArgument, "temperature must be a finite value >= 0");
  if (max_tokens <= 0) throw Error(ErrorCode::InvalidArgument, "max_tokens must be positive");
}

bool Embedding::is_zero() const {
  return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

std::optional<double> cosine(const Embedding& a, const Embedding& b) {
  if (a.dim() != b.dim())
    throw Error(ErrorCode::InvalidArgument, "embedding dimensions differ");
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) return std::nullopt;
  double c = dot / (std::sqrt(na) * std::sqrt(nb));
  return std::clamp(c, -1.0, 1.0);
}

double TokenLogProbs::sum() const { return std::accumulate(logprobs.begin(), logprobs.end(), 0.0); }

std::string ChatBackend::chat_complete(std::string_view prompt, const GenerationParams& params) const {
  if (prompt.empty()) throw Error(ErrorCode::EmptyPrompt, "prompt is empty");
  params.validate();
  auto out = do_complete(prompt, params);
  if (text::trim(out).empty()) throw Error(ErrorCode::EmptyCompletion, "backend returned an empty completion");
  return out;
}

Embedding Embedder::embed(std::string_view input) const {
  if (input.empty()) throw Error(ErrorCode::InvalidArgument, "cannot embed empty text");
  auto e = do_embed(input);
  for (double v : e.values)
    if (!std::isfinite(v)) throw Error(ErrorCode::InvalidArgument, "embedding contains non-finite values");
  return e;
}

TokenLogProbs ConditionalScorer::score_conditional(std::string_view condition, std::string_view target) const {
  auto r = do_score(condition, target);
  if (r.tokens.empty()) throw Error(ErrorCode::TokenizationFailure, "target has no tokens");
  if (r.tokens.size() != r.logprobs.size())
    throw Error(ErrorCode::InvalidArgument, "token and logprob counts differ");
  for (double lp : r.logprobs)
    if (!std::isfinite(lp) || lp > 0.0)
      throw Error(ErrorCode::InvalidArgument, "log probabilities must be finite and <= 0");
  return r;
}

std::vector<WikiPage> PageSource::search_pages(const SearchQuery& query) const {
  bool has_title = query.must_title_contain && !query.must_title_contain->empty();
  if (!has_title && query.must_body_contain.empty())
    throw Error(ErrorCode::InvalidArgument, "search needs at least one constraint");
  if (query.limit == 0) throw Error(ErrorCode::InvalidArgument, "search limit must be positive");
  auto pages = do_search(query);
  // Remote engines may return fuzzy hits; only exact constraint matches pass.
  std::erase_if(pages, [&](const WikiPage& p) {
    if (has_title && !text::contains_ci(p.title, *query.must_title_contain)) return true;
    return !std::all_of(query.must_body_contain.begin(), query.must_body_contain.end(),
                        [&](const std::string& t) { return text::contains_ci(p.body, t); });
  });
  if (pages.size() > query.limit) pages.resize(query.limit);
  return pages;
}

WikiPage PageSource::fetch_page(std::string_view title_or_url) const {
  if (text::trim(title_or_url).empty()) throw Error(ErrorCode::InvalidArgument, "empty page identifier");
  auto page = do_fetch(title_or_url);
  if (text::trim(page.definition).empty())
    throw Error(ErrorCode::PageNotFound, "page has no definition: " + std::string(title_or_url));
  return page;
}

}  // namespace kfqg
