#include "kfqg/recognition.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <unordered_map>
#include <unordered_set>

#include "kfqg/parallel.hpp"
#include "kfqg/text.hpp"

namespace kfqg {

namespace {

constexpr std::string_view kStage = "recognition";

bool has_space(std::string_view s) {
  return std::any_of(s.begin(), s.end(), [](char c) { return std::isspace(static_cast<unsigned char>(c)); });
}

// Strips markdown emphasis, quotes and trailing punctuation around a field.
std::string clean_field(std::string_view raw) {
  std::string s = text::trim(raw);
  auto strip_chars = std::string_view("\"'`*_[]()<> \t");
  while (!s.empty() && strip_chars.find(s.front()) != std::string_view::npos) s.erase(s.begin());
  while (!s.empty() && (strip_chars.find(s.back()) != std::string_view::npos ||
                        std::string_view(".,;:!?").find(s.back()) != std::string_view::npos))
    s.pop_back();
  return text::trim(s);
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::vector<std::string> parse_keyword_list(std::string_view list) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    auto kw = text::canonical_id(clean_field(cur));
    if (!kw.empty()) out.push_back(kw);
    cur.clear();
  };
  for (char c : list) {
    if (c == ',' || c == ';') {
      flush();
    } else {
      cur.push_back(c);
    }
  }
  flush();
  return out;
}

// Appends items of `extra` not already present (case-insensitive) and not
// equal to the topic, up to n entries.
void merge_keywords(std::vector<std::string>& into, const std::vector<std::string>& extra, std::string_view topic,
                    std::size_t n) {
  auto topic_id = text::canonical_id(topic);
  for (const auto& kw : extra) {
    if (into.size() >= n) break;
    if (kw == topic_id) continue;
    if (std::find(into.begin(), into.end(), kw) != into.end()) continue;
    into.push_back(kw);
  }
}

std::vector<std::string> frequent_qa_tokens(const QAPair& qa) {
  std::vector<std::string> order;
  std::unordered_map<std::string, int> freq;
  for (auto& t : text::content_tokens(qa.question + " " + qa.answer)) {
    if (t.size() < 2) continue;
    if (freq[t]++ == 0) order.push_back(t);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](const std::string& a, const std::string& b) { return freq[a] > freq[b]; });
  return order;
}

}  // namespace

void QAPair::validate() const {
  if (text::trim(question).empty()) throw Error(ErrorCode::InvalidArgument, "question is empty");
  if (text::trim(answer).empty()) throw Error(ErrorCode::InvalidArgument, "answer is empty");
}

void KeyInfo::validate(std::size_t n) const {
  if (topic.empty() || has_space(topic))
    throw Error(ErrorCode::InvalidArgument, "topic must be a single non-empty word");
  if (keywords.size() != n)
    throw Error(ErrorCode::InvalidArgument,
                "expected " + std::to_string(n) + " keywords, got " + std::to_string(keywords.size()));
  std::unordered_set<std::string> seen;
  for (const auto& k : keywords) {
    if (k.empty() || k != text::to_lower(k)) throw Error(ErrorCode::InvalidArgument, "keywords must be lowercase");
    if (!seen.insert(k).second) throw Error(ErrorCode::InvalidArgument, "duplicate keyword: " + k);
    if (k == text::to_lower(topic)) throw Error(ErrorCode::InvalidArgument, "keyword equals topic: " + k);
  }
}

RerankQuery RerankQuery::from(const KeyInfo& info) {
  std::vector<std::string> parts{info.topic};
  parts.insert(parts.end(), info.keywords.begin(), info.keywords.end());
  return {join(parts, " ")};
}

void RecognitionConfig::validate() const {
  if (n_keywords == 0) throw Error(ErrorCode::InvalidConfig, "n_keywords must be positive");
  if (candidate_limit == 0) throw Error(ErrorCode::InvalidConfig, "candidate_limit must be positive");
  if (scorer_parallelism == 0) throw Error(ErrorCode::InvalidConfig, "scorer_parallelism must be positive");
}

ExtractionReply ExtractionReply::parse(std::string_view reply) {
  ExtractionReply out;
  bool saw_topic = false;
  for (const auto& raw_line : text::split_lines(reply)) {
    std::string line = text::trim(raw_line);
    while (!line.empty() && (line.front() == '*' || line.front() == '-' || line.front() == '#'))
      line = text::trim(std::string_view(line).substr(1));
    if (text::starts_with_ci(line, "topic:")) {
      out.topic = clean_field(std::string_view(line).substr(6));
      saw_topic = true;
    } else if (text::starts_with_ci(line, "keywords:")) {
      out.keywords = parse_keyword_list(std::string_view(line).substr(9));
    }
  }
  if (!saw_topic) {
    out.problem = "missing TOPIC line";
  } else if (out.topic.empty()) {
    out.problem = "empty topic";
  } else if (has_space(out.topic)) {
    out.problem = "topic must be one word, got '" + out.topic + "'";
  }
  return out;
}

KeyInfo extract_key_info(const QAPair& qa, std::size_t n, const ChatBackend& chat, const PromptSet& prompts,
                         const GenerationParams& params) {
  qa.validate();
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "keyword count must be positive");

  std::string prompt = prompts.get(prompt_names::kExtraction)
                           .render({{"question", qa.question}, {"answer", qa.answer}, {"n", std::to_string(n)}});
  auto parsed = ExtractionReply::parse(chat.chat_complete(prompt, params));
  bool reprompted = false;
  if (!parsed.problem.empty()) {
    reprompted = true;
    auto retry = prompt + "\n\nYour previous reply could not be used (" + parsed.problem +
                 "). Follow the two-line format exactly.";
    parsed = ExtractionReply::parse(chat.chat_complete(retry, params));
    if (!parsed.problem.empty())
      throw Error(ErrorCode::ExtractionUnparseable, "extraction reply unusable after retry: " + parsed.problem);
  }

  KeyInfo info;
  info.topic = parsed.topic;
  merge_keywords(info.keywords, parsed.keywords, info.topic, n);

  if (info.keywords.size() < n && !reprompted) {
    std::size_t missing = n - info.keywords.size();
    std::vector<std::string> existing = info.keywords;
    existing.push_back(text::to_lower(info.topic));
    std::string more = prompts.get(prompt_names::kExtractionMore)
                           .render({{"question", qa.question},
                                    {"answer", qa.answer},
                                    {"missing", std::to_string(missing)},
                                    {"existing", join(existing, ", ")}});
    auto extra = ExtractionReply::parse(chat.chat_complete(more, params));
    merge_keywords(info.keywords, extra.keywords, info.topic, n);
  }
  if (info.keywords.size() < n) merge_keywords(info.keywords, frequent_qa_tokens(qa), info.topic, n);
  if (info.keywords.size() < n)
    throw Error(ErrorCode::ExtractionUnparseable,
                "could not assemble " + std::to_string(n) + " distinct keywords from the QA pair");
  info.validate(n);
  return info;
}

std::vector<WikiPage> iterative_retrieve(const KeyInfo& info, std::size_t limit, const PageSource& pages,
                                         bool* used_fallback) {
  if (used_fallback) *used_fallback = false;
  SearchQuery by_title;
  by_title.must_title_contain = info.topic;
  by_title.limit = limit;
  auto candidates = pages.search_pages(by_title);

  if (candidates.empty()) {
    if (used_fallback) *used_fallback = true;
    std::vector<std::string> terms{info.topic};
    terms.insert(terms.end(), info.keywords.begin(), info.keywords.end());
    while (!terms.empty() && candidates.empty()) {
      candidates = pages.search_pages({std::nullopt, terms, std::min<std::size_t>(limit, 10)});
      terms.pop_back();
    }
    if (candidates.empty())
      throw Error(ErrorCode::EmptyCandidates, "no pages match topic '" + info.topic + "'");
    return candidates;
  }

  for (const auto& kw : info.keywords) {
    if (candidates.size() == 1) break;
    std::vector<WikiPage> narrowed;
    std::copy_if(candidates.begin(), candidates.end(), std::back_inserter(narrowed),
                 [&](const WikiPage& p) { return text::contains_ci(p.body, kw); });
    if (!narrowed.empty()) candidates = std::move(narrowed);
  }
  return candidates;
}

std::vector<RankedPage> rerank(const RerankQuery& query, const std::vector<WikiPage>& candidates,
                               const ConditionalScorer& scorer, std::size_t parallelism) {
  if (candidates.empty()) throw Error(ErrorCode::EmptyCandidates, "nothing to re-rank");
  if (text::trim(query.text).empty()) throw Error(ErrorCode::InvalidArgument, "re-rank query is empty");
  for (const auto& c : candidates)
    if (text::trim(c.definition).empty())
      throw Error(ErrorCode::InvalidArgument, "candidate without definition: " + c.title);

  auto scores = parallel_map<double>(candidates.size(), parallelism, [&](std::size_t i) {
    auto lp = scorer.score_conditional(candidates[i].definition, query.text);
    return lp.sum() - std::log(static_cast<double>(lp.tokens.size()));
  });
  std::vector<RankedPage> ranked;
  ranked.reserve(candidates.size());
  for (std::size_t i = 0; i < candidates.size(); ++i) ranked.push_back({candidates[i], scores[i], true});
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const RankedPage& a, const RankedPage& b) { return a.log_score > b.log_score; });
  return ranked;
}

Recognition recognize(const QAPair& qa, const RecognitionConfig& config, const ChatBackend& chat,
                      const PageSource& pages, const ConditionalScorer& scorer, const PromptSet& prompts,
                      const GenerationParams& params) {
  try {
    config.validate();
    Recognition out;
    out.key_info = extract_key_info(qa, config.n_keywords, chat, prompts, params);
    auto candidates = iterative_retrieve(out.key_info, config.candidate_limit, pages);
    if (candidates.size() == 1) {
      out.ranking.push_back({candidates.front(), 0.0, false});
    } else {
      out.ranking = rerank(RerankQuery::from(out.key_info), candidates, scorer, config.scorer_parallelism);
    }
    out.topic_page = out.ranking.front().page;
    return out;
  } catch (const Error& e) {
    throw e.with_stage(std::string(kStage));
  }
}

}  // namespace kfqg
