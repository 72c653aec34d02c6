#include "kfqg/mock_backends.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <regex>
#include <set>
#include <unordered_set>

#include <json.hpp>

#include "kfqg/random.hpp"
#include "kfqg/text.hpp"

namespace kfqg {

using nlohmann::json;

namespace {

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::FileNotFound, "cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::InvalidConfig, path.string() + ": " + e.what());
  }
}

std::string between(std::string_view s, std::string_view start, std::string_view end) {
  auto b = s.find(start);
  if (b == std::string_view::npos) return {};
  b += start.size();
  auto e = end.empty() ? std::string_view::npos : s.find(end, b);
  return std::string(s.substr(b, e == std::string_view::npos ? std::string_view::npos : e - b));
}

int parse_int_after(std::string_view s, const std::regex& re, int fallback) {
  std::match_results<std::string_view::const_iterator> m;
  if (std::regex_search(s.begin(), s.end(), m, re)) return std::stoi(m[1].str());
  return fallback;
}

bool is_alpha_word(const std::string& t) {
  return std::all_of(t.begin(), t.end(), [](char c) { return std::isalpha(static_cast<unsigned char>(c)); });
}

// Content words by frequency (desc) then first occurrence.
std::vector<std::string> ranked_words(std::string_view s, const std::unordered_set<std::string>& exclude,
                                      std::size_t min_len) {
  auto toks = text::content_tokens(s);
  std::vector<std::string> order;
  std::unordered_map<std::string, int> freq;
  for (auto& t : toks) {
    if (t.size() < min_len || !is_alpha_word(t) || exclude.contains(t)) continue;
    if (freq[t]++ == 0) order.push_back(t);
  }
  std::stable_sort(order.begin(), order.end(),
                   [&](const std::string& a, const std::string& b) { return freq[a] > freq[b]; });
  return order;
}

std::string capitalize(std::string s) {
  if (!s.empty()) s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
  return s;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (i) out += sep;
    out += parts[i];
  }
  return out;
}

std::size_t pick(std::string_view prompt, const GenerationParams& params, std::size_t n) {
  return static_cast<std::size_t>(mix64(text::fnv1a(prompt) ^ mix64(params.seed.value_or(0))) % n);
}

std::unordered_set<std::string> token_set(std::string_view s) {
  auto t = text::word_tokens(s);
  return {t.begin(), t.end()};
}

std::string reply_extraction(std::string_view prompt) {
  static const std::regex n_re(R"(exactly (\d+) keywords)");
  std::string q = between(prompt, "Question: ", "\nAnswer: ");
  std::string a = between(prompt, "\nAnswer: ", "\nGive one word");
  int n = parse_int_after(prompt, n_re, 3);
  std::string qa = q + " " + a;

  auto q_words = text::content_tokens(q);
  std::unordered_map<std::string, int> freq;
  for (auto& t : text::content_tokens(qa)) ++freq[t];
  std::string topic;
  int best = -1;
  for (auto& t : q_words) {
    if (t.size() < 3 || !is_alpha_word(t)) continue;
    if (freq[t] >= best) best = freq[t], topic = t;  // later occurrence wins ties
  }
  if (topic.empty()) {
    auto fallback = ranked_words(qa, {}, 3);
    topic = fallback.empty() ? "topic" : fallback.front();
  }
  auto kws = ranked_words(qa, {topic}, 3);
  if (kws.size() > static_cast<std::size_t>(n)) kws.resize(static_cast<std::size_t>(n));
  return "TOPIC: " + topic + "\nKEYWORDS: " + join(kws, ", ");
}

std::string reply_extraction_more(std::string_view prompt) {
  static const std::regex n_re(R"(Extract (\d+) more keywords)");
  std::string q = between(prompt, "Question: ", "\nAnswer: ");
  std::string a = between(prompt, "\nAnswer: ", "\nDo not repeat any of: ");
  std::string existing = between(prompt, "Do not repeat any of: ", "\n");
  int n = parse_int_after(prompt, n_re, 1);
  std::unordered_set<std::string> exclude;
  for (auto& t : text::word_tokens(existing)) exclude.insert(t);
  auto kws = ranked_words(q + " " + a, exclude, 3);
  if (kws.size() > static_cast<std::size_t>(n)) kws.resize(static_cast<std::size_t>(n));
  return "KEYWORDS: " + join(kws, ", ");
}

constexpr std::string_view kMockDefinitionMarker = " is a concept closely associated with ";

std::string reply_expansion(std::string_view prompt, const MockChatConfig& config) {
  static const std::regex k_re(R"(List up to (\d+) entities)");
  std::string entity = between(prompt, "closely related to \"", "\".\n");
  int k = parse_int_after(prompt, k_re, 6);
  std::vector<std::string> lines;
  if (auto it = config.relations.find(text::canonical_id(entity)); it != config.relations.end()) {
    for (const auto& r : it->second) {
      if (static_cast<int>(lines.size()) >= k) break;
      lines.push_back(r.entity + " | " + r.relation);
    }
    return lines.empty() ? "(none)" : join(lines, "\n");
  }
  auto def_start = prompt.find("Definition of \"");
  std::string definition;
  if (def_start != std::string_view::npos)
    definition = between(prompt.substr(def_start), "\": ", "\nReply with one entity");
  // Entities the mock defined itself have nothing further to offer.
  if (definition.find(kMockDefinitionMarker) != std::string::npos) return "(none)";
  auto words = ranked_words(definition, token_set(entity), 4);
  for (const auto& w : words) {
    if (static_cast<int>(lines.size()) >= k) break;
    lines.push_back(capitalize(w) + " | related to");
  }
  return lines.empty() ? "(none)" : join(lines, "\n");
}

std::string reply_definition(std::string_view prompt) {
  std::string entity = between(prompt, "definition of \"", "\" in the context of \"");
  std::string parent = between(prompt, "in the context of \"", "\".");
  if (entity.empty()) entity = "This entity";
  return entity + std::string(kMockDefinitionMarker) + (parent.empty() ? "its field" : parent) + ".";
}

std::string reply_continuation(std::string_view prompt, const GenerationParams& params) {
  std::string qa = between(prompt, "Given a question-answer pair: ", ". Please continue writing");
  std::string wiki = between(prompt, "to reflect the association with it.\n", "");
  auto words = ranked_words(qa, token_set(wiki), 4);
  if (words.size() < 2) words = ranked_words(qa, {}, 3);
  std::string w1 = words.size() > 0 ? words[0] : "the topic";
  std::string w2 = words.size() > 1 ? words[1] : "its context";
  static const std::array<std::string_view, 3> bank = {
      "This is directly connected to the question about {1}, since {2} shapes how the effect "
      "appears in everyday situations.",
      "In everyday terms, this explains why {1} matters, and it also shows how {2} changes the "
      "outcome.",
      "Seen through the question and its answer, the key link is {1}, which in turn depends on "
      "{2}.",
  };
  std::string out(bank[pick(prompt, params, bank.size())]);
  out.replace(out.find("{1}"), 3, w1);
  out.replace(out.find("{2}"), 3, w2);
  return out;
}

std::string reply_followup(std::string_view prompt, const GenerationParams& params) {
  std::string info = between(prompt, "Given the following information: ", ". Based on this information");
  // The question comes first and ends at its '?'; knowledge words not in it
  // make the follow-up reach beyond the original question.
  auto q_end = info.find('?');
  std::string question = q_end == std::string::npos ? std::string() : info.substr(0, q_end + 1);
  std::string rest = q_end == std::string::npos ? info : info.substr(q_end + 1);
  auto q_words = ranked_words(question, {}, 4);
  auto fresh = ranked_words(rest, token_set(question), 5);
  auto any = ranked_words(info, {}, 4);
  std::string b = !q_words.empty() ? q_words[0] : (any.size() > 1 ? any[1] : "the answer");
  std::string a = !fresh.empty() ? fresh[0] : (!any.empty() ? any[0] : "this");
  static const std::array<std::string_view, 4> bank = {
      "How does {a} influence {b} in practice?",
      "What role does {a} play in {b}?",
      "Why does {b} depend on {a}, and what happens when {a} changes?",
      "Could a change in {a} alter {b} in a noticeable way?",
  };
  std::string out(bank[pick(prompt, params, bank.size())]);
  for (std::size_t p; (p = out.find("{a}")) != std::string::npos;) out.replace(p, 3, a);
  for (std::size_t p; (p = out.find("{b}")) != std::string::npos;) out.replace(p, 3, b);
  return out;
}

std::string reply_answer(std::string_view prompt) {
  std::string q = between(prompt, "Question: ", "");
  auto words = ranked_words(q, {}, 3);
  if (words.empty()) return "In short, it depends on the situation.";
  std::string out = "In short, " + words[0] + " depends on several factors";
  if (words.size() > 1) out += ", most importantly " + words[1];
  if (words.size() > 2) out += " and " + words[2];
  return out + ".";
}

}  // namespace

// --- MockChat ---------------------------------------------------------------

MockChatConfig MockChat::load_config(const std::filesystem::path& path) {
  json j = read_json_file(path);
  MockChatConfig config;
  const json rules = j.value("rules", json::array());
  const json relations = j.value("relations", json::object());
  for (const auto& r : rules)
    config.rules.emplace_back(r.at("contains").get<std::string>(), r.at("reply").get<std::string>());
  for (const auto& [entity, rels] : relations.items()) {
    auto& list = config.relations[text::canonical_id(entity)];
    for (const auto& r : rels)
      list.push_back({r.at("entity").get<std::string>(), r.value("relation", std::string("related to"))});
  }
  return config;
}

std::string MockChat::do_complete(std::string_view prompt, const GenerationParams& params) const {
  for (const auto& [needle, reply] : config_.rules)
    if (prompt.find(needle) != std::string_view::npos) return reply;

  auto starts = [&](std::string_view p) { return prompt.substr(0, p.size()) == p; };
  if (starts("Extract the key information")) return reply_extraction(prompt);
  if (starts("Extract ") && prompt.find(" more keywords") != std::string_view::npos)
    return reply_extraction_more(prompt);
  if (starts("List up to ")) return reply_expansion(prompt, config_);
  if (starts("Give a one-sentence definition")) return reply_definition(prompt);
  if (starts("Given a question-answer pair:")) return reply_continuation(prompt, params);
  if (starts("Given the following information:")) return reply_followup(prompt, params);
  if (starts("Answer the following question")) return reply_answer(prompt);
  return "Mock reply " + text::hex64(mix64(text::fnv1a(prompt) ^ params.seed.value_or(0)));
}

// --- ScriptedChat -----------------------------------------------------------

std::string ScriptedChat::do_complete(std::string_view prompt, const GenerationParams&) const {
  std::lock_guard lock(mu_);
  prompts_.emplace_back(prompt);
  if (!replies_.empty()) {
    last_ = replies_.front();
    replies_.pop_front();
  }
  return last_;
}

std::vector<std::string> ScriptedChat::prompts() const {
  std::lock_guard lock(mu_);
  return prompts_;
}

std::size_t ScriptedChat::calls() const {
  std::lock_guard lock(mu_);
  return prompts_.size();
}

// --- HashEmbedder -----------------------------------------------------------

HashEmbedder::HashEmbedder(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw Error(ErrorCode::InvalidArgument, "embedding dim must be positive");
}

std::size_t HashEmbedder::bucket(std::string_view token) const {
  return static_cast<std::size_t>(text::fnv1a(token) % dim_);
}

Embedding HashEmbedder::do_embed(std::string_view input) const {
  Embedding e{std::vector<double>(dim_, 0.0)};
  for (const auto& tok : text::whitespace_tokens(input)) e.values[bucket(tok)] += 1.0;
  return e;
}

// --- TableScorer ------------------------------------------------------------

TableScorer::TableScorer(std::size_t vocab_size) : vocab_size_(vocab_size) {
  if (vocab_size == 0) throw Error(ErrorCode::InvalidArgument, "vocab_size must be positive");
}

void TableScorer::set(std::string_view condition, std::string_view token, double logprob) {
  if (!std::isfinite(logprob) || logprob > 0.0)
    throw Error(ErrorCode::InvalidArgument, "table logprob must be finite and <= 0");
  table_[text::fnv1a(condition)][text::to_lower(token)] = logprob;
}

TableScorer TableScorer::load(const std::filesystem::path& path) {
  json j = read_json_file(path);
  TableScorer scorer(j.value("vocab_size", std::size_t{32000}));
  const json entries = j.value("entries", json::array());
  for (const auto& e : entries)
    scorer.set(e.at("condition").get<std::string>(), e.at("token").get<std::string>(),
               e.at("logprob").get<double>());
  return scorer;
}

TokenLogProbs TableScorer::do_score(std::string_view condition, std::string_view target) const {
  TokenLogProbs out;
  out.tokens = text::word_tokens(target);
  const double uniform = -std::log(static_cast<double>(vocab_size_));
  const auto* specific = [&]() -> const std::unordered_map<std::string, double>* {
    auto it = table_.find(text::fnv1a(condition));
    return it == table_.end() ? nullptr : &it->second;
  }();
  const auto* wildcard = [&]() -> const std::unordered_map<std::string, double>* {
    auto it = table_.find(text::fnv1a("*"));
    return it == table_.end() ? nullptr : &it->second;
  }();
  for (const auto& tok : out.tokens) {
    double lp = uniform;
    if (specific && specific->contains(tok)) {
      lp = specific->at(tok);
    } else if (wildcard && wildcard->contains(tok)) {
      lp = wildcard->at(tok);
    }
    out.logprobs.push_back(lp);
  }
  return out;
}

// --- FixtureCorpus ----------------------------------------------------------

std::string title_from_url(std::string_view url) {
  auto slash = url.find_last_of('/');
  std::string tail(slash == std::string_view::npos ? url : url.substr(slash + 1));
  std::replace(tail.begin(), tail.end(), '_', ' ');
  return text::canonical_id(tail);
}

FixtureCorpus::FixtureCorpus(std::vector<WikiPage> pages) {
  for (auto& p : pages) add(std::move(p));
}

void FixtureCorpus::add(WikiPage page) {
  if (text::trim(page.title).empty()) throw Error(ErrorCode::InvalidArgument, "page title is empty");
  auto idx = pages_.size();
  by_title_.emplace(text::canonical_id(page.title), idx);
  if (!page.url.empty()) by_url_.emplace(page.url, idx);
  pages_.push_back(std::move(page));
}

FixtureCorpus FixtureCorpus::load_dir(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir))
    throw Error(ErrorCode::FileNotFound, "page corpus directory not found: " + dir.string());
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file() && entry.path().extension() == ".json") files.push_back(entry.path());
  std::sort(files.begin(), files.end());
  FixtureCorpus corpus;
  auto add_json = [&](const json& j) {
    corpus.add({j.at("title").get<std::string>(), j.value("url", std::string()),
                j.value("definition", std::string()), j.value("body", std::string())});
  };
  for (const auto& f : files) {
    json j = read_json_file(f);
    if (j.is_array()) {
      for (const auto& p : j) add_json(p);
    } else {
      add_json(j);
    }
  }
  return corpus;
}

namespace {

std::size_t count_ci(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return 0;
  auto h = text::to_lower(haystack);
  auto n = text::to_lower(needle);
  std::size_t count = 0;
  for (auto pos = h.find(n); pos != std::string::npos; pos = h.find(n, pos + n.size())) ++count;
  return count;
}

}  // namespace

double FixtureCorpus::relevance(const WikiPage& page, const SearchQuery& query) const {
  double score = 0.0;
  if (query.must_title_contain) {
    const auto& t = *query.must_title_contain;
    if (text::canonical_id(page.title) == text::canonical_id(t)) score += 100.0;
    score += 10.0 * static_cast<double>(count_ci(page.title, t));
    score += static_cast<double>(count_ci(page.body, t));
  }
  for (const auto& term : query.must_body_contain) score += static_cast<double>(count_ci(page.body, term));
  return score;
}

std::vector<WikiPage> FixtureCorpus::do_search(const SearchQuery& query) const {
  std::vector<std::pair<double, std::size_t>> hits;
  for (std::size_t i = 0; i < pages_.size(); ++i) {
    const auto& p = pages_[i];
    if (query.must_title_contain && !text::contains_ci(p.title, *query.must_title_contain)) continue;
    bool ok = std::all_of(query.must_body_contain.begin(), query.must_body_contain.end(),
                          [&](const std::string& term) { return text::contains_ci(p.body, term); });
    if (!ok) continue;
    hits.emplace_back(relevance(p, query), i);
  }
  std::stable_sort(hits.begin(), hits.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  std::vector<WikiPage> out;
  for (const auto& [score, i] : hits) {
    if (out.size() >= query.limit) break;
    out.push_back(pages_[i]);
  }
  return out;
}

WikiPage FixtureCorpus::do_fetch(std::string_view title_or_url) const {
  std::string id(text::trim(title_or_url));
  if (auto it = by_url_.find(id); it != by_url_.end()) return pages_[it->second];
  if (auto it = by_title_.find(text::canonical_id(id)); it != by_title_.end()) return pages_[it->second];
  if (id.find("://") != std::string::npos) {
    if (auto it = by_title_.find(title_from_url(id)); it != by_title_.end()) return pages_[it->second];
  }
  throw Error(ErrorCode::PageNotFound, "page not found: " + id);
}

}  // namespace kfqg
