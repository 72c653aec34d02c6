#include "kfqg/text.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdio>
#include <unordered_set>

#include "kfqg/error.hpp"
#include "kfqg/random.hpp"

namespace kfqg {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::EmptyPrompt: return "empty-prompt";
    case ErrorCode::BackendUnreachable: return "backend-unreachable";
    case ErrorCode::RateLimited: return "rate-limited";
    case ErrorCode::EmptyCompletion: return "empty-completion";
    case ErrorCode::TokenizationFailure: return "tokenization-failure";
    case ErrorCode::PageNotFound: return "page-not-found";
    case ErrorCode::ExtractionUnparseable: return "extraction-unparseable";
    case ErrorCode::EmptyCandidates: return "empty-candidates";
    case ErrorCode::GraphTooSmall: return "graph-too-small";
    case ErrorCode::KeyMismatch: return "key-mismatch";
    case ErrorCode::EmptyContinuation: return "empty-continuation";
    case ErrorCode::NonQuestionOutput: return "non-question-output";
    case ErrorCode::DuplicateQuestion: return "duplicate-question";
    case ErrorCode::FileNotFound: return "file-not-found";
    case ErrorCode::AllLinesMalformed: return "all-lines-malformed";
    case ErrorCode::CorpusTooSmall: return "corpus-too-small";
    case ErrorCode::EmptyAfterFiltering: return "empty-after-filtering";
    case ErrorCode::NoNgrams: return "no-ngrams";
    case ErrorCode::NoTokens: return "no-tokens";
    case ErrorCode::MissingTrace: return "missing-trace";
    case ErrorCode::InvalidConfig: return "invalid-config";
  }
  return "unknown";
}

bool is_retryable(ErrorCode code) {
  return code == ErrorCode::RateLimited || code == ErrorCode::BackendUnreachable;
}

std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose) {
  return mix64(seed ^ text::fnv1a(purpose));
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return mix64(mix64(seed) ^ (index * 0x9e3779b97f4a7c15ULL + 1));
}

}  // namespace kfqg

namespace kfqg::text {

namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

// Compact English list; applied only where a metric or heuristic asks for it.
const std::unordered_set<std::string_view>& stopwords() {
  static const std::unordered_set<std::string_view> words = {
      "a", "about", "above", "after", "again", "against", "all", "also", "am", "an", "and",
      "any", "are", "aren", "as", "at", "be", "because", "been", "before", "being", "below",
      "between", "both", "but", "by", "can", "could", "did", "didn", "do", "does", "doesn",
      "doing", "don", "down", "during", "each", "else", "even", "ever", "few", "for", "from",
      "further", "get", "gets", "got", "had", "has", "have", "having", "he", "her", "here",
      "hers", "herself", "him", "himself", "his", "how", "i", "if", "in", "into", "is", "isn",
      "it", "its", "itself", "just", "let", "ll", "me", "might", "more", "most", "much", "must",
      "my", "myself", "no", "nor", "not", "now", "of", "off", "on", "once", "one", "only", "or",
      "other", "our", "ours", "ourselves", "out", "over", "own", "re", "really", "s", "same",
      "say", "says", "she", "should", "so", "some", "such", "t", "than", "that", "the", "their",
      "theirs", "them", "themselves", "then", "there", "these", "they", "thing", "things",
      "this", "those", "through", "to", "too", "under", "until", "up", "us", "ve", "very",
      "was", "wasn", "way", "we", "well", "were", "what", "when", "where", "which", "while",
      "who", "whom", "whose", "why", "will", "with", "won", "would", "you", "your", "yours",
      "yourself", "yourselves", "d", "m", "y", "o"};
  return words;
}

}  // namespace

std::string to_lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string trim(std::string_view s) {
  auto is_space = [](char c) { return std::isspace(static_cast<unsigned char>(c)) != 0; };
  std::size_t b = 0, e = s.size();
  while (b < e && is_space(s[b])) ++b;
  while (e > b && is_space(s[e - 1])) --e;
  return std::string(s.substr(b, e - b));
}

bool contains_ci(std::string_view haystack, std::string_view needle) {
  if (needle.empty()) return true;
  auto it = std::search(haystack.begin(), haystack.end(), needle.begin(), needle.end(),
                        [](char a, char b) {
                          return std::tolower(static_cast<unsigned char>(a)) ==
                                 std::tolower(static_cast<unsigned char>(b));
                        });
  return it != haystack.end();
}

bool starts_with_ci(std::string_view s, std::string_view prefix) {
  if (prefix.size() > s.size()) return false;
  return to_lower(s.substr(0, prefix.size())) == to_lower(prefix);
}

std::string canonical_id(std::string_view title) {
  std::string out;
  bool pending_space = false;
  for (char c : trim(title)) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  }
  return out;
}

std::vector<std::string> whitespace_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      if (!cur.empty()) out.push_back(std::move(cur)), cur.clear();
    } else {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::vector<std::string> word_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    auto c = static_cast<unsigned char>(ch);
    if (is_word_byte(c)) {
      cur.push_back(static_cast<char>(std::tolower(c)));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool is_stopword(std::string_view lowered_token) { return stopwords().contains(lowered_token); }

std::vector<std::string> content_tokens(std::string_view s) {
  auto toks = word_tokens(s);
  std::erase_if(toks, [](const std::string& t) { return is_stopword(t); });
  return toks;
}

std::vector<std::string> split_lines(std::string_view s) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    auto nl = s.find('\n', start);
    if (nl == std::string_view::npos) nl = s.size();
    auto line = s.substr(start, nl - start);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    out.emplace_back(line);
    start = nl + 1;
  }
  return out;
}

std::uint64_t fnv1a(std::string_view s, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  std::array<char, 17> buf{};
  std::snprintf(buf.data(), buf.size(), "%016llx", static_cast<unsigned long long>(v));
  return std::string(buf.data(), 16);
}

}  // namespace kfqg::text
