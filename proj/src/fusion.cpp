#include "kfqg/fusion.hpp"

#include <array>
#include <cctype>

#include "kfqg/text.hpp"

namespace kfqg {

namespace {

constexpr std::array<std::string_view, 8> kQuotes = {"\"", "'", "`", "\xe2\x80\x9c", "\xe2\x80\x9d",
                                                     "\xe2\x80\x98", "\xe2\x80\x99", "*"};

constexpr std::array<std::string_view, 6> kLabels = {"follow-up question:", "follow up question:",
                                                     "followup question:", "question:", "q:", "answer:"};

constexpr std::array<std::string_view, 28> kInterrogatives = {
    "what", "why", "how", "when", "where", "who", "whom", "whose", "which", "is",
    "are", "was", "were", "do", "does", "did", "can", "could", "will", "would",
    "should", "shall", "may", "might", "has", "have", "had", "am"};

bool strip_once(std::string& s) {
  for (auto label : kLabels) {
    if (text::starts_with_ci(s, label)) {
      s = text::trim(std::string_view(s).substr(label.size()));
      return true;
    }
  }
  for (auto q : kQuotes) {
    if (s.size() >= q.size() && s.compare(0, q.size(), q) == 0) {
      s = text::trim(std::string_view(s).substr(q.size()));
      return true;
    }
    if (s.size() >= q.size() && s.compare(s.size() - q.size(), q.size(), q) == 0) {
      s = text::trim(std::string_view(s).substr(0, s.size() - q.size()));
      return true;
    }
  }
  return false;
}

std::string strip_decoration(std::string_view raw) {
  std::string s = text::trim(raw);
  while (strip_once(s)) {
  }
  return s;
}

// Start of the sentence containing position `pos`.
std::size_t sentence_start(const std::string& s, std::size_t pos) {
  for (std::size_t i = pos; i-- > 0;) {
    char c = s[i];
    if (c == '\n' || c == '!' || c == '?') return i + 1;
    if (c == '.' && i + 1 < s.size() && std::isspace(static_cast<unsigned char>(s[i + 1]))) return i + 1;
    if (c == ':' && i + 1 < s.size() && std::isspace(static_cast<unsigned char>(s[i + 1]))) return i + 1;
  }
  return 0;
}

bool is_interrogative(std::string_view sentence) {
  auto words = text::word_tokens(sentence);
  if (words.empty()) return false;
  return std::find(kInterrogatives.begin(), kInterrogatives.end(), words.front()) != kInterrogatives.end();
}

GenerationParams shifted(const GenerationParams& params, std::uint64_t by) {
  GenerationParams p = params;
  if (p.seed) *p.seed += by;
  return p;
}

}  // namespace

std::string render_continuation_prompt(const PromptSet& prompts, const QAPair& qa, std::string_view wiki_text) {
  return prompts.get(prompt_names::kContinuation)
      .render({{"question", qa.question}, {"answer", qa.answer}, {"wiki_text", std::string(wiki_text)}});
}

std::string render_followup_prompt(const PromptSet& prompts, const QAPair& qa, std::string_view related_knowledge) {
  return prompts.get(prompt_names::kFollowup)
      .render({{"question", qa.question},
               {"answer", qa.answer},
               {"related_knowledge", std::string(related_knowledge)}});
}

RelatedKnowledge continue_knowledge(const QAPair& qa, const std::string& wiki_text, const std::string& source_node_id,
                                    const ChatBackend& chat, const PromptSet& prompts, const GenerationParams& params) {
  if (text::trim(wiki_text).empty()) throw Error(ErrorCode::InvalidArgument, "wiki knowledge is empty");
  const auto prompt = render_continuation_prompt(prompts, qa, wiki_text);
  for (std::uint64_t attempt = 0; attempt < 2; ++attempt) {
    std::string continuation;
    try {
      continuation = text::trim(chat.chat_complete(prompt, shifted(params, attempt)));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::EmptyCompletion) throw;
    }
    // Some models echo the passage before continuing it.
    auto trimmed_wiki = text::trim(wiki_text);
    if (continuation.compare(0, trimmed_wiki.size(), trimmed_wiki) == 0)
      continuation = text::trim(std::string_view(continuation).substr(trimmed_wiki.size()));
    if (continuation.empty()) continue;

    RelatedKnowledge out{wiki_text, wiki_text, source_node_id};
    bool needs_space = !wiki_text.empty() && !std::isspace(static_cast<unsigned char>(wiki_text.back()));
    if (needs_space) out.fused_text += ' ';
    out.fused_text += continuation;
    return out;
  }
  throw Error(ErrorCode::EmptyContinuation, "continuation was empty after retry");
}

RelatedKnowledge raw_knowledge(const std::string& wiki_text, const std::string& source_node_id) {
  return {wiki_text, wiki_text, source_node_id};
}

std::optional<std::string> postprocess_question(std::string_view reply) {
  std::string s = strip_decoration(reply);
  if (s.empty()) return std::nullopt;

  std::string out;
  if (auto q = s.find('?'); q != std::string::npos) {
    out = strip_decoration(std::string_view(s).substr(sentence_start(s, q), q - sentence_start(s, q) + 1));
  } else {
    auto line = strip_decoration(text::split_lines(s).front());
    while (!line.empty() && std::string_view(".!,;:").find(line.back()) != std::string_view::npos) line.pop_back();
    line = strip_decoration(line);
    if (!is_interrogative(line)) return std::nullopt;
    out = line + "?";
  }
  if (out.empty() || out == "?" || out.back() != '?') return std::nullopt;
  return out;
}

FollowUpQuestion generate_followup(const QAPair& qa, const RelatedKnowledge& knowledge, const ChatBackend& chat,
                                   const PromptSet& prompts, const GenerationParams& params) {
  if (knowledge.fused_text.compare(0, knowledge.wiki_text.size(), knowledge.wiki_text) != 0)
    throw Error(ErrorCode::InvalidArgument, "fused knowledge does not start with the wiki text");
  const auto prompt = render_followup_prompt(prompts, qa, knowledge.fused_text);
  ErrorCode last = ErrorCode::NonQuestionOutput;
  for (std::uint64_t attempt = 0; attempt < 2; ++attempt) {
    auto q = postprocess_question(chat.chat_complete(prompt, shifted(params, attempt)));
    if (!q) {
      last = ErrorCode::NonQuestionOutput;
      continue;
    }
    if (*q == qa.question) {
      last = ErrorCode::DuplicateQuestion;
      continue;
    }
    return {*q, {}};
  }
  if (last == ErrorCode::DuplicateQuestion)
    throw Error(ErrorCode::DuplicateQuestion, "generated question repeats the initial question");
  throw Error(ErrorCode::NonQuestionOutput, "reply could not be turned into a question after retry");
}

}  // namespace kfqg
