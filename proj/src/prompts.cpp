#include "kfqg/prompts.hpp"

#include <array>
#include <fstream>
#include <sstream>

#include "kfqg/error.hpp"
#include "kfqg/text.hpp"

namespace kfqg {

namespace {

struct Builtin {
  std::string_view name;
  std::string text;
};

const std::array<Builtin, 7>& builtins() {
  static const std::array<Builtin, 7> table = {{
      {prompt_names::kExtraction,
       "Extract the key information from the following question-answer pair.\n"
       "Question: {question}\n"
       "Answer: {answer}\n"
       "Give one word as the topic and exactly {n} keywords.\n"
       "Reply with exactly two lines and nothing else:\n"
       "TOPIC: <one word>\n"
       "KEYWORDS: <keyword 1>, <keyword 2>, ..."},
      {prompt_names::kExtractionMore,
       "Extract {missing} more keywords from the following question-answer pair.\n"
       "Question: {question}\n"
       "Answer: {answer}\n"
       "Do not repeat any of: {existing}\n"
       "Reply with one line and nothing else:\n"
       "KEYWORDS: <keyword 1>, <keyword 2>, ..."},
      {prompt_names::kExpansion,
       "List up to {max_children} entities closely related to \"{entity}\".\n"
       "Definition of \"{entity}\": {definition}\n"
       "Reply with one entity per line in the form: Entity | relation"},
      {prompt_names::kDefinition,
       "Give a one-sentence definition of \"{entity}\" in the context of \"{parent}\"."},
      {prompt_names::kContinuation,
       "Given a question-answer pair: {question}, {answer}. Please continue writing the "
       "following sentences with a few sentences based on the question-answer pair to reflect "
       "the association with it.\n"
       "{wiki_text}"},
      {prompt_names::kFollowup,
       "Given the following information: {question}, {answer}, {related_knowledge}. Based on "
       "this information, raise a follow-up question that is relevant to the question-answer "
       "content and that is thoughtful"},
      {prompt_names::kAnswer,
       "Answer the following question in a few sentences.\n"
       "Question: {question}"},
  }};
  return table;
}

}  // namespace

PromptTemplate::PromptTemplate(std::string name, std::string text)
    : name_(std::move(name)), text_(std::move(text)), hash_(text::hex64(text::fnv1a(text_))) {}

std::string PromptTemplate::render(const std::map<std::string, std::string, std::less<>>& slots) const {
  std::string out;
  out.reserve(text_.size() + 256);
  std::size_t i = 0;
  while (i < text_.size()) {
    if (text_[i] == '{') {
      auto close = text_.find('}', i + 1);
      if (close != std::string::npos) {
        std::string_view key(text_.data() + i + 1, close - i - 1);
        if (auto it = slots.find(key); it != slots.end()) {
          out += it->second;
          i = close + 1;
          continue;
        }
      }
    }
    out.push_back(text_[i++]);
  }
  return out;
}

const std::string& default_prompt_text(std::string_view name) {
  for (const auto& b : builtins())
    if (b.name == name) return b.text;
  throw Error(ErrorCode::InvalidArgument, "unknown prompt template: " + std::string(name));
}

PromptSet::PromptSet() {
  for (const auto& b : builtins()) templates_.emplace(std::string(b.name), PromptTemplate(std::string(b.name), b.text));
}

PromptSet PromptSet::load_dir(const std::filesystem::path& dir) {
  PromptSet set;
  for (const auto& b : builtins()) {
    auto path = dir / (std::string(b.name) + ".txt");
    std::ifstream in(path, std::ios::binary);
    if (!in) continue;
    std::ostringstream ss;
    ss << in.rdbuf();
    std::string content = ss.str();
    if (!content.empty() && content.back() == '\n') content.pop_back();
    if (!content.empty() && content.back() == '\r') content.pop_back();
    set.templates_.insert_or_assign(std::string(b.name), PromptTemplate(std::string(b.name), content));
  }
  return set;
}

const PromptTemplate& PromptSet::get(std::string_view name) const {
  auto it = templates_.find(name);
  if (it == templates_.end())
    throw Error(ErrorCode::InvalidArgument, "unknown prompt template: " + std::string(name));
  return it->second;
}

}  // namespace kfqg
