#pragma once

#include <optional>
#include <string>

#include "kfqg/backends.hpp"
#include "kfqg/prompts.hpp"
#include "kfqg/recognition.hpp"

namespace kfqg {

/// Selected wiki knowledge and its context-conditioned continuation.
/// fused_text always starts with wiki_text verbatim.
struct RelatedKnowledge {
  std::string wiki_text;
  std::string fused_text;
  std::string source_node_id;

  std::string continuation() const { return fused_text.substr(wiki_text.size()); }
  bool operator==(const RelatedKnowledge&) const = default;
};

struct FollowUpQuestion {
  std::string text;
  std::string trace_id;

  bool operator==(const FollowUpQuestion&) const = default;
};

std::string render_continuation_prompt(const PromptSet& prompts, const QAPair& qa, std::string_view wiki_text);
std::string render_followup_prompt(const PromptSet& prompts, const QAPair& qa, std::string_view related_knowledge);

/// Asks the chat backend to continue `wiki_text` in light of the QA pair.
/// An empty continuation is retried once (with a shifted seed) before
/// EmptyContinuation is thrown.
RelatedKnowledge continue_knowledge(const QAPair& qa, const std::string& wiki_text, const std::string& source_node_id,
                                    const ChatBackend& chat, const PromptSet& prompts, const GenerationParams& params);

/// Knowledge passed through without continuation.
RelatedKnowledge raw_knowledge(const std::string& wiki_text, const std::string& source_node_id);

/// Cleans a raw reply into a single question: strips labels and quotes,
/// keeps the first "?"-terminated sentence, and appends "?" to an
/// interrogative that lacks terminal punctuation. nullopt when the reply is
/// not a question.
std::optional<std::string> postprocess_question(std::string_view reply);

/// Generates the follow-up question from the QA pair and fused knowledge.
/// A non-question or a copy of the original question is retried once.
FollowUpQuestion generate_followup(const QAPair& qa, const RelatedKnowledge& knowledge, const ChatBackend& chat,
                                   const PromptSet& prompts, const GenerationParams& params);

}  // namespace kfqg
