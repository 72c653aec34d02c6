#include <doctest.h>

#include "kfqg/fusion.hpp"
#include "kfqg/mock_backends.hpp"
#include "kfqg/pipeline.hpp"
#include "support/fixtures.hpp"

using namespace kfqg;

namespace {

const QAPair kQa{"Why is the sky blue?", "Air scatters blue light more than red light."};

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("no error thrown");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("continuation is appended to the wiki text with one space") {
  ScriptedChat chat({"Also, X relates to Y."});
  auto k = continue_knowledge(kQa, "Rayleigh scattering is elastic.", "rayleigh", chat, PromptSet(), {});
  CHECK(k.fused_text == "Rayleigh scattering is elastic. Also, X relates to Y.");
  CHECK(k.wiki_text == "Rayleigh scattering is elastic.");
  CHECK(k.continuation() == " Also, X relates to Y.");
  CHECK(k.source_node_id == "rayleigh");
}

TEST_CASE("an echoed passage is not duplicated") {
  ScriptedChat chat({"Rayleigh scattering is elastic. It favours short wavelengths."});
  auto k = continue_knowledge(kQa, "Rayleigh scattering is elastic.", "r", chat, PromptSet(), {});
  CHECK(k.fused_text == "Rayleigh scattering is elastic. It favours short wavelengths.");
}

TEST_CASE("empty continuation twice is an error") {
  ScriptedChat chat({"", "  "});
  CHECK(code_of([&] { continue_knowledge(kQa, "Text.", "t", chat, PromptSet(), {}); }) ==
        ErrorCode::EmptyContinuation);
  CHECK(chat.calls() == 2);
  ScriptedChat second({"", "Recovered."});
  CHECK(continue_knowledge(kQa, "Text.", "t", second, PromptSet(), {}).fused_text == "Text. Recovered.");
}

TEST_CASE("continuation prompt carries the QA pair and wiki text") {
  auto p = render_continuation_prompt(PromptSet(), kQa, "WIKI");
  CHECK(p == "Given a question-answer pair: Why is the sky blue?, Air scatters blue light more than red light.. "
             "Please continue writing the following sentences with a few sentences based on the question-answer "
             "pair to reflect the association with it.\nWIKI");
}

TEST_CASE("raw knowledge passes text through") {
  auto k = raw_knowledge("Plain.", "p");
  CHECK(k.fused_text == "Plain.");
  CHECK(k.continuation().empty());
}

TEST_CASE("question post-processing") {
  CHECK(postprocess_question("\"How does X affect Y?\"") == "How does X affect Y?");
  CHECK(postprocess_question("Follow-up question: Why is it cold? And what about heat?") == "Why is it cold?");
  CHECK(postprocess_question("Here is one. What causes tides?") == "What causes tides?");
  CHECK(postprocess_question("How do tides form") == "How do tides form?");
  CHECK(postprocess_question("\xe2\x80\x9cWhy not?\xe2\x80\x9d") == "Why not?");
  CHECK_FALSE(postprocess_question("Tides are caused by the moon.").has_value());
  CHECK_FALSE(postprocess_question("?").has_value());
}

TEST_CASE("follow-up generation retries once") {
  RelatedKnowledge k{"W.", "W. More.", "w"};
  ScriptedChat two({"What is X? What is Y?"});
  CHECK(generate_followup(kQa, k, two, PromptSet(), {}).text == "What is X?");

  ScriptedChat flat({"A statement.", "Another statement."});
  CHECK(code_of([&] { generate_followup(kQa, k, flat, PromptSet(), {}); }) == ErrorCode::NonQuestionOutput);

  ScriptedChat dup({kQa.question});
  CHECK(code_of([&] { generate_followup(kQa, k, dup, PromptSet(), {}); }) == ErrorCode::DuplicateQuestion);

  ScriptedChat recover({"A statement.", "Is it?"});
  CHECK(generate_followup(kQa, k, recover, PromptSet(), {}).text == "Is it?");

  RelatedKnowledge broken{"W.", "X.", "w"};
  CHECK_THROWS(generate_followup(kQa, broken, recover, PromptSet(), {}));
}

TEST_CASE("mock backend fusion on the speed of sound page") {
  auto cfg = fixtures::mock_config();
  auto b = make_backends(cfg);
  auto page = b.pages->fetch_page("Speed of sound");
  GenerationParams params;
  params.seed = 3;
  auto k = continue_knowledge(fixtures::speed_of_sound(), page.definition, "speed of sound", *b.chat, PromptSet(),
                              params);
  CHECK(k.fused_text.find("343 m/s") != std::string::npos);
  CHECK(k.fused_text.rfind(page.definition, 0) == 0);
  CHECK(k.continuation().size() > 10);
  auto q = generate_followup(fixtures::speed_of_sound(), k, *b.chat, PromptSet(), params);
  CHECK_FALSE(q.text.empty());
  CHECK(q.text.back() == '?');
  CHECK(q.text != fixtures::speed_of_sound().question);
}
