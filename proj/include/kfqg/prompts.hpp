#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <string_view>

namespace kfqg {

/// A prompt with {slot} placeholders. Unknown slots are left untouched and
/// substituted values are never re-scanned.
class PromptTemplate {
 public:
  PromptTemplate() = default;
  PromptTemplate(std::string name, std::string text);

  const std::string& name() const { return name_; }
  const std::string& text() const { return text_; }
  /// FNV-1a of the template text, hex encoded; recorded in traces.
  const std::string& hash() const { return hash_; }

  std::string render(const std::map<std::string, std::string, std::less<>>& slots) const;

 private:
  std::string name_;
  std::string text_;
  std::string hash_;
};

namespace prompt_names {
inline constexpr std::string_view kExtraction = "extraction";
inline constexpr std::string_view kExtractionMore = "extraction_more";
inline constexpr std::string_view kExpansion = "expansion";
inline constexpr std::string_view kDefinition = "definition";
inline constexpr std::string_view kContinuation = "continuation";
inline constexpr std::string_view kFollowup = "followup";
inline constexpr std::string_view kAnswer = "answer";
}  // namespace prompt_names

/// Built-in text for a template name. Throws InvalidArgument for unknown names.
const std::string& default_prompt_text(std::string_view name);

/// The full set of templates used by the pipeline. Anything missing from a
/// prompts directory falls back to the built-in text.
class PromptSet {
 public:
  PromptSet();

  /// Reads `<dir>/<name>.txt` for every known template (one trailing newline
  /// is dropped).
  static PromptSet load_dir(const std::filesystem::path& dir);

  const PromptTemplate& get(std::string_view name) const;
  const std::map<std::string, PromptTemplate, std::less<>>& all() const { return templates_; }

 private:
  std::map<std::string, PromptTemplate, std::less<>> templates_;
};

}  // namespace kfqg
