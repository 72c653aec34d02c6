#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kfqg {

enum class ErrorCode {
  InvalidArgument,
  EmptyPrompt,
  BackendUnreachable,
  RateLimited,
  EmptyCompletion,
  TokenizationFailure,
  PageNotFound,
  ExtractionUnparseable,
  EmptyCandidates,
  GraphTooSmall,
  KeyMismatch,
  EmptyContinuation,
  NonQuestionOutput,
  DuplicateQuestion,
  FileNotFound,
  AllLinesMalformed,
  CorpusTooSmall,
  EmptyAfterFiltering,
  NoNgrams,
  NoTokens,
  MissingTrace,
  InvalidConfig,
};

/// Stable kebab-case name used in traces, JSON output and HTTP error bodies.
std::string_view to_string(ErrorCode code);

/// Whether a backend call that failed with `code` may be retried.
bool is_retryable(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message, std::string stage = {})
      : std::runtime_error(message), code_(code), stage_(std::move(stage)) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& stage() const noexcept { return stage_; }

  /// Copy of this error tagged with a pipeline stage (keeps an existing tag).
  Error with_stage(std::string stage) const {
    return Error(code_, what(), stage_.empty() ? std::move(stage) : stage_);
  }

 private:
  ErrorCode code_;
  std::string stage_;
};

}  // namespace kfqg
